mod common;

use common::*;
use qsteg::channel::{random_povm, IsometryT};
use qsteg::hashing::HashOptions;
use qsteg::linalg::{self, cplx, CMat};
use qsteg::measures::Pmf;
use qsteg::protocols::cc_es::dephasing_demo_cover as cc_es_demo;
use qsteg::protocols::es_rs::dephasing_demo_cover as es_rs_demo;
use qsteg::protocols::qc_cc::orthogonalize_split;
use qsteg::protocols::serial::{from_text, to_text, FromNode, ToNode};
use qsteg::protocols::*;
use qsteg::state::{fidelity, tensor};
use qsteg::{CqState, DensityMatrix, Error, HermitianOperator, Povm, QuantumChannel};

type Mat = CMat<f64>;

fn hadamard() -> Mat {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    Mat::from_fn(2, 2, |r, c| cplx(if r == 1 && c == 1 { -h } else { h }, 0.0))
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Trace norm of a Hermitian matrix through its own eigendecomposition.
fn tnorm(m: &Mat) -> f64 {
    let h = linalg::hermitian_part(m);
    nalgebra_eigs(&h).iter().map(|l| l.abs()).sum()
}

fn nalgebra_eigs(m: &Mat) -> Vec<f64> {
    m.clone().symmetric_eigen().eigenvalues.iter().copied().collect()
}

fn computational_povm(d: usize, labels: &[usize], outcomes: usize) -> Povm {
    Povm::projective(&linalg::identity(d), labels, outcomes).unwrap()
}

// ---------------------------------------------------------------- resolvability

#[test]
fn resolvability_on_noiseless_bits() {
    let p = Pmf::new(vec![0.3, 0.7]).unwrap();
    let cq = CqState::new(p.clone(), vec![DensityMatrix::basis(2, 0), DensityMatrix::basis(2, 1)]).unwrap();
    for seed in 0..10 {
        let code = build_resolvability_code(&cq, 2, 1, seed, 1).unwrap();
        let book = &code.codebooks[0];
        let distinct = book[0] != book[1];
        // Orthogonal outputs: repeated symbols collide in the PGM.
        let expected_rel = if distinct { 1.0 } else { 0.5 };
        assert!((code.reliability - expected_rel).abs() < 1e-12);
        let mut t = [0.0; 2];
        for &x in book {
            t[x] += 0.5;
        }
        let oracle = (t[0] - 0.3f64).abs() + (t[1] - 0.7f64).abs();
        assert!((code.distance - oracle).abs() < 1e-12, "{} vs {oracle}", code.distance);
    }
}

#[test]
fn resolvability_with_constant_output_is_exact() {
    let rho = random_state(3, 4);
    let cq = CqState::new(Pmf::new(vec![0.2, 0.5, 0.3]).unwrap(), vec![rho.clone(), rho.clone(), rho]).unwrap();
    for (m, k) in [(1, 1), (2, 3), (4, 2)] {
        let code = build_resolvability_code(&cq, m, k, 9, 2).unwrap();
        assert!(code.distance < 1e-12);
        assert_eq!(code.decoders.len(), k);
        for d in &code.decoders {
            assert!(d.completeness_defect() < 1e-10);
        }
    }
}

#[test]
fn resolvability_distance_decreases_with_mk() {
    // A non-uniform prior: with P_X uniform half of the M = 2 codebooks hit the type exactly.
    let p = Pmf::new(vec![0.3, 0.7]).unwrap();
    let cq = CqState::new(p, vec![DensityMatrix::basis(2, 0), plus()]).unwrap();
    let mut medians = Vec::new();
    for k in [1usize, 4, 16] {
        let d: Vec<f64> = (0..50).map(|s| build_resolvability_code(&cq, 2, k, s, 1).unwrap().distance).collect();
        medians.push(median(d));
    }
    assert!(medians.windows(2).all(|w| w[1] < w[0]), "{medians:?}");
}

#[test]
fn resolvability_rejects_zero_sizes() {
    let cq = CqState::new(Pmf::uniform(1), vec![DensityMatrix::basis(2, 0)]).unwrap();
    assert!(build_resolvability_code(&cq, 0, 1, 0, 1).is_err());
    assert!(build_resolvability_code(&cq, 1, 0, 0, 1).is_err());
    assert!(build_resolvability_code(&cq, 1, 1, 0, 0).is_err());
}

// ---------------------------------------------------------------- CC, noiseless

fn hadamard_cover(p: f64) -> CcCode {
    let h2 = linalg::kron(&hadamard(), &hadamard());
    let words = vec![
        DensityMatrix::from_pure(&qsteg::PureState::normalized(h2.column(0).into_owned()).unwrap()),
        DensityMatrix::from_pure(&qsteg::PureState::normalized(h2.column(3).into_owned()).unwrap()),
    ];
    let povm = Povm::projective(&h2, &[0, 0, 1, 1], 2).unwrap();
    let ch = QuantumChannel::dephasing(p).unwrap().tensor_power(2).unwrap();
    CcCode::new(2, words, povm, ch).unwrap()
}

#[test]
fn cc_noiseless_trivial_key_is_the_cover() {
    let cover = CcCode::new(
        1,
        vec![DensityMatrix::basis(2, 0), DensityMatrix::basis(2, 1)],
        computational_povm(2, &[0, 1], 2),
        QuantumChannel::identity(2),
    )
    .unwrap();
    let code = build_stego_cc_noiseless(&cover, 1, 0.1, HashOptions::seeded(0)).unwrap();
    assert!(code.audit.dist_trace < 1e-12 && (code.audit.p_decode - 1.0).abs() < 1e-12);
    for (w, enc) in code.encoders[0].iter().enumerate() {
        assert!(max_diff(enc.matrix(), cover.outputs()[w].matrix()) < 1e-12);
    }
}

#[test]
fn cc_noiseless_splits_maximally_mixed_target() {
    let cover = CcCode::new(
        1,
        vec![DensityMatrix::basis(2, 0)],
        computational_povm(2, &[0, 0], 1),
        QuantumChannel::depolarizing(2, 1.0).unwrap(),
    )
    .unwrap();
    let code = build_stego_cc_noiseless(&cover, 2, 0.01, HashOptions::seeded(1)).unwrap();
    let (g0, g1) = (&code.encoders[0][0], &code.encoders[0][1]);
    assert!(max_diff(&(g0.matrix() * g1.matrix()), &linalg::zeros(2, 2)) < 1e-12, "orthogonal pure states");
    assert!((g0.matrix().trace().re - 1.0).abs() < 1e-12 && (fidelity(g0, g0).unwrap() - 1.0).abs() < 1e-12);
    assert!(code.audit.dist_trace < 1e-12);
    assert!((code.audit.p_decode - 1.0).abs() < 1e-12);
    assert!(code.audit.zeta_achieved < 1e-12);
}

#[test]
fn cc_noiseless_audit_against_bounds() {
    for (p, mbar) in [(0.6, 2), (0.3, 2), (0.5, 3), (0.2, 4)] {
        let cover = hadamard_cover(p);
        let code = build_stego_cc_noiseless(&cover, mbar, 0.05, HashOptions::seeded(7)).unwrap();
        let a = &code.audit;
        assert!(a.nested_defect <= 1e-8);
        assert!(code.decoders[0].completeness_defect() <= 1e-8);
        // Independent recomputation of the per-message distance and decoding.
        for w in 0..2 {
            let mut avg = linalg::zeros::<f64>(4, 4);
            let mut hit = 0.0;
            for wb in 0..mbar {
                let idx = code.index(w, wb);
                let s = code.encoders[0][idx].matrix();
                avg += s.unscale(mbar as f64);
                hit += (code.decoders[0].elements()[idx].matrix() * s).trace().re / mbar as f64;
            }
            let dist = tnorm(&(avg - cover.outputs()[w].matrix()));
            let pm = &code.per_message[w];
            assert!((dist - pm.dist).abs() < 1e-9 && (hit - pm.p_decode).abs() < 1e-9);
            assert!(pm.dist <= pm.zeta + 1e-6);
            assert!(pm.p_decode >= 1.0 - pm.zeta - 2.0 * (pm.zeta + pm.eps).sqrt() - 1e-6);
        }
        assert!(a.dist_trace <= a.zeta_achieved + 1e-6, "{a:?}");
        assert!(a.p_decode >= 1.0 - a.zeta_achieved - 2.0 * (a.zeta_achieved + a.eps_cover).sqrt() - 1e-6);
        assert!(a.bound_ok);
    }
}

#[test]
fn cc_noiseless_rejects_zero_mbar() {
    assert!(matches!(
        build_stego_cc_noiseless(&hadamard_cover(0.5), 0, 0.1, HashOptions::seeded(0)),
        Err(Error::BadParameter(_))
    ));
}

// ---------------------------------------------------------------- CC, noisy

fn noisy_cover() -> (CcCode, Vec<CqState>) {
    let words = vec![DensityMatrix::basis(2, 0), DensityMatrix::basis(2, 1)];
    let cover = CcCode::new(1, words, computational_povm(2, &[0, 1], 2), QuantumChannel::depolarizing(2, 0.7).unwrap())
        .unwrap();
    // Under complete dephasing |+⟩ ↦ I/2, so 0.3|w⟩ + 0.7|+⟩ reproduces 0.3|w⟩ + 0.35 I.
    let side = (0..2)
        .map(|w| CqState::new(Pmf::new(vec![0.3, 0.7]).unwrap(), vec![DensityMatrix::basis(2, w), plus()]).unwrap())
        .collect();
    (cover, side)
}

#[test]
fn cc_noisy_reduces_to_noiseless_for_classical_sides() {
    let cover = CcCode::new(
        1,
        vec![DensityMatrix::basis(2, 0), DensityMatrix::basis(2, 1)],
        computational_povm(2, &[0, 1], 2),
        QuantumChannel::identity(2),
    )
    .unwrap();
    let side: Vec<CqState> =
        (0..2).map(|w| CqState::new(Pmf::uniform(1), vec![DensityMatrix::basis(2, w)]).unwrap()).collect();
    let id = QuantumChannel::identity(2);
    let code = build_stego_cc_noisy(&cover, &id, &side, 1, 1, 0.1, 3).unwrap();
    assert!(code.audit.dist_trace < 1e-12 && (code.audit.p_decode - 1.0).abs() < 1e-12);
    assert_eq!(code.audit.key_bits, 0.0);
}

#[test]
fn cc_noisy_symmetric_targets_share_one_distance() {
    let rho = diag(&[0.75, 0.25]);
    let cover = CcCode::new(
        1,
        vec![DensityMatrix::basis(2, 0), DensityMatrix::basis(2, 0)],
        computational_povm(2, &[0, 1], 2),
        QuantumChannel::depolarizing(2, 0.5).unwrap(),
    )
    .unwrap();
    let sigma = CqState::new(Pmf::uniform(2), vec![DensityMatrix::basis(2, 0), plus()]).unwrap();
    let deph = QuantumChannel::dephasing(0.5).unwrap();
    let outs = CqState::new(Pmf::uniform(2), vec![DensityMatrix::basis(2, 0), DensityMatrix::maximally_mixed(2)]).unwrap();
    assert!(max_diff(outs.marginal_b().matrix(), rho.matrix()) < 1e-12);
    let code = build_stego_cc_noisy(&cover, &deph, &[sigma.clone(), sigma], 2, 2, 0.5, 11).unwrap();
    for pm in &code.per_message {
        assert!(pm.dist <= pm.zeta + 1e-12);
    }
}

#[test]
fn cc_noisy_distance_decreases_with_keys() {
    let (cover, side) = noisy_cover();
    let deph = QuantumChannel::dephasing(0.5).unwrap();
    let mut medians = Vec::new();
    for keys in [1usize, 4, 16] {
        let d: Vec<f64> = (0..20)
            .map(|s| {
                let code = build_stego_cc_noisy(&cover, &deph, &side, 2, keys, 0.5, s).unwrap();
                assert!(code.audit.nested_defect <= 1e-8);
                assert!((code.audit.key_bits - (keys as f64).log2()).abs() < 1e-12);
                code.per_message.iter().map(|m| m.dist).sum::<f64>() / 2.0
            })
            .collect();
        medians.push(median(d));
    }
    assert!(medians.windows(2).all(|w| w[1] < w[0]), "{medians:?}");
}

#[test]
fn cc_noisy_validates_side_states() {
    let (cover, mut side) = noisy_cover();
    let deph = QuantumChannel::dephasing(0.5).unwrap();
    side.swap(0, 1);
    assert!(matches!(
        build_stego_cc_noisy(&cover, &deph, &side, 2, 1, 0.1, 0),
        Err(Error::SideStateMismatch(_))
    ));
    assert!(matches!(
        build_stego_cc_noisy(&cover, &deph, &side[..1], 2, 1, 0.1, 0),
        Err(Error::SideStateMismatch(_))
    ));
}

// ---------------------------------------------------------------- ES-RS

#[test]
fn es_rs_dephasing_demo_shares_a_uniform_bit() {
    let cover = es_rs_demo().unwrap();
    let code = build_stego_es_rs(&cover, 2, 0.05, HashOptions::seeded(2)).unwrap();
    assert!((code.p_x[0] - 0.5).abs() < 1e-10 && (code.p_x[1] - 0.5).abs() < 1e-10);
    assert!(code.hash.defect < 1e-10);
    assert!((code.audit.fidelity - 1.0).abs() < 1e-8);
    assert!(code.audit.b_output_gap <= 1e-10);
}

#[test]
fn es_rs_unitary_channel_has_no_randomness() {
    let h = hadamard();
    let ch = QuantumChannel::unitary(h.clone()).unwrap();
    let cover = EsCode::new(2, DensityMatrix::max_entangled(2), QuantumChannel::unitary(h).unwrap(), ch).unwrap();
    assert!((cover.fidelity() - 1.0).abs() < 1e-12);
    let code = build_stego_es_rs(&cover, 1, 0.01, HashOptions::seeded(0)).unwrap();
    assert!((code.p_x[0] - 1.0).abs() < 1e-10);
    assert!(code.audit.fidelity >= 1.0 - 1e-9 && code.audit.bound_ok);
    assert!(code.audit.b_output_gap <= 1e-10);
}

#[test]
fn es_rs_b_output_matches_cover() {
    for (i, p) in [0.1, 0.3, 0.6].into_iter().enumerate() {
        let state = tensor(&random_state(2, 100 + i as u64), &random_state(2, 200 + i as u64)).unwrap();
        let state = DensityMatrix::mixture(&[0.7, 0.3], &[DensityMatrix::max_entangled(2), state]).unwrap();
        let ch = QuantumChannel::depolarizing(2, p).unwrap();
        let cover = EsCode::new(2, state, QuantumChannel::identity(2), ch).unwrap();
        for mbar in [1, 2] {
            let code = build_stego_es_rs(&cover, mbar, 0.1, HashOptions::seeded(i as u64)).unwrap();
            assert!(code.audit.b_output_gap <= 1e-10, "{:?}", code.audit);
            assert!(code.alice.completeness_defect() < 1e-9 && code.bob.completeness_defect() < 1e-9);
            let a = &code.audit;
            assert!((a.bound - (1.0 - (a.eps_cover.sqrt() + a.zeta_achieved).powi(2))).abs() < 1e-12);
        }
    }
}

// ---------------------------------------------------------------- QC-CC

#[test]
fn qc_cc_unitary_cover_is_reproduced() {
    let h = hadamard();
    let cover = QcCode::new(
        IsometryT::new(linalg::identity(2)).unwrap(),
        QuantumChannel::unitary(h.clone()).unwrap(),
        QuantumChannel::unitary(h).unwrap(),
        vec![0],
    )
    .unwrap();
    assert!((cover.c() - 1.0).abs() < 1e-12);
    let code = build_stego_qc_cc(&cover, 1, 0.01, HashOptions::seeded(0)).unwrap();
    let a = &code.audit;
    assert_eq!(a.p_j.len(), 1);
    assert!(a.zeta_achieved < 1e-12 && a.dist_max < 1e-10 && (a.decode_min - 1.0).abs() < 1e-10);
}

#[test]
fn bit_flip_split_weights() {
    for p in [0.0, 0.05, 0.1, 0.25, 0.5] {
        let cover = bit_flip_code(p).unwrap();
        let split = orthogonalize_split(&cover).unwrap();
        let q = 1.0 - p;
        let d = [q.powi(3), p * q * q, p * q * q, p * q * q];
        for (a, b) in split.d.iter().zip(d) {
            assert!((a - b).abs() < 1e-12, "p={p}: {:?}", split.d);
        }
        let total: f64 = d.iter().sum();
        for (a, b) in split.p_j().iter().zip(d) {
            assert!((a - b / total).abs() < 1e-12);
        }
        assert!(!split.relabeled && split.residual < 1e-12);
        assert!((cover.c() - total).abs() < 1e-12);
    }
}

#[test]
fn split_recovers_weights_of_mixed_kraus_labels() {
    let p = 0.2;
    let cover = bit_flip_code(p).unwrap();
    let kraus = cover.channel().kraus().to_vec();
    let u = linalg::haar_isometry::<f64, _>(4, 4, &mut rng(5));
    let idx = [0b000usize, 0b100, 0b010, 0b001];
    let mut mixed = kraus.clone();
    for (a, &ia) in idx.iter().enumerate() {
        let mut acc = linalg::zeros::<f64>(8, 8);
        for (b, &ib) in idx.iter().enumerate() {
            acc += &kraus[ib] * u[(b, a)];
        }
        mixed[ia] = acc;
    }
    let ch = QuantumChannel::new(mixed).unwrap();
    assert!(max_diff(&ch.choi(), &cover.channel().choi()) < 1e-12, "same channel");
    let relabeled =
        QcCode::new(cover.isometry().clone(), cover.decoder().clone(), ch, idx.to_vec()).unwrap();
    let split = orthogonalize_split(&relabeled).unwrap();
    assert!(split.relabeled);
    let mut got = split.d.clone();
    got.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let q = 1.0 - p;
    let want = [p * q * q, p * q * q, p * q * q, q.powi(3)];
    for (a, b) in got.iter().zip(want) {
        assert!((a - b).abs() < 1e-10, "{got:?}");
    }
    let code = build_stego_qc_cc(&relabeled, 2, 0.2, HashOptions::seeded(1)).unwrap();
    assert!(code.audit.polar_residual <= 1e-8 && code.audit.bound_ok, "{:?}", code.audit);
}

#[test]
fn qc_cc_uniform_flips_give_exact_cypher() {
    let cover = bit_flip_code(0.5).unwrap();
    let code = build_stego_qc_cc(&cover, 4, 0.01, HashOptions::seeded(4)).unwrap();
    let a = &code.audit;
    for pj in &a.p_j {
        assert!((pj - 0.25).abs() < 1e-12);
    }
    assert!(a.zeta_achieved < 1e-12 && a.empty_messages == 0);
    assert!((a.decode_min - 1.0).abs() < 1e-10);
    let mut g = code.g.clone();
    g.sort_unstable();
    assert_eq!(g, vec![0, 1, 2, 3]);
}

#[test]
fn qc_cc_structure_and_distance_split() {
    for p in [0.05, 0.1, 0.25] {
        let cover = bit_flip_code(p).unwrap();
        for mbar in [1, 2, 3, 4] {
            let code = build_stego_qc_cc(&cover, mbar, 0.2, HashOptions::seeded(mbar as u64)).unwrap();
            let a = &code.audit;
            assert!(a.polar_residual <= 1e-8 && a.kl_residual <= 1e-8);
            for &cb in &a.c_bar {
                assert!(cb <= cover.c() + 1e-12 && cb >= (1.0 - p).powi(3) - 1e-12, "{:?}", a.c_bar);
            }
            assert!(a.dist_max <= a.eps + a.zeta_achieved + (1.0 - a.c) + 1e-6, "{a:?}");
            assert!(a.decode_min >= 1.0 - a.zeta_achieved - 1e-6);
            assert!(a.bound_ok);
            // Decoder is a channel.
            let mut s = linalg::zeros::<f64>(8, 8);
            for k in code.decoder.kraus() {
                s += k.adjoint() * k;
            }
            assert!(max_diff(&s, &linalg::identity(8)) < 1e-10);
        }
    }
}

/// `D̄_W ∘ M̃ ∘ Ē^w̄` for the repetition code with one twirl unitary per cypher
/// message. Twirling by `X_a` and then applying a correctable `X_b` (b ≠ a)
/// leaves a two-qubit flip, which the decoder turns into a logical `X`:
/// the map is `[(1−p)³ + p(1−p)²] id + 2p(1−p)² X_L` for `a ≠ 0` and `c id` for
/// the identity branch, so only the latter matches the cover constant.
#[test]
fn twirled_recovery_mixes_in_logical_flips() {
    let p = 0.1;
    let q = 1.0 - p;
    let cover = bit_flip_code(p).unwrap();
    let code = build_stego_qc_cc(&cover, 4, 0.2, HashOptions::seeded(2)).unwrap();
    let tilde = cover.channel().restrict(cover.correctable()).unwrap();
    let drop_cypher = QuantumChannel::partial_trace(&[2, 4], &[0]).unwrap();
    let x = qsteg::channel::pauli_x::<f64>();
    let inputs = qsteg::protocols::qc_cc::standard_test_inputs(2, 0).unwrap();
    for (idx, &j) in code.split.kept.iter().enumerate() {
        let w = code.g[idx];
        let chain = qsteg::channel::compose(
            &drop_cypher,
            &qsteg::channel::compose(&code.decoder, &qsteg::channel::compose(&tilde, &code.encoders[w]).unwrap()).unwrap(),
        )
        .unwrap();
        let (a, b) = if j == 0 { (cover.c(), 0.0) } else { (q.powi(3) + p * q * q, 2.0 * p * q * q) };
        for rho in &inputs {
            let r = rho.matrix();
            let want = r.scale(a) + (&x * r * &x).scale(b);
            assert!(max_diff(&chain.apply_matrix(r), &want) < 1e-10, "branch {j}");
        }
    }
}

#[test]
fn qc_cover_validation() {
    let iso = IsometryT::new(linalg::identity::<f64>(2)).unwrap();
    let wide = QuantumChannel::partial_trace(&[2, 2], &[0]).unwrap();
    assert!(matches!(
        QcCode::new(iso, QuantumChannel::identity(2), wide, vec![0]),
        Err(Error::InvalidCover(_))
    ));
    assert!(IsometryT::new(Mat::from_element(2, 2, cplx(1.0, 0.0))).is_err());
}

// ---------------------------------------------------------------- CC-ES

#[test]
fn cc_es_dephasing_demo() {
    let cover = cc_es_demo().unwrap();
    let code = build_stego_cc_es(&cover, &TrivialAligner, 2, None, 0.05, HashOptions::seeded(3)).unwrap();
    let a = &code.audit;
    assert_eq!(code.mbar_cc, 1);
    assert!(a.ent_distance < 1e-9 && a.dist_trace < 1e-9 && (a.reliability - 1.0).abs() < 1e-9);
    assert!(a.nested_defect <= 1e-8 && a.bound_ok);
    assert!(matches!(
        build_stego_cc_es(&cover, &TrivialAligner, 4, None, 0.05, HashOptions::seeded(3)),
        Err(Error::DistillationInfeasible(4))
    ));
}

#[test]
fn cc_es_degenerates_with_pure_first_block() {
    let f1 = vec![DensityMatrix::basis(2, 0), DensityMatrix::basis(2, 0)];
    let f2 = vec![DensityMatrix::basis(2, 0), DensityMatrix::basis(2, 1)];
    let povm = computational_povm(4, &[0, 1, 0, 1], 2);
    let id = QuantumChannel::identity(2);
    let cover = SplitCcCode::new(1, 1, f1, f2, povm, id.clone(), id).unwrap();
    let code = build_stego_cc_es(&cover, &TrivialAligner, 1, Some(1), 0.05, HashOptions::seeded(0)).unwrap();
    let a = &code.audit;
    assert!(a.ent_distance < 1e-9 && a.dist_trace < 1e-9 && (a.reliability - 1.0).abs() < 1e-9);
    assert_eq!(a.key_bits, 0.0);
}

#[test]
fn trivial_aligner_cases() {
    let u = linalg::kron(&hadamard(), &QuantumChannel::unitary(linalg::haar_isometry(2, 2, &mut rng(3))).unwrap().kraus()[0]);
    let rotated = DensityMatrix::new(&u * DensityMatrix::max_entangled(2).matrix() * u.adjoint()).unwrap();
    let code = TrivialAligner.distill(&rotated, 2, 2, 2, 1, 0.01).unwrap();
    assert_eq!(code.l(), 1);
    assert!(code.distance(&rotated).unwrap() <= 1e-9);
    assert!(TrivialAligner.distill(&DensityMatrix::basis(4, 0), 2, 2, 2, 1, 0.01).is_none());
    let v = vec![cplx(0.9f64.sqrt(), 0.0), cplx(0.0, 0.0), cplx(0.0, 0.0), cplx(0.1f64.sqrt(), 0.0)];
    let biased = DensityMatrix::from_pure(&qsteg::PureState::normalized(linalg::CVec::from_vec(v)).unwrap());
    assert!(TrivialAligner.distill(&biased, 2, 2, 2, 1, 0.01).is_none());
    assert!(TrivialAligner.distill(&DensityMatrix::maximally_mixed(4), 2, 2, 1, 1, 0.01).is_none());
}

// ---------------------------------------------------------------- verifiers

#[test]
fn gentle_perfect_measurement() {
    let states = vec![DensityMatrix::basis(3, 0), DensityMatrix::basis(3, 2)];
    let povm = computational_povm(3, &[0, 1, 1], 2);
    let ch = vec![QuantumChannel::depolarizing(3, 0.3).unwrap(), QuantumChannel::identity(3)];
    let r = verify_gentle_composition(&states, &ch, &povm, &Pmf::new(vec![0.4, 0.6]).unwrap()).unwrap();
    assert!(r.lhs < 1e-12 && r.eps < 1e-12 && r.holds);
}

#[test]
fn gentle_uninformative_measurement_closed_form() {
    // Λ^x = q_x I, ρ^x = |x⟩, N^0 = id, N^1 = X: lhs = 4q(1−q), ε = 2q(1−q).
    for q in [0.1, 0.3, 0.5, 0.8] {
        let p = Pmf::new(vec![q, 1.0 - q]).unwrap();
        let povm = Povm::new(vec![
            HermitianOperator::new(linalg::identity::<f64>(2).scale(q)).unwrap(),
            HermitianOperator::new(linalg::identity::<f64>(2).scale(1.0 - q)).unwrap(),
        ])
        .unwrap();
        let states = vec![DensityMatrix::basis(2, 0), DensityMatrix::basis(2, 1)];
        let ch = vec![QuantumChannel::identity(2), QuantumChannel::unitary(qsteg::channel::pauli_x()).unwrap()];
        let r = verify_gentle_composition(&states, &ch, &povm, &p).unwrap();
        assert!((r.lhs - 4.0 * q * (1.0 - q)).abs() < 1e-12, "{r:?}");
        assert!((r.eps - 2.0 * q * (1.0 - q)).abs() < 1e-12);
        assert!((r.bound - (2.0 * r.eps.sqrt() + r.eps)).abs() < 1e-12 && r.holds);
    }
}

#[test]
fn gentle_random_instances() {
    let mut r = rng(77);
    for _ in 0..100 {
        let g = random_gentle_instance(&mut r);
        let rep = verify_gentle_composition(&g.states, &g.channels, &g.povm, &g.p).unwrap();
        assert!(rep.holds, "{rep:?}");
    }
}

#[test]
fn gentle_rejects_shape_mismatch() {
    let povm = random_povm::<f64, _>(2, 3, &mut rng(0));
    let states = vec![DensityMatrix::basis(2, 0); 2];
    let ch = vec![QuantumChannel::identity(2); 2];
    assert!(verify_gentle_composition(&states, &ch, &povm, &Pmf::uniform(2)).is_err());
}

#[test]
fn pj_bound_examples() {
    let perfect = bit_flip_code(0.0).unwrap();
    for delta in [0.0, 0.1, 0.3] {
        let r = verify_pj_minentropy_bound(&perfect, delta).unwrap();
        assert!(r.eps < 1e-12 && (r.lhs - r.rhs).abs() < 1e-9 && r.holds, "{r:?}");
    }
    let h = hadamard();
    let unitary = QcCode::new(
        IsometryT::new(linalg::identity(2)).unwrap(),
        QuantumChannel::unitary(h.clone()).unwrap(),
        QuantumChannel::unitary(h).unwrap(),
        vec![0],
    )
    .unwrap();
    let r = verify_pj_minentropy_bound(&unitary, 0.0).unwrap();
    assert!(r.lhs.abs() < 1e-12 && r.rhs.abs() < 1e-12 && r.holds);

    // p = 0.1: ε = 0.028 and 2√ε ≈ 0.335, so δ = 0.2 is below the threshold.
    let code = bit_flip_code(0.1).unwrap();
    assert!(matches!(verify_pj_minentropy_bound(&code, 0.2), Err(Error::BoundVacuous { .. })));
    let r = verify_pj_minentropy_bound_clamped(&code, 0.2).unwrap();
    assert!(r.clamped && r.delta_env == 0.0 && r.holds, "{r:?}");
    let r = verify_pj_minentropy_bound(&code, 0.4).unwrap();
    assert!(!r.clamped && (r.delta_env - (0.4 - 2.0 * r.eps.sqrt())).abs() < 1e-12 && r.holds, "{r:?}");
    assert!(verify_pj_minentropy_bound(&code, 1.0).is_err());
}

// ---------------------------------------------------------------- serialization

#[test]
fn text_round_trips() {
    let cover = hadamard_cover(0.3);
    let text = to_text(&cover.to_node());
    assert!(text.starts_with("qsteg-text 1\nbegin cc-code\n"));
    let back = CcCode::from_node(&from_text(&text).unwrap()).unwrap();
    assert_eq!(to_text(&back.to_node()), text);
    assert!((back.reliability() - cover.reliability()).abs() < 1e-15);

    let qc = bit_flip_code(0.1).unwrap();
    let text = to_text(&qc.to_node());
    let back = QcCode::from_node(&from_text(&text).unwrap()).unwrap();
    assert_eq!(to_text(&back.to_node()), text);
    assert_eq!(back.correctable(), qc.correctable());

    let stego = build_stego_cc_noiseless(&cover, 2, 0.1, HashOptions::seeded(1)).unwrap();
    let node = stego.to_node();
    assert_eq!(from_text(&to_text(&node)).unwrap(), node);
    let stego = build_stego_qc_cc(&qc, 2, 0.2, HashOptions::seeded(1)).unwrap();
    let node = stego.to_node();
    assert_eq!(from_text(&to_text(&node)).unwrap(), node);
    let cq = CqState::new(Pmf::uniform(2), vec![DensityMatrix::basis(2, 0), plus()]).unwrap();
    let node = build_resolvability_code(&cq, 2, 2, 0, 1).unwrap().to_node();
    assert_eq!(from_text(&to_text(&node)).unwrap(), node);
}

#[test]
fn text_errors_carry_line_numbers() {
    let bad_version = "qsteg-text 9\nbegin povm\nend\n";
    assert!(matches!(from_text(bad_version), Err(Error::Parse { line: 1, .. })));
    let short = "qsteg-text 1\nbegin density-matrix\n  data : matrix 2 2\n    1e0 0e0 0e0 0e0\nend\n";
    assert!(matches!(from_text(short), Err(Error::Parse { line: 5, .. })));
    let wrong_tag = to_text(&DensityMatrix::basis(2, 0).to_node()).replace("density-matrix", "povm");
    assert!(Povm::from_node(&from_text(&wrong_tag).unwrap()).is_err());
}
