mod common;

use common::*;
use proptest::prelude::*;
use qsteg::linalg::{self, CMat, CVec};
use qsteg::state::{
    distinct_count, distinct_eigenvalue_count, fidelity, matrix_power, partial_trace, purify, schmidt_decompose,
    tensor, trace_norm,
};
use qsteg::{DensityMatrix, Error, HermitianOperator, PureState};

#[test]
fn tensor_examples() {
    let mm = DensityMatrix::maximally_mixed(2);
    let t = tensor(&mm, &mm).unwrap();
    assert!(max_diff(t.matrix(), DensityMatrix::maximally_mixed(4).matrix()) < 1e-15);
    let t = tensor(&DensityMatrix::basis(2, 0), &DensityMatrix::basis(2, 1)).unwrap();
    assert!(max_diff(t.matrix(), DensityMatrix::basis(4, 1).matrix()) < 1e-15);
    let (a, b) = (random_state(2, 1), random_state(2, 2));
    let t = tensor(&a, &b).unwrap();
    let mut tr = linalg::cplx::<f64>(0.0, 0.0);
    for i in 0..2 {
        for j in 0..2 {
            tr += a.matrix()[(i, i)] * b.matrix()[(j, j)];
        }
    }
    assert!((t.matrix().trace() - tr).norm() < 1e-12 && (tr.re - 1.0).abs() < 1e-12);
}

#[test]
fn tensor_dimension_limit() {
    let big = DensityMatrix::maximally_mixed(128);
    assert!(matches!(tensor(&big, &big), Err(Error::DimensionLimit(..))));
}

#[test]
fn partial_trace_examples() {
    let phi = DensityMatrix::max_entangled(2);
    let r = partial_trace(&phi, &[2, 2], &[0]).unwrap();
    assert!(max_diff(r.matrix(), DensityMatrix::maximally_mixed(2).matrix()) < 1e-12);
    let rho = random_state(4, 3);
    let same = partial_trace(&rho, &[2, 2], &[0, 1]).unwrap();
    assert!(max_diff(same.matrix(), rho.matrix()) < 1e-15);
    let (a, b) = (random_state(2, 4), random_state(3, 5));
    let ab = tensor(&a, &b).unwrap();
    let got = partial_trace(&ab, &[2, 3], &[1]).unwrap();
    assert!(max_diff(got.matrix(), &ptrace_oracle(ab.matrix(), &[2, 3], &[1])) < 1e-12);
    assert!(max_diff(got.matrix(), b.matrix()) < 1e-12);
    assert!(matches!(partial_trace(&ab, &[2, 2], &[0]), Err(Error::Shape(_))));
}

#[test]
fn partial_trace_matches_oracle_on_three_factors() {
    let rho = random_state(12, 6);
    for keep in [vec![0], vec![1], vec![2], vec![0, 2], vec![1, 2]] {
        let got = partial_trace(&rho, &[2, 3, 2], &keep).unwrap();
        assert!(max_diff(got.matrix(), &ptrace_oracle(rho.matrix(), &[2, 3, 2], &keep)) < 1e-12, "{keep:?}");
    }
}

#[test]
fn trace_norm_examples() {
    let rho = random_state(3, 7);
    assert!(trace_norm(&rho.minus(&rho).unwrap()).unwrap() < 1e-12);
    let d = DensityMatrix::basis(2, 0).minus(&DensityMatrix::basis(2, 1)).unwrap();
    assert!((trace_norm(&d).unwrap() - 2.0).abs() < 1e-12);
    let d = DensityMatrix::basis(2, 0).minus(&DensityMatrix::maximally_mixed(2)).unwrap();
    let (l0, l1) = eig2(d.matrix());
    assert!((trace_norm(&d).unwrap() - (l0.abs() + l1.abs())).abs() < 1e-12);
    assert!((trace_norm(&d).unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn fidelity_examples() {
    let rho = random_state(3, 8);
    assert!((fidelity(&rho, &rho).unwrap() - 1.0).abs() < 1e-9);
    assert!(fidelity(&DensityMatrix::basis(2, 0), &DensityMatrix::basis(2, 1)).unwrap() < 1e-12);
    let f = fidelity(&DensityMatrix::basis(2, 0), &DensityMatrix::maximally_mixed(2)).unwrap();
    assert!((f - 0.5).abs() < 1e-12);
}

#[test]
fn purify_examples() {
    let v = purify(&DensityMatrix::maximally_mixed(2)).unwrap();
    let s = schmidt_decompose(&v, 2, 2).unwrap();
    assert!((s.probs[0] - 0.5).abs() < 1e-12 && (s.probs[1] - 0.5).abs() < 1e-12);
    let pure = PureState::random(3, &mut rng(9));
    let v = purify(&DensityMatrix::from_pure(&pure)).unwrap();
    let s = schmidt_decompose(&v, 3, 3).unwrap();
    assert!((s.probs[0] - 1.0).abs() < 1e-10);
    let sys = s.b_vectors.column(0).into_owned();
    let overlap = (pure.vector().adjoint() * sys)[(0, 0)];
    assert!((overlap.norm() - 1.0).abs() < 1e-9);
    let rho = random_state(3, 10);
    let v = purify(&rho).unwrap();
    let back = partial_trace(&DensityMatrix::from_pure(&v), &[3, 3], &[1]).unwrap();
    assert!(max_diff(back.matrix(), rho.matrix()) < 1e-9);
}

#[test]
fn distinct_eigenvalue_examples() {
    for d in 1..6 {
        assert_eq!(distinct_eigenvalue_count(&DensityMatrix::maximally_mixed(d).as_operator(), 1e-8).unwrap(), 1);
    }
    assert_eq!(distinct_eigenvalue_count(&diag(&[0.5, 0.3, 0.2]).as_operator(), 1e-8).unwrap(), 3);
    assert_eq!(distinct_count(&[0.5, 0.5 - 1e-12, 1e-12, 0.0], 1e-8), 2);
}

#[test]
fn matrix_power_examples() {
    let sq = matrix_power(&DensityMatrix::maximally_mixed(2), 2.0).unwrap();
    assert!(max_diff(sq.matrix(), &linalg::identity::<f64>(2).unscale(4.0)) < 1e-14);
    let rho = random_state(3, 11);
    assert!(max_diff(matrix_power(&rho, 1.0).unwrap().matrix(), rho.matrix()) < 1e-12);
    let inv = matrix_power(&diag(&[0.5, 0.5, 0.0]), -1.0).unwrap();
    assert!(max_diff(inv.matrix(), &diag(&[0.5, 0.5, 0.0]).matrix().scale(4.0)) < 1e-12);
}

#[test]
fn schmidt_examples() {
    let s = schmidt_decompose(&PureState::max_entangled(2), 2, 2).unwrap();
    assert!((s.probs[0] - 0.5).abs() < 1e-12 && (s.probs[1] - 0.5).abs() < 1e-12);
    let prod = PureState::basis(2, 1).tensor(&PureState::random(3, &mut rng(12))).unwrap();
    let s = schmidt_decompose(&prod, 2, 3).unwrap();
    assert!((s.probs[0] - 1.0).abs() < 1e-12);
    let v = PureState::random(6, &mut rng(13));
    let s = schmidt_decompose(&v, 2, 3).unwrap();
    assert!((s.probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    assert!((s.reconstruct() - v.vector()).norm() < 1e-9);
}

#[test]
fn construction_rejects_invalid_matrices() {
    let mut m = CMat::<f64>::zeros(2, 2);
    m[(0, 0)] = linalg::cplx(1.5, 0.0);
    m[(1, 1)] = linalg::cplx(-0.5, 0.0);
    assert!(matches!(DensityMatrix::new(m), Err(Error::InvalidState(_))));
    let mut m = CMat::<f64>::zeros(2, 2);
    m[(0, 0)] = linalg::cplx(1.0, 0.0);
    m[(0, 1)] = linalg::cplx(0.3, 0.0);
    assert!(matches!(DensityMatrix::new(m), Err(Error::InvalidState(_))));
    let v = CVec::<f64>::from_element(2, linalg::cplx(1.0, 0.0));
    assert!(PureState::new(v).is_err());
    assert!(HermitianOperator::new(CMat::<f64>::zeros(2, 3)).is_err());
}

#[test]
fn generic_over_f32() {
    let a = qsteg::state::DensityMatrixT::<f32>::maximally_mixed(2);
    let b = qsteg::state::DensityMatrixT::<f32>::basis(2, 0);
    let f = fidelity(&a, &b).unwrap();
    assert!((f - 0.5).abs() < 1e-5);
    let t = tensor(&a, &b).unwrap();
    assert_eq!(t.dim(), 4);
}

#[test]
fn fuchs_van_de_graaf() {
    for d in 2..=4 {
        for k in 0..100u64 {
            let r = random_state(d, 1000 * d as u64 + 2 * k);
            let s = DensityMatrix::random(d, 1 + (k as usize % d), &mut rng(1000 * d as u64 + 2 * k + 1));
            let f = fidelity(&r, &s).unwrap();
            let t = trace_norm(&r.minus(&s).unwrap()).unwrap();
            assert!(t >= 2.0 * (1.0 - f.sqrt()) - 1e-9, "d={d} k={k}");
            assert!(t <= 2.0 * (1.0 - f).max(0.0).sqrt() + 1e-9, "d={d} k={k}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn random_states_are_valid(d in 1usize..6, seed in any::<u64>()) {
        let r = random_state(d, seed);
        prop_assert!(DensityMatrix::new(r.matrix().clone()).is_ok());
    }

    #[test]
    fn partial_trace_of_tensor_is_factor(da in 1usize..4, db in 1usize..4, seed in any::<u64>()) {
        let a = random_state(da, seed);
        let b = random_state(db, seed.wrapping_add(1));
        let ab = tensor(&a, &b).unwrap();
        prop_assert!(max_diff(partial_trace(&ab, &[da, db], &[0]).unwrap().matrix(), a.matrix()) < 1e-10);
        prop_assert!(max_diff(partial_trace(&ab, &[da, db], &[1]).unwrap().matrix(), b.matrix()) < 1e-10);
    }

    #[test]
    fn purify_round_trip(d in 1usize..5, seed in any::<u64>()) {
        let rho = random_state(d, seed);
        let v = purify(&rho).unwrap();
        let back = partial_trace(&DensityMatrix::from_pure(&v), &[d, d], &[1]).unwrap();
        prop_assert!(max_diff(back.matrix(), rho.matrix()) < 1e-9);
    }

    #[test]
    fn powers_multiply_to_support_projector(d in 2usize..5, rank in 1usize..5, a in 0.1f64..2.0, seed in any::<u64>()) {
        let rho = DensityMatrix::random(d, rank.min(d), &mut rng(seed));
        let p = matrix_power(&rho, a).unwrap().matrix() * matrix_power(&rho, -a).unwrap().matrix();
        let supp = matrix_power(&rho, 0.0).unwrap();
        prop_assert!(max_diff(&p, supp.matrix()) < 1e-8);
    }

    #[test]
    fn fidelity_symmetric_and_bounded(d in 2usize..5, seed in any::<u64>()) {
        let r = random_state(d, seed);
        let s = random_state(d, seed ^ 0x5555);
        let f1 = fidelity(&r, &s).unwrap();
        let f2 = fidelity(&s, &r).unwrap();
        prop_assert!((f1 - f2).abs() < 1e-9 && (-1e-12..=1.0 + 1e-9).contains(&f1));
    }
}
