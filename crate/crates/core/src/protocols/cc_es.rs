//! Classical cover code whose first block is replaced by half of a purified
//! cover output (entanglement) while a keyed noiseless CC code on the
//! second block carries the classical side information of a distiller.

use super::cc::CcCode;
use super::{completeness_defect, log2_usize, nested_elements, trace_distance, Channel, Dm, Mat, AUDIT_SLACK, NESTED_TOL};
use crate::error::{Error, Result};
use crate::hashing::{build_quantum_hash, HashOptions, QuantumHashCode};
use crate::linalg::{self, creal};
use crate::rates::rate_cc_noiseless;
use crate::state::{purify, schmidt_decompose, tensor, DensityMatrixT, PovmT, PureStateT};

/// One-way entanglement distillation code. `encoder[c]` is the branch of
/// Alice's instrument that announces `c`; `decoder[c]` is Bob's channel given `c`.
#[derive(Debug, Clone)]
pub struct EdCode {
    pub m: usize,
    pub encoder: Vec<Channel>,
    pub decoder: Vec<Channel>,
}

impl EdCode {
    /// Size of the classical message.
    pub fn l(&self) -> usize {
        self.encoder.len()
    }

    /// `‖Σ_c (E_c ⊗ D_c)(ρ_AB) − Φ^(M)‖₁`.
    pub fn distance(&self, rho_ab: &Dm) -> Result<f64> {
        let mut out = Mat::zeros(self.m * self.m, self.m * self.m);
        for (e, d) in self.encoder.iter().zip(&self.decoder) {
            out += e.tensor(d)?.apply_matrix(rho_ab.matrix());
        }
        trace_distance(&out, DensityMatrixT::<f64>::max_entangled(self.m).matrix())
    }
}

/// Oracle for distillation codes; `None` means no code at the requested size.
pub trait Distiller {
    fn distill(&self, rho_ab: &Dm, dim_a: usize, dim_b: usize, m: usize, l: usize, eps: f64) -> Option<EdCode>;
}

/// Succeeds only on pure states whose top `M` Schmidt coefficients are all
/// `1/M` within `ε/(4M)`; the code is a pair of local basis changes.
#[derive(Debug, Clone, Copy, Default)]
pub struct TrivialAligner;

/// Purity threshold for the aligner.
const PURE_TOL: f64 = 1e-9;

impl Distiller for TrivialAligner {
    fn distill(&self, rho_ab: &Dm, dim_a: usize, dim_b: usize, m: usize, _l: usize, eps: f64) -> Option<EdCode> {
        if m == 0 || dim_a * dim_b != rho_ab.dim() {
            return None;
        }
        let (vals, vecs) = linalg::eigh(rho_ab.matrix()).ok()?;
        if vals[0] < 1.0 - PURE_TOL {
            return None;
        }
        let psi = PureStateT::normalized(vecs.column(0).into_owned()).ok()?;
        let sd = schmidt_decompose(&psi, dim_a, dim_b).ok()?;
        if sd.probs.len() < m {
            return None;
        }
        let tol = eps / (4.0 * m as f64);
        if sd.probs[..m].iter().any(|p| (p - 1.0 / m as f64).abs() > tol) {
            return None;
        }
        Some(EdCode {
            m,
            encoder: vec![align(&sd.a_vectors, m)],
            decoder: vec![align(&sd.b_vectors, m)],
        })
    }
}

/// Channel sending `|v_x⟩ ↦ |x⟩` for `x < M` and everything else to `|0⟩`.
fn align(vectors: &Mat, m: usize) -> Channel {
    let d = vectors.nrows();
    let head = vectors.columns(0, m).into_owned();
    let rest = linalg::orthonormal_complement(&head);
    let mut kraus = vec![head.adjoint()];
    for k in 0..rest.ncols() {
        let mut op = Mat::zeros(m, d);
        let row = rest.column(k).adjoint();
        op.row_mut(0).copy_from(&row);
        kraus.push(op);
    }
    Channel::from_trusted(d, m, kraus)
}

/// Cover CC code whose codewords factor as `f₁(w) ⊗ f₂(w)` over blocks of
/// `n₁` and `n₂` uses.
#[derive(Debug, Clone)]
pub struct SplitCcCode {
    pub n1: usize,
    pub n2: usize,
    pub f1: Vec<Dm>,
    pub f2: Vec<Dm>,
    pub m1: Channel,
    pub m2: Channel,
    pub cover: CcCode,
}

impl SplitCcCode {
    pub fn new(n1: usize, n2: usize, f1: Vec<Dm>, f2: Vec<Dm>, povm: super::Povm, m1: Channel, m2: Channel) -> Result<Self> {
        if f1.len() != f2.len() {
            return Err(Error::InvalidCover("blocks carry different message counts".into()));
        }
        let words = f1.iter().zip(&f2).map(|(a, b)| tensor(a, b)).collect::<Result<Vec<_>>>()?;
        let cover = CcCode::new(n1 + n2, words, povm, m1.tensor(&m2)?)?;
        Ok(Self { n1, n2, f1, f2, m1, m2, cover })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CcEsAudit {
    /// `P[Ŵ = W, Ĉ = C]`.
    pub reliability: f64,
    pub reliability_bound: f64,
    /// `‖ρ_{ÃB̃} − Φ^(M̄)‖₁`.
    pub ent_distance: f64,
    pub ent_bound: f64,
    pub dist_trace: f64,
    pub key_bits: f64,
    pub zeta_achieved: f64,
    pub eps_cover: f64,
    pub ed_distance: f64,
    pub nested_defect: f64,
    pub bound_ok: bool,
}

#[derive(Debug, Clone)]
pub struct StegoCcEsCode {
    pub mbar: usize,
    pub mbar_cc: usize,
    pub ed: Vec<EdCode>,
    pub hashes: Vec<QuantumHashCode>,
    /// `√Λ^w (1 ⊗ Γ_w^{w̄}) √Λ^w` at index `w·M̄^CC + w̄`.
    pub decoder: Vec<Mat>,
    pub audit: CcEsAudit,
}

/// `mbar_cc = None` derives `M̄^CC = max(1, ⌊2^{rate}⌋)` from the noiseless
/// rate of the second block.
pub fn build_stego_cc_es(
    cover: &SplitCcCode,
    distiller: &dyn Distiller,
    mbar: usize,
    mbar_cc: Option<usize>,
    zeta: f64,
    opts: HashOptions,
) -> Result<StegoCcEsCode> {
    if mbar == 0 {
        return Err(Error::BadParameter("M̄ must be positive".into()));
    }
    let m = cover.f1.len();
    let out1 = cover.f1.iter().map(|f| cover.m1.apply(f)).collect::<Result<Vec<_>>>()?;
    let out2 = cover.f2.iter().map(|f| cover.m2.apply(f)).collect::<Result<Vec<_>>>()?;
    let mbar_cc = match mbar_cc {
        Some(v) => v.max(1),
        None => {
            let r = rate_cc_noiseless(&out2, zeta)?;
            (r.value.exp2().floor() as usize).max(1)
        }
    };
    let d1 = cover.m1.dim_out();
    let d2 = cover.m2.dim_out();
    let mut ed = Vec::with_capacity(m);
    let mut shared = Vec::with_capacity(m);
    for rho in &out1 {
        let phi = DensityMatrixT::from_pure(&purify(rho)?);
        let code = distiller
            .distill(&phi, d1, d1, mbar, mbar_cc, zeta)
            .ok_or(Error::DistillationInfeasible(mbar))?;
        if code.l() > mbar_cc {
            return Err(Error::DistillationInfeasible(mbar));
        }
        ed.push(code);
        shared.push(phi);
    }
    let mut hashes = Vec::with_capacity(m);
    let mut decoder = Vec::with_capacity(m * mbar_cc);
    for (w, rho) in out2.iter().enumerate() {
        let hash = build_quantum_hash(rho, mbar_cc, zeta, HashOptions { seed: opts.seed.wrapping_add(w as u64), ..opts })?;
        let gammas: Vec<Mat> =
            (0..mbar_cc).map(|wb| linalg::kron(&linalg::identity(d1), hash.projector(wb))).collect();
        decoder.extend(nested_elements(cover.cover.povm().elements()[w].matrix(), &gammas)?);
        hashes.push(hash);
    }
    let nested_defect = completeness_defect(&decoder);
    if nested_defect > NESTED_TOL {
        return Err(Error::Numerical(format!("nested POVM incomplete by {nested_defect:.3e}")));
    }

    let ed_distance = ed
        .iter()
        .zip(&shared)
        .map(|(c, phi)| c.distance(phi))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let hash_zeta = hashes.iter().map(|h| h.defect.max(1.0 - h.success)).fold(0.0, f64::max);
    let zeta_achieved = hash_zeta.max(ed_distance);
    let eps_cover = 1.0 - cover.cover.reliability();

    // Simulation over w, the announced c and the key s₁.
    let roots = decoder.iter().map(linalg::psd_sqrt).collect::<Result<Vec<_>>>()?;
    let dt = mbar;
    let mut fin = Mat::zeros(dt * dt, dt * dt);
    let mut stego = Mat::zeros(d1 * d2, d1 * d2);
    let mut hits = 0.0;
    let weight = 1.0 / (m * mbar_cc) as f64;
    for w in 0..m {
        let code = &ed[w];
        for (c, branch) in code.encoder.iter().enumerate() {
            // (E_c ⊗ id)(φ^w) on (Ã, B^{n₁})
            let x = branch.tensor(&Channel::identity(d1))?.apply_matrix(shared[w].matrix());
            for s1 in 0..mbar_cc {
                let sent = (c + s1) % mbar_cc;
                let y = linalg::kron(&x, hashes[w].g[sent].matrix());
                stego += linalg::partial_trace_mat(&y, &[dt, d1 * d2], &[1])?.scale(weight);
                for wp in 0..m {
                    for wb in 0..mbar_cc {
                        let idx = wp * mbar_cc + wb;
                        let k = linalg::kron(&linalg::identity(dt), &roots[idx]);
                        let post = &k * &y * &k;
                        let p = post.trace().re;
                        if p <= 0.0 {
                            continue;
                        }
                        let c_hat = (wb + mbar_cc - s1) % mbar_cc;
                        if wp == w && c_hat == c {
                            hits += p * weight;
                        }
                        let c_hat = if c_hat < ed[wp].l() { c_hat } else { 0 };
                        let kept = linalg::partial_trace_mat(&post, &[dt, d1, d2], &[0, 1])?;
                        let dec = Channel::identity(dt).tensor(&ed[wp].decoder[c_hat])?;
                        fin += dec.apply_matrix(&kept).scale(weight);
                    }
                }
            }
        }
    }
    let ent_distance = trace_distance(&fin, DensityMatrixT::<f64>::max_entangled(mbar).matrix())?;
    let dist_trace = trace_distance(&stego, &cover.cover.average_output())?;
    let root = (eps_cover + zeta_achieved).max(0.0).sqrt();
    let reliability_bound = 1.0 - zeta_achieved - 2.0 * root;
    let ent_bound = 2.0 * zeta_achieved + 2.0 * root + 2.0 * (zeta_achieved + 2.0 * root).sqrt();
    let audit = CcEsAudit {
        reliability: hits,
        reliability_bound,
        ent_distance,
        ent_bound,
        dist_trace,
        key_bits: log2_usize(mbar_cc),
        zeta_achieved,
        eps_cover,
        ed_distance,
        nested_defect,
        bound_ok: hits >= reliability_bound - AUDIT_SLACK && ent_distance <= ent_bound + AUDIT_SLACK,
    };
    Ok(StegoCcEsCode { mbar, mbar_cc, ed, hashes, decoder, audit })
}

/// Two-message cover: block 1 sends `|+⟩` through complete dephasing, block 2
/// sends `|w⟩` through the identity and is measured in the computational basis.
pub fn dephasing_demo_cover() -> Result<SplitCcCode> {
    let plus = PureStateT::normalized(linalg::CVec::from_vec(vec![creal(1.0), creal(1.0)]))?;
    let plus = DensityMatrixT::from_pure(&plus);
    let f1 = vec![plus.clone(), plus];
    let f2 = vec![DensityMatrixT::basis(2, 0), DensityMatrixT::basis(2, 1)];
    let basis = linalg::identity::<f64>(4);
    let povm = PovmT::projective(&basis, &[0, 1, 0, 1], 2)?;
    SplitCcCode::new(1, 1, f1, f2, povm, Channel::dephasing(0.5)?, Channel::identity(2))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn aligner_accepts_bell_pair_and_rejects_biased_state() {
        let bell = DensityMatrixT::<f64>::max_entangled(2);
        let code = TrivialAligner.distill(&bell, 2, 2, 2, 1, 0.01).unwrap();
        assert!(code.distance(&bell).unwrap() < 1e-9);
        let v = linalg::CVec::from_vec(vec![creal(0.9f64.sqrt()), creal(0.0), creal(0.0), creal(0.1f64.sqrt())]);
        let biased = DensityMatrixT::from_pure(&PureStateT::normalized(v).unwrap());
        assert!(TrivialAligner.distill(&biased, 2, 2, 2, 1, 0.01).is_none());
        let product = DensityMatrixT::<f64>::basis(4, 0);
        assert!(TrivialAligner.distill(&product, 2, 2, 2, 1, 0.01).is_none());
    }

    #[test]
    fn dephasing_demo_shares_a_bell_pair() {
        let cover = dephasing_demo_cover().unwrap();
        let code = build_stego_cc_es(&cover, &TrivialAligner, 2, None, 0.1, HashOptions::seeded(5)).unwrap();
        assert_eq!(code.mbar_cc, 1);
        assert!(code.audit.ent_distance < 1e-9, "{:?}", code.audit);
        assert!((code.audit.reliability - 1.0).abs() < 1e-9);
        assert!(code.audit.dist_trace < 1e-9);
    }
}
