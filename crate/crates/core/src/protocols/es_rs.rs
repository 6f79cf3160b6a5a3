//! Entanglement-sharing cover turned into a code that additionally shares
//! uniform randomness: the Schmidt basis of the environment/decoder residue
//! is hashed into `M̄` outcomes measured on each side.

use super::{Channel, Dm, Mat, Povm, AUDIT_SLACK};
use crate::channel::compose;
use crate::error::{Error, Result};
use crate::hashing::{build_classical_hash, HashEncoder, HashOptions};
use crate::linalg::{self, creal, CVec};
use crate::measures::Pmf;
use crate::state::{fidelity, partial_trace, purify, schmidt_decompose, DensityMatrixT, HermitianOperatorT, PovmT, PureStateT};

/// Cover ES code: shared state on `Ã ⊗ A^n`, decoder `B^n → B̃` and the
/// warden's channel.
#[derive(Debug, Clone)]
pub struct EsCode {
    m: usize,
    state: Dm,
    decoder: Channel,
    channel: Channel,
    fidelity: f64,
}

impl EsCode {
    pub fn new(m: usize, state: Dm, decoder: Channel, channel: Channel) -> Result<Self> {
        if m == 0 || state.dim() != m * channel.dim_in() {
            return Err(Error::InvalidCover(format!("state dim {} is not M x dim(A^n)", state.dim())));
        }
        if decoder.dim_in() != channel.dim_out() || decoder.dim_out() != m {
            return Err(Error::InvalidCover("decoder must map B^n to C^M".into()));
        }
        let full = Channel::identity(m).tensor(&compose(&decoder, &channel)?)?;
        let fidelity = fidelity(&DensityMatrixT::max_entangled(m), &full.apply(&state)?)?;
        Ok(Self { m, state, decoder, channel, fidelity })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn state(&self) -> &Dm {
        &self.state
    }

    pub fn decoder(&self) -> &Channel {
        &self.decoder
    }

    pub fn channel(&self) -> &Channel {
        &self.channel
    }

    /// `F(Φ^(M), (id ⊗ D∘M)(ρ))`.
    pub fn fidelity(&self) -> f64 {
        self.fidelity
    }

    /// Bob's cover output `M(tr_Ã ρ)`.
    pub fn cover_output(&self) -> Result<Dm> {
        let a = partial_trace(&self.state, &[self.m, self.channel.dim_in()], &[1])?;
        self.channel.apply(&a)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EsAudit {
    pub fidelity: f64,
    pub eps_cover: f64,
    pub zeta_achieved: f64,
    /// `1 − (√ε + ζ)²`.
    pub bound: f64,
    /// `‖ω_B − M(ρ_{A^n})‖₁` for the state actually sent.
    pub b_output_gap: f64,
    pub bound_ok: bool,
}

#[derive(Debug, Clone)]
pub struct StegoEsRsCode {
    pub mbar: usize,
    pub p_x: Vec<f64>,
    pub hash: HashEncoder,
    /// Outcome projectors on the reference and environment.
    pub alice: Povm,
    /// Outcome projectors on the decoder's discarded register.
    pub bob: Povm,
    /// Aligned residual `τ'` on `(R, E, H)`.
    pub tau: CVec<f64>,
    pub dims_reh: [usize; 3],
    pub audit: EsAudit,
}

pub fn build_stego_es_rs(cover: &EsCode, mbar: usize, zeta: f64, opts: HashOptions) -> Result<StegoEsRsCode> {
    if mbar == 0 {
        return Err(Error::BadParameter("M̄ must be positive".into()));
    }
    let m = cover.m;
    let d_a = cover.channel.dim_in();
    let phi = purify(&cover.state)?;
    let d_r = cover.state.dim();
    let v = cover.channel.isometric_extension()?;
    let w = cover.decoder.isometric_extension()?;
    let (k_e, k_h) = (cover.channel.env_dim(), cover.decoder.env_dim());
    // (W ⊗ I_E) V : A^n → B̃ H E
    let wv = linalg::kron(w.matrix(), &linalg::identity(k_e)) * v.matrix();
    let phi_mat = Mat::from_fn(d_r * m, d_a, |r, c| phi.vector()[r * d_a + c]);
    let psi = &phi_mat * wv.transpose();
    // psi rows: (R, Ã); cols: (B̃, H, E)
    let rest = k_h * k_e;
    let norm = (m as f64).sqrt();
    let mut overlap = CVec::<f64>::zeros(d_r * rest);
    for r in 0..d_r {
        for i in 0..m {
            for x in 0..rest {
                overlap[r * rest + x] += psi[(r * m + i, i * rest + x)].unscale(norm);
            }
        }
    }
    let tau_rhe = uhlmann_align(&overlap)?;
    let tau = linalg::permute_vector(&tau_rhe, &[d_r, k_h, k_e], &[0, 2, 1])?;
    let schmidt = schmidt_decompose(&PureStateT::normalized(tau.clone())?, d_r * k_e, k_h)?;
    let p_x = schmidt.probs.clone();
    let hash = build_classical_hash(&Pmf::normalized(p_x.clone())?, mbar, zeta, opts)?;
    let alice = outcome_projectors(&schmidt.a_vectors, &hash.f, mbar);
    let bob = outcome_projectors(&schmidt.b_vectors, &hash.f, mbar);

    // ψ reordered to (Ã, B̃, R, E, H).
    let psi_vec = CVec::from_fn(d_r * m * m * rest, |idx, _| psi[(idx / (m * rest), idx % (m * rest))]);
    let psi_perm = linalg::permute_vector(&psi_vec, &[d_r, m, m, k_h, k_e], &[1, 2, 0, 4, 3])?;
    let d_rest = d_r * k_e * k_h;
    let big = Mat::from_fn(m * m, d_rest, |r, c| psi_perm[r * d_rest + c]);
    let dim_out = m * m * mbar * mbar;
    let mut fin = Mat::zeros(dim_out, dim_out);
    for a in 0..mbar {
        for b in 0..mbar {
            let proj = linalg::kron(alice.elements()[a].matrix(), bob.elements()[b].matrix());
            let cut = &big * proj.transpose();
            let block = &cut * cut.adjoint();
            for i in 0..m * m {
                for j in 0..m * m {
                    let r = (i * mbar + a) * mbar + b;
                    let c = (j * mbar + a) * mbar + b;
                    fin[(r, c)] = block[(i, j)];
                }
            }
        }
    }
    let target = linalg::kron(DensityMatrixT::<f64>::max_entangled(m).matrix(), DensityMatrixT::<f64>::classically_correlated(mbar).matrix());
    let f = fidelity(&DensityMatrixT::from_trusted(target), &DensityMatrixT::from_trusted(linalg::hermitian_part(&fin)))?;

    let sent = &phi_mat * v.matrix().transpose();
    let rho_be = sent.transpose() * sent.map(|z| z.conj());
    let d_b = cover.channel.dim_out();
    let omega = linalg::partial_trace_mat(&rho_be, &[d_b, k_e], &[0])?;
    let gap = super::trace_distance(&omega, cover.cover_output()?.matrix())?;

    let eps = (1.0 - cover.fidelity).max(0.0);
    let zeta_achieved = hash.w_distance;
    let bound = 1.0 - (eps.sqrt() + zeta_achieved).powi(2);
    Ok(StegoEsRsCode {
        mbar,
        p_x,
        hash,
        alice,
        bob,
        tau,
        dims_reh: [d_r, k_e, k_h],
        audit: EsAudit {
            fidelity: f,
            eps_cover: eps,
            zeta_achieved,
            bound,
            b_output_gap: gap,
            bound_ok: f >= bound - AUDIT_SLACK,
        },
    })
}

/// Unit vector maximizing `|⟨τ|v⟩|`, obtained as `T|0⟩` with `T` the unitary
/// polar factor of `v⟨0|`.
fn uhlmann_align(v: &CVec<f64>) -> Result<CVec<f64>> {
    let d = v.len();
    if v.norm() < 1e-12 {
        return Err(Error::Numerical("cover has zero overlap with the maximally entangled state".into()));
    }
    let y = Mat::from_fn(d, d, |r, c| if c == 0 { v[r] } else { creal(0.0) });
    let svd = y.svd(true, true);
    let u = svd.u.ok_or_else(|| Error::Numerical("SVD without U".into()))?;
    let vt = svd.v_t.ok_or_else(|| Error::Numerical("SVD without V".into()))?;
    let t = u * vt;
    Ok(t.column(0).into_owned())
}

/// `Σ_{f(x)=w} |v_x⟩⟨v_x|`, with the orthogonal complement of all `v_x` added to outcome 0.
fn outcome_projectors(vectors: &Mat, f: &[usize], mbar: usize) -> Povm {
    let d = vectors.nrows();
    let mut els = vec![Mat::zeros(d, d); mbar];
    let mut covered = Mat::zeros(d, d);
    for (x, &w) in f.iter().enumerate() {
        let col = vectors.column(x);
        let p = &col * col.adjoint();
        els[w] += &p;
        covered += p;
    }
    els[0] += linalg::identity::<f64>(d) - covered;
    PovmT::from_trusted(els.into_iter().map(|e| HermitianOperatorT::from_trusted(linalg::hermitian_part(&e))).collect())
}

/// `Φ^(2)` through the identity on the first use and `|+⟩` through complete
/// dephasing on the second; the decoder keeps the first output.
pub fn dephasing_demo_cover() -> Result<EsCode> {
    let plus = PureStateT::normalized(CVec::from_vec(vec![creal(1.0), creal(1.0)]))?;
    let state = crate::state::tensor(&DensityMatrixT::max_entangled(2), &DensityMatrixT::from_pure(&plus))?;
    let channel = Channel::identity(2).tensor(&Channel::dephasing(0.5)?)?;
    let decoder = Channel::partial_trace(&[2, 2], &[0])?;
    EsCode::new(2, state, decoder, channel)
}
