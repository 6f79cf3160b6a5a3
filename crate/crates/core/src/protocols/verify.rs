//! Direct numerical checks of the gentle-measurement composition inequality and
//! the smooth min-entropy bound on `P_J`.

use rand::Rng;

use super::qc_cc::{orthogonalize_split, QcCode};
use super::{trace_distance, Channel, Dm, Mat, Povm};
use crate::channel::{complementary, random_povm};
use crate::error::{Error, Result};
use crate::linalg;
use crate::measures::{smooth_min_entropy_classical, smooth_min_entropy_quantum, Pmf};
use crate::state::DensityMatrixT;

/// Slack on both verifiers.
pub const VERIFY_SLACK: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct GentleInstance {
    pub p: Pmf,
    pub states: Vec<Dm>,
    pub channels: Vec<Channel>,
    pub povm: Povm,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GentleReport {
    pub lhs: f64,
    pub eps: f64,
    /// `2√ε + ε`.
    pub bound: f64,
    pub holds: bool,
}

pub fn verify_gentle_composition(states: &[Dm], channels: &[Channel], povm: &Povm, p: &Pmf) -> Result<GentleReport> {
    let n = p.len();
    if states.len() != n || channels.len() != n || povm.len() != n {
        return Err(Error::Shape(format!(
            "{} states, {} channels, {} POVM elements for {} symbols",
            states.len(),
            channels.len(),
            povm.len(),
            n
        )));
    }
    let d_out = channels[0].dim_out();
    if channels.iter().any(|c| c.dim_out() != d_out || c.dim_in() != povm.dim()) {
        return Err(Error::Shape("channels must share input and output spaces".into()));
    }
    let roots = povm.elements().iter().map(|e| linalg::psd_sqrt(e.matrix())).collect::<Result<Vec<_>>>()?;
    let mut total = Mat::zeros(d_out, d_out);
    let mut success = 0.0;
    for x in 0..n {
        let px = p.probs()[x];
        let rho = states[x].matrix();
        success += px * povm.elements()[x].expectation(&states[x]);
        let mut diff = channels[x].apply_matrix(rho);
        for (xp, r) in roots.iter().enumerate() {
            diff -= channels[xp].apply_matrix(&(r * rho * r));
        }
        total += diff.scale(px);
    }
    let lhs = trace_distance(&total, &Mat::zeros(d_out, d_out))?;
    let eps = (1.0 - success).max(0.0);
    let bound = 2.0 * eps.sqrt() + eps;
    Ok(GentleReport { lhs, eps, bound, holds: lhs <= bound + VERIFY_SLACK })
}

/// Random instance with input dimension and output dimension in `2..=4` and
/// alphabet size in `1..=3`.
pub fn random_gentle_instance<G: Rng + ?Sized>(rng: &mut G) -> GentleInstance {
    let d = rng.random_range(2..=4);
    let d_out = rng.random_range(2..=4);
    let n = rng.random_range(1..=3);
    let weights: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
    let p = Pmf::normalized(weights).expect("positive weights");
    let states = (0..n)
        .map(|_| {
            let rank = rng.random_range(1..=d);
            DensityMatrixT::random(d, rank, rng)
        })
        .collect();
    let channels = (0..n)
        .map(|_| {
            let k = rng.random_range(1..=3);
            Channel::random(d, d_out, k, rng)
        })
        .collect();
    let povm = random_povm(d, n, rng);
    GentleInstance { p, states, channels, povm }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PjReport {
    pub p_j: Vec<f64>,
    pub eps: f64,
    pub delta: f64,
    /// Smoothing used on the environment side.
    pub delta_env: f64,
    pub lhs: f64,
    pub rhs: f64,
    /// `δ − 2√ε` was negative and replaced by 0.
    pub clamped: bool,
    pub holds: bool,
}

/// `H_min^δ(P_J) ≥ H_min^{δ−2√ε}(M^c(Π/M))`; errors when `δ ≤ 2√ε`.
pub fn verify_pj_minentropy_bound(cover: &QcCode, delta: f64) -> Result<PjReport> {
    pj_bound(cover, delta, false)
}

/// As [`verify_pj_minentropy_bound`] but with the environment smoothing
/// clamped to `max(δ − 2√ε, 0)` instead of failing.
pub fn verify_pj_minentropy_bound_clamped(cover: &QcCode, delta: f64) -> Result<PjReport> {
    pj_bound(cover, delta, true)
}

fn pj_bound(cover: &QcCode, delta: f64, clamp: bool) -> Result<PjReport> {
    if !(0.0..1.0).contains(&delta) {
        return Err(Error::BadParameter(format!("δ = {delta} outside [0, 1)")));
    }
    let split = orthogonalize_split(cover)?;
    let p_j = split.p_j();
    let eps = (1.0 - split.c()).max(0.0);
    let threshold = 2.0 * eps.sqrt();
    // With ε = 0 the bound is the equality case and δ' = δ is allowed.
    let vacuous = eps > 0.0 && delta <= threshold;
    if vacuous && !clamp {
        return Err(Error::BoundVacuous { delta, threshold });
    }
    let delta_env = (delta - threshold).max(0.0);
    let env = complementary(cover.channel(), &cover.code_state())?;
    let lhs = smooth_min_entropy_classical(&p_j, delta)?;
    let rhs = smooth_min_entropy_quantum(&env, delta_env)?;
    Ok(PjReport { p_j, eps, delta, delta_env, lhs, rhs, clamped: vacuous, holds: lhs >= rhs - VERIFY_SLACK })
}
