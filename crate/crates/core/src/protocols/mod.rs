//! Cover codes, the four stego constructions, resolvability codebooks and the
//! numerical verifiers for the supporting inequalities.
//!
//! Every builder reports *achieved* quantities recomputed by an audit routine;
//! analytic bounds are checked as inequalities over those audited values.

pub mod cc;
pub mod cc_es;
pub mod es_rs;
pub mod qc_cc;
pub mod resolvability;
pub mod serial;
pub mod verify;

use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::state::{DensityMatrixT, HermitianOperatorT, PovmT, ZERO_CUT};
use crate::channel::QuantumChannelT;

pub use cc::{
    audit_stego_cc, build_stego_cc_noiseless, build_stego_cc_noisy, CcCode, MessageAudit, StegoAudit, StegoCcCode,
};
pub use cc_es::{build_stego_cc_es, Distiller, EdCode, SplitCcCode, StegoCcEsCode, TrivialAligner};
pub use es_rs::{build_stego_es_rs, EsCode, StegoEsRsCode};
pub use qc_cc::{bit_flip_code, build_stego_qc_cc, KrausSplit, QcCode, StegoQcCcCode};
pub use resolvability::{build_resolvability_code, ResolvabilityCode};
pub use verify::{
    random_gentle_instance, verify_gentle_composition, verify_pj_minentropy_bound,
    verify_pj_minentropy_bound_clamped, GentleInstance, GentleReport, PjReport,
};

pub(crate) type Mat = CMat<f64>;
pub(crate) type Dm = DensityMatrixT<f64>;
pub(crate) type Povm = PovmT<f64>;
pub(crate) type Channel = QuantumChannelT<f64>;

/// Absolute slack used by audit inequalities.
pub const AUDIT_SLACK: f64 = 1e-6;
/// Tolerance on the completeness of composite POVMs.
pub const NESTED_TOL: f64 = 1e-8;

/// Square-root measurement for `states`; the unsupported part of the space is
/// split evenly over the outcomes so the result is complete.
pub fn pretty_good_measurement(states: &[Mat]) -> Result<Povm> {
    let first = states.first().ok_or_else(|| Error::Shape("PGM over no states".into()))?;
    let d = first.nrows();
    let mut s = Mat::zeros(d, d);
    for r in states {
        s += r;
    }
    let (vals, vecs) = linalg::eigh(&s)?;
    let inv_sqrt: Vec<f64> = vals.iter().map(|&l| if l > ZERO_CUT { l.powf(-0.5) } else { 0.0 }).collect();
    let support: Vec<f64> = vals.iter().map(|&l| if l > ZERO_CUT { 1.0 } else { 0.0 }).collect();
    let t = linalg::rebuild(&inv_sqrt, &vecs);
    let rest = linalg::identity::<f64>(d) - linalg::rebuild(&support, &vecs);
    let share = rest.unscale(states.len() as f64);
    let elements = states
        .iter()
        .map(|r| HermitianOperatorT::from_trusted(linalg::hermitian_part(&(&t * r * &t + &share))))
        .collect();
    Ok(PovmT::from_trusted(elements))
}

/// `{√Λ Γ^k √Λ}_k` for one outer element.
pub fn nested_elements(outer: &Mat, inner: &[Mat]) -> Result<Vec<Mat>> {
    let root = linalg::psd_sqrt(outer)?;
    Ok(inner.iter().map(|g| linalg::hermitian_part(&(&root * g * &root))).collect())
}

/// `max |Σ E − I|` over the entries.
pub fn completeness_defect(elements: &[Mat]) -> f64 {
    let d = elements[0].nrows();
    let mut s = Mat::zeros(d, d);
    for e in elements {
        s += e;
    }
    linalg::max_abs_diff(&s, &linalg::identity(d))
}

pub(crate) fn expectation(e: &Mat, rho: &Mat) -> f64 {
    (e * rho).trace().re
}

pub(crate) fn trace_distance(a: &Mat, b: &Mat) -> Result<f64> {
    let diff = a - b;
    Ok(linalg::eigvalsh(&diff)?.iter().map(|l| l.abs()).sum())
}

pub(crate) fn average(states: &[Mat]) -> Mat {
    let d = states[0].nrows();
    let mut acc = Mat::zeros(d, d);
    for s in states {
        acc += s;
    }
    acc.unscale(states.len() as f64)
}

pub(crate) fn log2_usize(x: usize) -> f64 {
    (x as f64).log2()
}
