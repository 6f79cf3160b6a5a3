//! Closed-form rate and key expressions, optimized over the Rényi order, plus
//! the product-structure, repetition-code and random-subspace experiments.
//!
//! All logarithms are base 2. Rates are clamped at 0; the unclamped value is
//! kept in [`RateResult::raw`].

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::channel::{complementary, haar_random_subspace_rng};
use crate::error::{Error, Result};
use crate::linalg;
use crate::measures::{
    holevo_information, inf_over_order, renyi_entropy_spectrum, sup_over_order, von_neumann_entropy, CqStateT,
    MiDownCurve, MiUpCurve, OrderSearch,
};
use crate::protocols::qc_cc::{orthogonalize_split, QcCode};
use crate::state::{distinct_count, DensityMatrixT};
use crate::QuantumChannel;

type Dm = DensityMatrixT<f64>;

/// The two ν tolerances every noisy-rate report includes.
pub const NU_TOLERANCES: [f64; 2] = [1e-6, 1e-8];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateResult {
    /// `max(raw, 0)`.
    pub value: f64,
    pub raw: f64,
    /// Optimal order, if an optimization was involved.
    pub argmax: Option<f64>,
    pub terms: Vec<(String, f64)>,
    pub boundary: bool,
}

impl RateResult {
    fn new(raw: f64, argmax: Option<f64>, terms: Vec<(String, f64)>, boundary: bool) -> Self {
        Self { value: raw.max(0.0), raw, argmax, terms, boundary }
    }

    pub fn term(&self, name: &str) -> Option<f64> {
        self.terms.iter().find(|(k, _)| k == name).map(|(_, v)| *v)
    }
}

fn check_unit(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x < 1.0 {
        Ok(())
    } else {
        Err(Error::BadParameter(format!("{name} = {x} outside (0, 1)")))
    }
}

fn spectrum(rho: &Dm) -> Result<Vec<f64>> {
    Ok(rho.eigenvalues()?.into_iter().map(|l| l.max(0.0)).collect())
}

/// `min_w sup_{a∈(0,1)} H^a(ρ^w) − (4/a) log(2/ζ)`.
pub fn rate_cc_noiseless(outputs: &[Dm], zeta: f64) -> Result<RateResult> {
    let spectra = outputs.iter().map(spectrum).collect::<Result<Vec<_>>>()?;
    rate_cc_noiseless_spectra(&spectra, zeta, &OrderSearch::unit_interval())
}

/// Same as [`rate_cc_noiseless`] from spectra alone, which allows very large
/// maximally mixed outputs.
pub fn rate_cc_noiseless_spectra(spectra: &[Vec<f64>], zeta: f64, search: &OrderSearch) -> Result<RateResult> {
    check_unit("ζ", zeta)?;
    if spectra.is_empty() {
        return Err(Error::BadParameter("no cover outputs".into()));
    }
    let penalty = (2.0 / zeta).log2();
    let mut best: Option<(usize, crate::measures::OrderOptimum)> = None;
    for (w, sp) in spectra.iter().enumerate() {
        let opt = sup_over_order(|a| renyi_entropy_spectrum(sp, a).unwrap_or(f64::NAN) - 4.0 / a * penalty, search)?;
        if best.as_ref().is_none_or(|(_, b)| opt.value < b.value) {
            best = Some((w, opt));
        }
    }
    let (w, opt) = best.expect("nonempty");
    let terms = vec![
        ("argmin_w".to_string(), w as f64),
        ("entropy".to_string(), renyi_entropy_spectrum(&spectra[w], opt.a)?),
        ("penalty".to_string(), 4.0 / opt.a * penalty),
    ];
    Ok(RateResult::new(opt.value, Some(opt.a), terms, opt.boundary))
}

/// Per-message and overall bounds for the keyed construction.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoisyRate {
    /// `log M̄ = min_w log M̄_w`.
    pub log_mbar: RateResult,
    /// `log K̄`.
    pub log_kbar: RateResult,
    pub per_message: Vec<RateResult>,
    /// The same computation at each of [`NU_TOLERANCES`].
    pub by_nu_tol: Vec<(f64, f64, f64)>,
}

/// Message term for `σ_XB`:
/// `sup_a I↑_a − (1/a) log ν(σ_X⊗σ_B) − (4/a) log(12/ζ)`.
pub fn message_term(sigma: &CqStateT<f64>, zeta: f64, nu_tol: f64, search: &OrderSearch) -> Result<RateResult> {
    check_unit("ζ", zeta)?;
    let nu = nu_product(sigma, nu_tol)? as f64;
    let curve = MiUpCurve::new(sigma)?;
    let c = (12.0 / zeta).log2();
    let opt = sup_over_order(|a| curve.eval(a).unwrap_or(f64::NAN) - nu.log2() / a - 4.0 / a * c, search)?;
    let terms = vec![
        ("mi_up".to_string(), curve.eval(opt.a)?),
        ("nu_xb".to_string(), nu),
        ("penalty".to_string(), 4.0 / opt.a * c),
    ];
    Ok(RateResult::new(opt.value, Some(opt.a), terms, opt.boundary))
}

/// `inf_{a<0} I↓_a + log ν(σ_B) + (2 − 2/a) log(12/ξ)`.
pub fn key_term(sigma: &CqStateT<f64>, xi: f64, nu_tol: f64, search: &OrderSearch) -> Result<RateResult> {
    check_unit("ξ", xi)?;
    let nu = distinct_count(&spectrum(&sigma.marginal_b())?, nu_tol) as f64;
    let curve = MiDownCurve::new(sigma)?;
    let c = (12.0 / xi).log2();
    let opt = inf_over_order(|a| curve.eval(a).unwrap_or(f64::NAN) + nu.log2() + (2.0 - 2.0 / a) * c, search)?;
    let terms = vec![
        ("mi_down".to_string(), curve.eval(opt.a)?),
        ("nu_b".to_string(), nu),
        ("penalty".to_string(), (2.0 - 2.0 / opt.a) * c),
    ];
    Ok(RateResult { value: opt.value, raw: opt.value, argmax: Some(opt.a), terms, boundary: opt.boundary })
}

/// `ν(σ_X ⊗ σ_B)`: distinct values among `P(x) λ_i(σ_B)`.
fn nu_product(sigma: &CqStateT<f64>, tol: f64) -> Result<usize> {
    let lb = spectrum(&sigma.marginal_b())?;
    let prods: Vec<f64> = sigma.pmf().probs().iter().flat_map(|&p| lb.iter().map(move |&l| p * l)).collect();
    Ok(distinct_count(&prods, tol))
}

/// Rate pair for side states `σ_XB^w` (outputs already through the true channel).
/// The key bound is `max_w {key_term_w − log M̄_w + 1}` with `log M̄_w` clamped.
pub fn rate_cc_noisy(side: &[CqStateT<f64>], zeta: f64, xi: f64, nu_tol: f64) -> Result<NoisyRate> {
    rate_cc_noisy_with(side, zeta, xi, nu_tol, &OrderSearch::unit_interval(), &OrderSearch::negative())
}

pub fn rate_cc_noisy_with(
    side: &[CqStateT<f64>],
    zeta: f64,
    xi: f64,
    nu_tol: f64,
    up: &OrderSearch,
    down: &OrderSearch,
) -> Result<NoisyRate> {
    if side.is_empty() {
        return Err(Error::SideStateMismatch("no side states".into()));
    }
    let dim = side[0].dim();
    if side.iter().any(|s| s.dim() != dim) {
        return Err(Error::SideStateMismatch("side states live on different output spaces".into()));
    }
    let eval = |tol: f64| -> Result<(RateResult, RateResult, Vec<RateResult>)> {
        let per = side.iter().map(|s| message_term(s, zeta, tol, up)).collect::<Result<Vec<_>>>()?;
        let mut key: Option<RateResult> = None;
        for (s, m) in side.iter().zip(&per) {
            let k = key_term(s, xi, tol, down)?;
            let raw = k.raw - m.value + 1.0;
            let mut terms = k.terms.clone();
            terms.push(("log_mbar_w".into(), m.value));
            let cand = RateResult::new(raw, k.argmax, terms, k.boundary);
            if key.as_ref().is_none_or(|b| cand.raw > b.raw) {
                key = Some(cand);
            }
        }
        let mbar = per
            .iter()
            .cloned()
            .reduce(|a, b| if b.raw < a.raw { b } else { a })
            .expect("nonempty");
        Ok((mbar, key.expect("nonempty"), per))
    };
    let (log_mbar, log_kbar, per_message) = eval(nu_tol)?;
    let by_nu_tol = NU_TOLERANCES
        .iter()
        .map(|&t| eval(t).map(|(m, k, _)| (t, m.value, k.value)))
        .collect::<Result<Vec<_>>>()?;
    Ok(NoisyRate { log_mbar, log_kbar, per_message, by_nu_tol })
}

/// `η_α(x) = 2^α / ((x+1)^α − (x−1)^α)`.
pub fn eta(alpha: f64, x: f64) -> f64 {
    alpha.exp2() / ((x + 1.0).powf(alpha) - (x - 1.0).powf(alpha))
}

/// Integrand of the Gaussian rate at order `a`.
pub fn gaussian_integrand(a: f64, nu0: f64, nu1: f64, n: f64, r: f64, zeta: f64) -> f64 {
    let al = 1.0 + a;
    -((n - r) * eta(al, nu0).log2() + r * eta(al, nu1).log2()) / a - 4.0 / a * (2.0 / zeta).log2()
}

/// `sup_{a∈(0,1)} −[(n−r) log η_{1+a}(ν⁰) + r log η_{1+a}(ν¹)]/a − (4/a) log(2/ζ)`.
pub fn rate_gaussian(nu0: f64, nu1: f64, n: f64, r: f64, zeta: f64) -> Result<RateResult> {
    for nu in [nu0, nu1] {
        if !(nu >= 1.0) {
            return Err(Error::InvalidSymplectic(nu));
        }
    }
    check_unit("ζ", zeta)?;
    if !(n >= 1.0 && (0.0..=n).contains(&r)) {
        return Err(Error::BadParameter(format!("need n >= 1 and 0 <= r <= n, got n = {n}, r = {r}")));
    }
    let opt = sup_over_order(|a| gaussian_integrand(a, nu0, nu1, n, r, zeta), &OrderSearch::unit_interval())?;
    let terms = vec![("penalty".to_string(), 4.0 / opt.a * (2.0 / zeta).log2())];
    Ok(RateResult::new(opt.value, Some(opt.a), terms, opt.boundary))
}

#[derive(Debug, Clone)]
pub enum ProductMode {
    Noiseless,
    /// For each input state, candidate decompositions `σ_{XA^k}` (inputs).
    Noisy(Vec<Vec<CqStateT<f64>>>),
}

/// `(n/k)(min_ρ H(M^{⊗k}(ρ)) − δ)` or `(n/k)(inf_ρ sup_σ I(X;B^k) − δ)` over
/// the supplied states on `A^k`.
pub fn rate_product_structure(
    states: &[Dm],
    m: &QuantumChannel,
    n: usize,
    k: usize,
    delta: f64,
    mode: &ProductMode,
) -> Result<RateResult> {
    if k == 0 || n % k != 0 {
        return Err(Error::Divisibility { n, k });
    }
    if states.is_empty() {
        return Err(Error::BadParameter("no input states".into()));
    }
    let mk = m.tensor_power(k)?;
    let blocks = (n / k) as f64;
    let inner: Vec<f64> = match mode {
        ProductMode::Noiseless => states.iter().map(|s| von_neumann_entropy(&mk.apply(s)?)).collect::<Result<_>>()?,
        ProductMode::Noisy(cands) => {
            if cands.len() != states.len() {
                return Err(Error::SideStateMismatch("one candidate list per input state required".into()));
            }
            let mut out = Vec::with_capacity(states.len());
            for (rho, list) in states.iter().zip(cands) {
                let mut best = f64::NEG_INFINITY;
                for sigma in list {
                    let mix = sigma.marginal_b();
                    if linalg::max_abs_diff(mix.matrix(), rho.matrix()) > 1e-8 {
                        return Err(Error::SideStateMismatch("candidate does not average to the input".into()));
                    }
                    let outs = sigma.states().iter().map(|s| mk.apply(s)).collect::<Result<Vec<_>>>()?;
                    best = best.max(holevo_information(&CqStateT::new(sigma.pmf().clone(), outs)?)?);
                }
                if list.is_empty() {
                    return Err(Error::BadParameter("empty candidate list".into()));
                }
                out.push(best);
            }
            out
        }
    };
    let (arg, min) = inner
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, &v)| if v < acc.1 { (i, v) } else { acc });
    let raw = blocks * (min - delta);
    Ok(RateResult::new(raw, None, vec![("argmin_state".into(), arg as f64), ("per_block".into(), min)], false))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SutherlandReport {
    pub lhs: f64,
    pub argmax: f64,
    pub boundary: bool,
    /// `H(p)` of the single-site Kraus weights.
    pub entropy_p: f64,
    pub rhs: f64,
    pub margin: f64,
    pub holds: bool,
}

/// `sup_a H^a(M^{c⊗n}(Π/M))` against `n(H(p) − δ)` where `p_j = tr(F_j†F_j)/d`
/// for the single-site Kraus family, each `F_j ∝` a unitary.
pub fn experiment_sutherland_bound(
    code: &QcCode,
    single: &QuantumChannel,
    n: usize,
    delta: f64,
    search: &OrderSearch,
) -> Result<SutherlandReport> {
    let d = single.dim_in();
    if single.dim_out() != d || single.dim_in().pow(n as u32) != code.channel().dim_in() {
        return Err(Error::InvalidCover("single-site channel does not match the code".into()));
    }
    orthogonalize_split(code)?;
    let mut p = Vec::with_capacity(single.kraus().len());
    for f in single.kraus() {
        let g = f.adjoint() * f;
        let w = g.trace().re / d as f64;
        if linalg::max_abs_diff(&g, &linalg::identity::<f64>(d).scale(w)) > 1e-9 {
            return Err(Error::InvalidCover("single-site Kraus operator is not a scaled unitary".into()));
        }
        p.push(w);
    }
    let entropy_p = crate::measures::shannon_entropy(&p);
    let env = complementary(code.channel(), &code.code_state())?;
    let sp = spectrum(&env)?;
    let opt = sup_over_order(|a| renyi_entropy_spectrum(&sp, a).unwrap_or(f64::NAN), search)?;
    let rhs = n as f64 * (entropy_p - delta);
    Ok(SutherlandReport {
        lhs: opt.value,
        argmax: opt.a,
        boundary: opt.boundary,
        entropy_p,
        rhs,
        margin: opt.value - rhs,
        holds: opt.value >= rhs - 1e-9,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RandomCodeReport {
    pub samples: usize,
    pub mean: f64,
    pub stderr: f64,
    pub min_rank: usize,
    pub bound: f64,
    pub holds: bool,
    pub values: Vec<f64>,
}

/// Cap on `dim_a^n` for the random-subspace experiment.
pub const RANDOM_CODE_MAX_DIM: usize = 256;

/// Haar-random `M`-dimensional subspaces of `A^{⊗n}`; per sample
/// `sup_a H^a(M^{c⊗n}(Π/M))`, compared with `n(log min(rank tr_A VV†, rank tr_E VV†) − δ)`.
pub fn experiment_random_code_entropy(
    m_dim: usize,
    n: usize,
    channel: &QuantumChannel,
    samples: usize,
    seed: u64,
    delta: f64,
) -> Result<RandomCodeReport> {
    let dim_a = channel.dim_in();
    let total = dim_a
        .checked_pow(n as u32)
        .filter(|&t| t <= RANDOM_CODE_MAX_DIM)
        .ok_or(Error::DimensionLimit(dim_a.saturating_pow(n as u32), RANDOM_CODE_MAX_DIM))?;
    if m_dim == 0 || m_dim > total || samples == 0 {
        return Err(Error::BadParameter("need 1 <= M <= dim_a^n and samples >= 1".into()));
    }
    let mn = channel.tensor_power(n)?;
    let search = OrderSearch::unit_interval();
    let values: Vec<f64> = (0..samples)
        .into_par_iter()
        .map(|s| -> Result<f64> {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(s as u64);
            let iso = haar_random_subspace_rng::<f64, _>(total, m_dim, &mut rng)?;
            let rho = DensityMatrixT::from_trusted(iso.projector().unscale(m_dim as f64));
            let sp = spectrum(&complementary(&mn, &rho)?)?;
            Ok(sup_over_order(|a| renyi_entropy_spectrum(&sp, a).unwrap_or(f64::NAN), &search)?.value)
        })
        .collect::<Result<_>>()?;
    let mean = values.iter().sum::<f64>() / samples as f64;
    let var = if samples > 1 {
        values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (samples - 1) as f64
    } else {
        0.0
    };
    let v = channel.isometric_extension()?;
    let proj = v.projector();
    let (d_b, d_e) = (channel.dim_out(), channel.env_dim());
    let rank = |keep: usize| -> Result<usize> {
        let red = linalg::partial_trace_mat(&proj, &[d_b, d_e], &[keep])?;
        Ok(linalg::eigvalsh(&red)?.iter().filter(|&&l| l > 1e-9).count())
    };
    let min_rank = rank(1)?.min(rank(0)?);
    let bound = n as f64 * ((min_rank as f64).log2() - delta);
    Ok(RandomCodeReport {
        samples,
        mean,
        stderr: (var / samples as f64).sqrt(),
        min_rank,
        bound,
        holds: mean >= bound - 1e-9,
        values,
    })
}
