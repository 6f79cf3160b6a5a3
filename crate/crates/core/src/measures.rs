//! Entropies, Rényi mutual informations, hypothesis-testing divergence and the
//! one-dimensional searches over the Rényi order used by the rate formulas.
//!
//! Conventions: `log` is base 2. Negative matrix powers act on the support
//! (eigenvalues below [`ZERO_CUT`] are dropped). Smooth min-entropy is smoothed
//! over the trace-distance ball with sub-normalized candidates, for which the
//! optimum is "cap the largest entries at λ and spill the excess".

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::scalar::Real;
use crate::state::{DensityMatrixT, ZERO_CUT};

pub const TOL_PMF: f64 = 1e-10;

/// Probability mass function on `0..len`.
#[derive(Debug, Clone, PartialEq)]
pub struct Pmf {
    probs: Vec<f64>,
}

impl Pmf {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::BadParameter("empty PMF".into()));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::BadParameter("PMF entries must be finite and nonnegative".into()));
        }
        let s: f64 = probs.iter().sum();
        if (s - 1.0).abs() > TOL_PMF {
            return Err(Error::BadParameter(format!("PMF sums to {s}")));
        }
        Ok(Self { probs })
    }

    /// Rescales nonnegative weights to sum to one.
    pub fn normalized(weights: Vec<f64>) -> Result<Self> {
        let s: f64 = weights.iter().sum();
        if !(s > 0.0) {
            return Err(Error::BadParameter("weights sum to zero".into()));
        }
        Self::new(weights.into_iter().map(|w| w / s).collect())
    }

    pub fn uniform(n: usize) -> Self {
        Self { probs: vec![1.0 / n as f64; n] }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn max(&self) -> f64 {
        self.probs.iter().copied().fold(0.0, f64::max)
    }

    pub fn l1_distance(&self, other: &[f64]) -> f64 {
        self.probs.iter().zip(other).map(|(a, b)| (a - b).abs()).sum()
    }
}

/// `ρ_XB = Σ_x P(x) |x⟩⟨x| ⊗ ρ^x`.
#[derive(Debug, Clone)]
pub struct CqStateT<R: Real> {
    pmf: Pmf,
    states: Vec<DensityMatrixT<R>>,
}

impl<R: Real> CqStateT<R> {
    pub fn new(pmf: Pmf, states: Vec<DensityMatrixT<R>>) -> Result<Self> {
        if pmf.len() != states.len() {
            return Err(Error::Shape(format!("{} probabilities but {} states", pmf.len(), states.len())));
        }
        let d = states[0].dim();
        if states.iter().any(|s| s.dim() != d) {
            return Err(Error::Shape("cq branches of different dims".into()));
        }
        Ok(Self { pmf, states })
    }

    pub fn pmf(&self) -> &Pmf {
        &self.pmf
    }

    pub fn states(&self) -> &[DensityMatrixT<R>] {
        &self.states
    }

    pub fn alphabet(&self) -> usize {
        self.pmf.len()
    }

    pub fn dim(&self) -> usize {
        self.states[0].dim()
    }

    fn weights(&self) -> Vec<R> {
        self.pmf.probs.iter().map(|&p| R::lit(p)).collect()
    }

    /// `ρ_B = Σ_x P(x) ρ^x`.
    pub fn marginal_b(&self) -> DensityMatrixT<R> {
        DensityMatrixT::mixture(&self.weights(), &self.states).expect("validated shapes")
    }

    /// Dense `ρ_XB` with `X` as the first factor.
    pub fn joint(&self) -> Result<DensityMatrixT<R>> {
        let (nx, d) = (self.alphabet(), self.dim());
        linalg::check_dim(nx * d)?;
        let mut m = CMat::zeros(nx * d, nx * d);
        for (x, (s, p)) in self.states.iter().zip(self.weights()).enumerate() {
            m.view_mut((x * d, x * d), (d, d)).copy_from(&s.matrix().scale(p));
        }
        Ok(DensityMatrixT::from_trusted(m))
    }
}

fn check_order<R: Real>(a: R) -> Result<()> {
    if a == R::zero() || !a.is_finite() {
        return Err(Error::InvalidOrder);
    }
    Ok(())
}

fn log2<R: Real>(x: R) -> R {
    x.log2()
}

/// `H^a(ρ) = −(1/a) log tr ρ^{1+a}`.
pub fn renyi_entropy<R: Real>(rho: &DensityMatrixT<R>, a: R) -> Result<R> {
    renyi_entropy_spectrum(&rho.eigenvalues()?, a)
}

/// Rényi entropy of a spectrum or PMF (entries below the zero cut are ignored).
pub fn renyi_entropy_spectrum<R: Real>(p: &[R], a: R) -> Result<R> {
    check_order(a)?;
    let cut = R::tol(ZERO_CUT);
    let s = p
        .iter()
        .filter(|&&l| l > cut)
        .fold(R::zero(), |acc, &l| acc + l.powf(R::one() + a));
    Ok(-log2(s) / a)
}

pub fn von_neumann_entropy<R: Real>(rho: &DensityMatrixT<R>) -> Result<R> {
    Ok(shannon_entropy(&rho.eigenvalues()?))
}

pub fn shannon_entropy<R: Real>(p: &[R]) -> R {
    let cut = R::tol(ZERO_CUT);
    p.iter().filter(|&&l| l > cut).fold(R::zero(), |acc, &l| acc - l * log2(l))
}

pub fn binary_entropy(p: f64) -> f64 {
    shannon_entropy(&[p, 1.0 - p])
}

/// `I(X;B) = H(ρ_B) − Σ_x P(x) H(ρ^x)`.
pub fn holevo_information<R: Real>(cq: &CqStateT<R>) -> Result<R> {
    let mut h = von_neumann_entropy(&cq.marginal_b())?;
    for (s, p) in cq.states.iter().zip(cq.weights()) {
        h -= p * von_neumann_entropy(s)?;
    }
    Ok(h)
}

/// Cached eigendecomposition for repeated powers.
#[derive(Debug, Clone)]
struct Spectral<R: Real> {
    vals: Vec<R>,
    vecs: CMat<R>,
}

impl<R: Real> Spectral<R> {
    fn new(m: &CMat<R>) -> Result<Self> {
        let (vals, vecs) = linalg::eigh(m)?;
        Ok(Self { vals, vecs })
    }

    /// Support-restricted power.
    fn pow(&self, a: R) -> CMat<R> {
        let cut = R::tol(ZERO_CUT);
        let v: Vec<R> = self.vals.iter().map(|&l| if l > cut { l.powf(a) } else { R::zero() }).collect();
        linalg::rebuild(&v, &self.vecs)
    }
}

/// `I↑_a(X;B) = −(1/a) log tr(ρ_XB (ρ_X⊗ρ_B)^{a/2} ρ_XB^{−a} (ρ_X⊗ρ_B)^{a/2})`,
/// prepared once and evaluated at many orders.
///
/// Both operators are block diagonal in `x`, so the trace splits into
/// `Σ_x tr(P(x)ρ^x (P(x)ρ_B)^{a/2} (P(x)ρ^x)^{−a} (P(x)ρ_B)^{a/2})`.
#[derive(Debug, Clone)]
pub struct MiUpCurve<R: Real> {
    blocks: Vec<(R, CMat<R>, Spectral<R>)>,
    rho_b: Spectral<R>,
}

impl<R: Real> MiUpCurve<R> {
    pub fn new(cq: &CqStateT<R>) -> Result<Self> {
        let rho_b = Spectral::new(cq.marginal_b().matrix())?;
        let cut = R::tol(ZERO_CUT);
        let mut blocks = Vec::new();
        for (s, p) in cq.states.iter().zip(cq.weights()) {
            if p <= cut {
                continue;
            }
            let m = s.matrix().scale(p);
            let sp = Spectral::new(&m)?;
            blocks.push((p, m, sp));
        }
        Ok(Self { blocks, rho_b })
    }

    pub fn eval(&self, a: R) -> Result<R> {
        check_order(a)?;
        let half = a / R::lit(2.0);
        let cut = R::tol(ZERO_CUT);
        let mut total = R::zero();
        for (p, m, sp) in &self.blocks {
            // (pρ_B)^{a/2} = p^{a/2} ρ_B^{a/2} on the support of ρ_B
            let rb: Vec<R> = self
                .rho_b
                .vals
                .iter()
                .map(|&l| if *p * l > cut { (*p * l).powf(half) } else { R::zero() })
                .collect();
            let b = linalg::rebuild(&rb, &self.rho_b.vecs);
            let inner = sp.pow(-a);
            total += (m * &b * inner * &b).trace().re;
        }
        Ok(-log2(total) / a)
    }
}

pub fn renyi_mi_up<R: Real>(cq: &CqStateT<R>, a: R) -> Result<R> {
    MiUpCurve::new(cq)?.eval(a)
}

/// `I↓_a(X;B) = −(1/a) log Σ_x P(x) tr((ρ^x)^{1−a} ρ_B^a)`.
///
/// Evaluated as `Σ_ij λ_i^{1−a} μ_j^a |⟨e_i|f_j⟩|²` from the two eigenbases; the
/// overlap form stays accurate for negative `a` when `ρ_B` is nearly singular.
#[derive(Debug, Clone)]
pub struct MiDownCurve<R: Real> {
    /// `(P(x), eigenvalues of ρ^x, |⟨e_i|f_j⟩|²)`.
    branches: Vec<(R, Vec<R>, Vec<Vec<R>>)>,
    mu: Vec<R>,
}

impl<R: Real> MiDownCurve<R> {
    pub fn new(cq: &CqStateT<R>) -> Result<Self> {
        let rho_b = Spectral::new(cq.marginal_b().matrix())?;
        let cut = R::tol(ZERO_CUT);
        let mut branches = Vec::new();
        for (s, p) in cq.states.iter().zip(cq.weights()) {
            if p <= cut {
                continue;
            }
            let sp = Spectral::new(s.matrix())?;
            let cross = sp.vecs.adjoint() * &rho_b.vecs;
            let overlaps = (0..cross.nrows())
                .map(|i| (0..cross.ncols()).map(|j| cross[(i, j)].norm_sqr()).collect())
                .collect();
            branches.push((p, sp.vals, overlaps));
        }
        Ok(Self { branches, mu: rho_b.vals })
    }

    pub fn eval(&self, a: R) -> Result<R> {
        check_order(a)?;
        let cut = R::tol(ZERO_CUT);
        let mu_a: Vec<R> = self.mu.iter().map(|&m| if m > cut { m.powf(a) } else { R::zero() }).collect();
        let mut total = R::zero();
        for (p, lam, ov) in &self.branches {
            for (i, &l) in lam.iter().enumerate() {
                if l <= cut {
                    continue;
                }
                let li = l.powf(R::one() - a);
                for (j, &mj) in mu_a.iter().enumerate() {
                    total += *p * li * mj * ov[i][j];
                }
            }
        }
        Ok(-log2(total) / a)
    }
}

pub fn renyi_mi_down<R: Real>(cq: &CqStateT<R>, a: R) -> Result<R> {
    MiDownCurve::new(cq)?.eval(a)
}

/// `D_H^ε(ρ‖σ) = −log min{tr Qσ : 0 ≤ Q ≤ I, tr Qρ ≥ 1−ε}` by the quantum
/// Neyman–Pearson construction. Returns `+∞` when a test with `tr Qσ = 0` exists.
pub fn hypothesis_testing_divergence<R: Real>(rho: &DensityMatrixT<R>, sigma: &DensityMatrixT<R>, eps: R) -> Result<R> {
    if rho.dim() != sigma.dim() {
        return Err(Error::Shape(format!("dims {} and {}", rho.dim(), sigma.dim())));
    }
    if !(eps > R::zero() && eps < R::one()) {
        return Err(Error::BadParameter(format!("ε = {eps} outside (0, 1)")));
    }
    let target = R::one() - eps;
    let cut = R::tol(ZERO_CUT);

    // Kernel of σ first: if it already carries 1−ε of ρ the divergence is infinite.
    let (sv, svec) = linalg::eigh(sigma.matrix())?;
    let ker: Vec<R> = sv.iter().map(|&l| if l <= cut { R::one() } else { R::zero() }).collect();
    let pk = linalg::rebuild(&ker, &svec);
    if (&pk * rho.matrix()).trace().re >= target - R::tol(1e-12) {
        return Ok(R::infinity());
    }

    let positive_mass = |t: R| -> Result<R> {
        let (vals, vecs) = linalg::eigh(&(rho.matrix() - sigma.matrix().scale(t)))?;
        let proj: Vec<R> = vals.iter().map(|&l| if l > R::zero() { R::one() } else { R::zero() }).collect();
        Ok((linalg::rebuild(&proj, &vecs) * rho.matrix()).trace().re)
    };
    let (mut lo, mut hi) = (R::zero(), R::one());
    while positive_mass(hi)? > target {
        lo = hi;
        hi *= R::lit(2.0);
        if hi > R::lit(1e18) {
            return Ok(R::infinity());
        }
    }
    for _ in 0..200 {
        let mid = (lo + hi) / R::lit(2.0);
        if mid <= lo || mid >= hi {
            break;
        }
        if positive_mass(mid)? > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }

    // Greedy fill along the eigenvectors of ρ − tσ at the threshold.
    let (_, vecs) = linalg::eigh(&(rho.matrix() - sigma.matrix().scale(hi)))?;
    let mut got = R::zero();
    let mut cost = R::zero();
    for k in 0..vecs.ncols() {
        if got >= target {
            break;
        }
        let v = vecs.column(k);
        let w = (v.adjoint() * rho.matrix() * v)[(0, 0)].re;
        if w <= cut {
            continue;
        }
        let s = (v.adjoint() * sigma.matrix() * v)[(0, 0)].re.max(R::zero());
        let frac = ((target - got) / w).min(R::one());
        got += frac * w;
        cost += frac * s;
    }
    if cost <= R::zero() {
        return Ok(R::infinity());
    }
    Ok(-log2(cost))
}

/// `−log λ*` with `λ* = min{λ : Σ_x (P(x) − λ)^+ ≤ ε}`.
pub fn smooth_min_entropy_classical<R: Real>(p: &[R], eps: R) -> Result<R> {
    if !(eps >= R::zero() && eps < R::one()) {
        return Err(Error::BadParameter(format!("ε = {eps} outside [0, 1)")));
    }
    let mut v: Vec<R> = p.iter().map(|&x| x.max(R::zero())).collect();
    v.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    let mut prefix = R::zero();
    for k in 0..v.len() {
        prefix += v[k];
        let lambda = (prefix - eps) / R::lit((k + 1) as f64);
        let next = v.get(k + 1).copied().unwrap_or(R::zero());
        if lambda >= next {
            return Ok(-log2(lambda.max(R::zero())));
        }
    }
    Err(Error::Numerical("smoothing level not found".into()))
}

pub fn smooth_min_entropy_quantum<R: Real>(rho: &DensityMatrixT<R>, eps: R) -> Result<R> {
    smooth_min_entropy_classical(&rho.eigenvalues()?, eps)
}

/// Search parameters for an optimum over the Rényi order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrderSearch {
    /// First and last grid point.
    pub grid_lo: f64,
    pub grid_hi: f64,
    pub points: usize,
    /// Hard bounds for refinement and endpoint evaluation.
    pub domain_lo: f64,
    pub domain_hi: f64,
    /// Log-spaced grid (requires a sign-constant range).
    pub log_spaced: bool,
    pub refine_iters: usize,
}

impl OrderSearch {
    /// 199 points on `[0.005, 0.995]` within the domain `[1e-6, 1 − 1e-6]`.
    pub const fn unit_interval() -> Self {
        Self {
            grid_lo: 0.005,
            grid_hi: 0.995,
            points: 199,
            domain_lo: 1e-6,
            domain_hi: 1.0 - 1e-6,
            log_spaced: false,
            refine_iters: 80,
        }
    }

    /// 199 log-spaced points on `[−8, −0.01]`.
    pub const fn negative() -> Self {
        Self {
            grid_lo: -8.0,
            grid_hi: -0.01,
            points: 199,
            domain_lo: -8.0,
            domain_hi: -0.01,
            log_spaced: true,
            refine_iters: 80,
        }
    }

    pub fn with_range(mut self, lo: f64, hi: f64) -> Self {
        self.grid_lo = lo;
        self.grid_hi = hi;
        self.domain_lo = self.domain_lo.min(lo);
        self.domain_hi = self.domain_hi.max(hi);
        self
    }

    pub fn grid(&self) -> Vec<f64> {
        let n = self.points.max(2);
        (0..n)
            .map(|i| {
                let t = i as f64 / (n - 1) as f64;
                if self.log_spaced {
                    let (l0, l1) = (self.grid_lo.abs().ln(), self.grid_hi.abs().ln());
                    self.grid_lo.signum() * (l0 + t * (l1 - l0)).exp()
                } else {
                    self.grid_lo + t * (self.grid_hi - self.grid_lo)
                }
            })
            .collect()
    }

    fn validate(&self) -> Result<()> {
        let ok = self.points >= 2
            && self.domain_lo <= self.grid_lo
            && self.grid_lo < self.grid_hi
            && self.grid_hi <= self.domain_hi
            && !(self.domain_lo <= 0.0 && self.domain_hi >= 0.0)
            && (!self.log_spaced || self.grid_lo.signum() == self.grid_hi.signum());
        if ok {
            Ok(())
        } else {
            Err(Error::BadParameter(format!("order search range {self:?} invalid (must exclude 0)")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrderOptimum {
    pub a: f64,
    pub value: f64,
    /// The optimum sits at an end of the search domain.
    pub boundary: bool,
}

/// Maximizes `f` over the order range: grid scan, endpoints, then golden-section
/// refinement in the bracket around the best grid point.
pub fn sup_over_order<F>(f: F, search: &OrderSearch) -> Result<OrderOptimum>
where
    F: Fn(f64) -> f64 + Sync,
{
    optimize(&|a| f(a), search)
}

/// Minimizes `f` over the order range (same procedure as [`sup_over_order`]).
pub fn inf_over_order<F>(f: F, search: &OrderSearch) -> Result<OrderOptimum>
where
    F: Fn(f64) -> f64 + Sync,
{
    let r = optimize(&|a| -f(a), search)?;
    Ok(OrderOptimum { value: -r.value, ..r })
}

fn optimize(f: &(dyn Fn(f64) -> f64 + Sync), s: &OrderSearch) -> Result<OrderOptimum> {
    s.validate()?;
    let score = |a: f64| {
        let v = f(a);
        if v.is_finite() {
            v
        } else {
            f64::NEG_INFINITY
        }
    };
    let mut pts = vec![s.domain_lo];
    pts.extend(s.grid());
    pts.push(s.domain_hi);
    pts.dedup();
    let vals: Vec<f64> = pts.par_iter().map(|&a| score(a)).collect();
    let (best, &best_v) = vals
        .iter()
        .enumerate()
        .fold((0, &f64::NEG_INFINITY), |acc, (i, v)| if *v > *acc.1 { (i, v) } else { acc });
    if best_v == f64::NEG_INFINITY {
        return Err(Error::NoFiniteValue);
    }
    let mut opt = OrderOptimum { a: pts[best], value: best_v, boundary: false };
    let lo = pts[best.saturating_sub(1)];
    let hi = pts[(best + 1).min(pts.len() - 1)];
    if hi > lo {
        let (a, v) = golden_max(&score, lo, hi, s.refine_iters);
        if v > opt.value {
            opt = OrderOptimum { a, value: v, boundary: false };
        }
    }
    let edge = 1e-9 * (s.domain_hi - s.domain_lo);
    opt.boundary = (opt.a - s.domain_lo).abs() <= edge || (s.domain_hi - opt.a).abs() <= edge;
    Ok(opt)
}

fn golden_max(f: &dyn Fn(f64) -> f64, mut lo: f64, mut hi: f64, iters: usize) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - g * (hi - lo);
    let mut d = lo + g * (hi - lo);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..iters {
        if fc >= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - g * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + g * (hi - lo);
            fd = f(d);
        }
    }
    if fc >= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Dense scan used by tests and oracles: `points` evenly spaced on `[lo, hi]`.
pub fn dense_scan<F: Fn(f64) -> f64 + Sync>(f: F, lo: f64, hi: f64, points: usize) -> (f64, f64) {
    (0..points)
        .into_par_iter()
        .map(|i| {
            let a = lo + (hi - lo) * i as f64 / (points - 1) as f64;
            (a, f(a))
        })
        .filter(|(_, v)| v.is_finite())
        .reduce(|| (f64::NAN, f64::NEG_INFINITY), |x, y| if y.1 > x.1 { y } else { x })
}
