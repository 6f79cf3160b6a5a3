//! Density matrices, pure states, Hermitian operators and POVMs.

use num_complex::Complex;
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, CVec};
use crate::scalar::Real;

pub const TOL_HERM: f64 = 1e-10;
pub const TOL_PSD: f64 = 1e-10;
pub const TOL_TRACE: f64 = 1e-10;
pub const TOL_NORM: f64 = 1e-12;
pub const TOL_POVM: f64 = 1e-9;
/// Eigenvalues below this are treated as exact zeros by [`matrix_power`].
pub const ZERO_CUT: f64 = 1e-12;
pub const DEFAULT_NU_TOL: f64 = 1e-8;

/// Positive, unit-trace Hermitian operator.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrixT<R: Real> {
    data: CMat<R>,
}

/// Hermitian operator (not necessarily positive or normalized).
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperatorT<R: Real> {
    data: CMat<R>,
}

/// Unit vector.
#[derive(Debug, Clone, PartialEq)]
pub struct PureStateT<R: Real> {
    data: CVec<R>,
}

/// Positive operators summing to the identity.
#[derive(Debug, Clone, PartialEq)]
pub struct PovmT<R: Real> {
    elements: Vec<HermitianOperatorT<R>>,
}

fn check_square<R: Real>(m: &CMat<R>) -> Result<usize> {
    if m.nrows() != m.ncols() || m.nrows() == 0 {
        return Err(Error::Shape(format!("expected a nonempty square matrix, got {}x{}", m.nrows(), m.ncols())));
    }
    linalg::check_dim(m.nrows())?;
    Ok(m.nrows())
}

impl<R: Real> DensityMatrixT<R> {
    /// Validates Hermiticity, trace and positivity.
    pub fn new(data: CMat<R>) -> Result<Self> {
        check_square(&data)?;
        let herm = linalg::hermiticity_defect(&data);
        if herm > R::tol(TOL_HERM) {
            return Err(Error::InvalidState(format!("not Hermitian (defect {herm})")));
        }
        let tr = data.trace();
        if (tr.re - R::one()).abs() > R::tol(TOL_TRACE) || tr.im.abs() > R::tol(TOL_TRACE) {
            return Err(Error::InvalidState(format!("trace {tr} differs from 1")));
        }
        let data = linalg::hermitian_part(&data);
        let min = linalg::eigvalsh(&data)?.last().copied().unwrap_or(R::zero());
        if min < -R::tol(TOL_PSD) {
            return Err(Error::InvalidState(format!("negative eigenvalue {min}")));
        }
        Ok(Self { data })
    }

    /// Wraps an operator that is a state by construction (output of a CPTP map, a
    /// normalized projector, ...). Only Hermitian symmetrisation is applied.
    pub(crate) fn from_trusted(data: CMat<R>) -> Self {
        Self { data: linalg::hermitian_part(&data) }
    }

    pub fn from_pure(v: &PureStateT<R>) -> Self {
        Self { data: &v.data * v.data.adjoint() }
    }

    pub fn maximally_mixed(d: usize) -> Self {
        Self { data: linalg::identity::<R>(d).unscale(R::lit(d as f64)) }
    }

    pub fn basis(d: usize, i: usize) -> Self {
        Self::from_pure(&PureStateT::basis(d, i))
    }

    /// Diagonal state; `probs` must be a probability vector.
    pub fn diagonal(probs: &[f64]) -> Result<Self> {
        let v = CVec::from_iterator(probs.len(), probs.iter().map(|&p| linalg::cplx(p, 0.0)));
        Self::new(CMat::from_diagonal(&v))
    }

    /// `|Φ^(M)⟩⟨Φ^(M)|` on `C^M ⊗ C^M`.
    pub fn max_entangled(m: usize) -> Self {
        Self::from_pure(&PureStateT::max_entangled(m))
    }

    /// `(1/M) Σ |ii⟩⟨ii|`.
    pub fn classically_correlated(m: usize) -> Self {
        let mut data = CMat::zeros(m * m, m * m);
        for i in 0..m {
            data[(i * m + i, i * m + i)] = linalg::creal(R::lit(1.0 / m as f64));
        }
        Self { data }
    }

    /// Ginibre-distributed random state of the given rank.
    pub fn random<G: Rng + ?Sized>(d: usize, rank: usize, rng: &mut G) -> Self {
        let g = linalg::ginibre::<R, G>(d, rank.max(1), rng);
        let m = &g * g.adjoint();
        let t = m.trace().re;
        Self::from_trusted(m.unscale(t))
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn matrix(&self) -> &CMat<R> {
        &self.data
    }

    pub fn into_matrix(self) -> CMat<R> {
        self.data
    }

    pub fn eigenvalues(&self) -> Result<Vec<R>> {
        linalg::eigvalsh(&self.data)
    }

    pub fn as_operator(&self) -> HermitianOperatorT<R> {
        HermitianOperatorT { data: self.data.clone() }
    }

    /// `self − other` as a Hermitian operator.
    pub fn minus(&self, other: &Self) -> Result<HermitianOperatorT<R>> {
        if self.dim() != other.dim() {
            return Err(Error::Shape(format!("dims {} and {}", self.dim(), other.dim())));
        }
        Ok(HermitianOperatorT { data: &self.data - &other.data })
    }

    /// Convex mixture `Σ w_i ρ_i`; weights must sum to one.
    pub fn mixture(weights: &[R], states: &[Self]) -> Result<Self> {
        let first = states.first().ok_or_else(|| Error::Shape("empty mixture".into()))?;
        if weights.len() != states.len() {
            return Err(Error::Shape("weights and states differ in length".into()));
        }
        let mut acc = CMat::zeros(first.dim(), first.dim());
        for (w, s) in weights.iter().zip(states) {
            if s.dim() != first.dim() {
                return Err(Error::Shape("mixture of states with different dims".into()));
            }
            acc += s.data.scale(*w);
        }
        Ok(Self::from_trusted(acc))
    }

    pub fn trace_distance(&self, other: &Self) -> Result<R> {
        trace_norm(&self.minus(other)?)
    }
}

impl<R: Real> HermitianOperatorT<R> {
    pub fn new(data: CMat<R>) -> Result<Self> {
        check_square(&data)?;
        let herm = linalg::hermiticity_defect(&data);
        if herm > R::tol(TOL_HERM) {
            return Err(Error::InvalidState(format!("not Hermitian (defect {herm})")));
        }
        Ok(Self { data: linalg::hermitian_part(&data) })
    }

    pub(crate) fn from_trusted(data: CMat<R>) -> Self {
        Self { data: linalg::hermitian_part(&data) }
    }

    pub fn identity(d: usize) -> Self {
        Self { data: linalg::identity(d) }
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn matrix(&self) -> &CMat<R> {
        &self.data
    }

    pub fn eigenvalues(&self) -> Result<Vec<R>> {
        linalg::eigvalsh(&self.data)
    }

    pub fn expectation(&self, rho: &DensityMatrixT<R>) -> R {
        (&self.data * rho.matrix()).trace().re
    }
}

impl<R: Real> PureStateT<R> {
    pub fn new(data: CVec<R>) -> Result<Self> {
        linalg::check_dim(data.len())?;
        let n = data.norm();
        if (n - R::one()).abs() > R::tol(TOL_NORM) {
            return Err(Error::InvalidState(format!("vector norm {n} differs from 1")));
        }
        Ok(Self { data })
    }

    /// Normalizes a nonzero vector.
    pub fn normalized(data: CVec<R>) -> Result<Self> {
        let n = data.norm();
        if n <= R::zero() || !n.is_finite() {
            return Err(Error::InvalidState("cannot normalize a zero vector".into()));
        }
        Ok(Self { data: data.unscale(n) })
    }

    pub fn basis(d: usize, i: usize) -> Self {
        let mut v = CVec::zeros(d);
        v[i] = linalg::creal(R::one());
        Self { data: v }
    }

    pub fn max_entangled(m: usize) -> Self {
        let mut v = CVec::zeros(m * m);
        let a = R::lit(1.0 / (m as f64).sqrt());
        for i in 0..m {
            v[i * m + i] = linalg::creal(a);
        }
        Self { data: v }
    }

    pub fn random<G: Rng + ?Sized>(d: usize, rng: &mut G) -> Self {
        let g = linalg::ginibre::<R, G>(d, 1, rng);
        let v = g.column(0).into_owned();
        let n = v.norm();
        Self { data: v.unscale(n) }
    }

    pub fn dim(&self) -> usize {
        self.data.len()
    }

    pub fn vector(&self) -> &CVec<R> {
        &self.data
    }

    pub fn tensor(&self, other: &Self) -> Result<Self> {
        linalg::check_dim(self.dim() * other.dim())?;
        Ok(Self { data: linalg::kron_vec(&self.data, &other.data) })
    }

    /// Global-phase-insensitive comparison `1 − |⟨u|v⟩|`.
    pub fn phase_distance(&self, other: &Self) -> R {
        R::one() - linalg::cabs(&self.data.dotc(&other.data))
    }
}

impl<R: Real> PovmT<R> {
    /// Validates positivity of each element and completeness.
    pub fn new(elements: Vec<HermitianOperatorT<R>>) -> Result<Self> {
        let first = elements.first().ok_or_else(|| Error::Shape("empty POVM".into()))?;
        let d = first.dim();
        let mut sum = CMat::zeros(d, d);
        for e in &elements {
            if e.dim() != d {
                return Err(Error::Shape("POVM elements of different dims".into()));
            }
            let vals = e.eigenvalues()?;
            if vals.last().copied().unwrap_or(R::zero()) < -R::tol(TOL_PSD) {
                return Err(Error::InvalidState("POVM element is not positive".into()));
            }
            sum += e.matrix();
        }
        let dev = linalg::max_abs_diff(&sum, &linalg::identity(d));
        if dev > R::tol(TOL_POVM) {
            return Err(Error::InvalidState(format!("POVM completeness defect {dev}")));
        }
        Ok(Self { elements })
    }

    pub(crate) fn from_trusted(elements: Vec<HermitianOperatorT<R>>) -> Self {
        Self { elements }
    }

    /// Projective measurement in the columns of a unitary (or isometry onto the full space).
    pub fn projective(basis: &CMat<R>, labels: &[usize], outcomes: usize) -> Result<Self> {
        let d = basis.nrows();
        let mut el = vec![CMat::zeros(d, d); outcomes];
        for (k, &w) in labels.iter().enumerate() {
            let v = basis.column(k);
            el[w] += &v * v.adjoint();
        }
        Self::new(el.into_iter().map(HermitianOperatorT::from_trusted).collect())
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.elements[0].dim()
    }

    pub fn elements(&self) -> &[HermitianOperatorT<R>] {
        &self.elements
    }

    pub fn probabilities(&self, rho: &DensityMatrixT<R>) -> Vec<R> {
        self.elements.iter().map(|e| e.expectation(rho)).collect()
    }

    /// Max-entry deviation of `Σ Λ` from the identity.
    pub fn completeness_defect(&self) -> R {
        let d = self.dim();
        let mut sum = CMat::zeros(d, d);
        for e in &self.elements {
            sum += e.matrix();
        }
        linalg::max_abs_diff(&sum, &linalg::identity(d))
    }
}

/// Kronecker product of two states.
pub fn tensor<R: Real>(a: &DensityMatrixT<R>, b: &DensityMatrixT<R>) -> Result<DensityMatrixT<R>> {
    linalg::check_dim(a.dim() * b.dim())?;
    Ok(DensityMatrixT { data: linalg::kron(&a.data, &b.data) })
}

pub fn tensor_all<R: Real>(states: &[DensityMatrixT<R>]) -> Result<DensityMatrixT<R>> {
    let (first, rest) = states.split_first().ok_or_else(|| Error::Shape("empty tensor product".into()))?;
    rest.iter().try_fold(first.clone(), |acc, s| tensor(&acc, s))
}

pub fn partial_trace<R: Real>(rho: &DensityMatrixT<R>, dims: &[usize], keep: &[usize]) -> Result<DensityMatrixT<R>> {
    Ok(DensityMatrixT::from_trusted(linalg::partial_trace_mat(&rho.data, dims, keep)?))
}

pub fn trace_norm<R: Real>(x: &HermitianOperatorT<R>) -> Result<R> {
    Ok(x.eigenvalues()?.into_iter().fold(R::zero(), |a, l| a + l.abs()))
}

/// `F(ρ, σ) = ‖√ρ √σ‖₁²`.
pub fn fidelity<R: Real>(rho: &DensityMatrixT<R>, sigma: &DensityMatrixT<R>) -> Result<R> {
    if rho.dim() != sigma.dim() {
        return Err(Error::Shape(format!("dims {} and {}", rho.dim(), sigma.dim())));
    }
    for s in [rho, sigma] {
        if s.eigenvalues()?.last().copied().unwrap_or(R::zero()) < -R::tol(TOL_PSD) {
            return Err(Error::InvalidState("fidelity of a non-positive operator".into()));
        }
    }
    let a = linalg::psd_sqrt(&rho.data)?;
    let b = linalg::psd_sqrt(&sigma.data)?;
    let n = linalg::trace_norm_general(&(a * b));
    Ok(n * n)
}

/// Canonical purification `Σ √λ_i |i⟩_R ⊗ |e_i⟩`, reference first.
pub fn purify<R: Real>(rho: &DensityMatrixT<R>) -> Result<PureStateT<R>> {
    let d = rho.dim();
    linalg::check_dim(d * d)?;
    let (vals, vecs) = linalg::eigh(&rho.data)?;
    let mut v = CVec::zeros(d * d);
    for (i, &l) in vals.iter().enumerate() {
        let s = if l > R::zero() { l.sqrt() } else { R::zero() };
        for k in 0..d {
            v[i * d + k] = vecs[(k, i)].scale(s);
        }
    }
    PureStateT::normalized(v)
}

/// Number of clusters of eigenvalues separated by gaps larger than `tol`.
pub fn distinct_eigenvalue_count<R: Real>(x: &HermitianOperatorT<R>, tol: R) -> Result<usize> {
    Ok(distinct_count(&x.eigenvalues()?, tol))
}

pub fn distinct_count<R: Real>(values: &[R], tol: R) -> usize {
    if values.is_empty() {
        return 0;
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    1 + v.windows(2).filter(|w| w[1] - w[0] > tol).count()
}

/// `ρ^a` by functional calculus; eigenvalues below [`ZERO_CUT`] map to zero for every `a`.
pub fn matrix_power<R: Real>(rho: &DensityMatrixT<R>, a: R) -> Result<HermitianOperatorT<R>> {
    Ok(HermitianOperatorT::from_trusted(power_of(&rho.data, a)?))
}

pub(crate) fn power_of<R: Real>(m: &CMat<R>, a: R) -> Result<CMat<R>> {
    let cut = R::tol(ZERO_CUT);
    linalg::spectral_map(m, |l| if l > cut { l.powf(a) } else { R::zero() })
}

/// Schmidt decomposition of a bipartite pure state.
#[derive(Debug, Clone)]
pub struct SchmidtT<R: Real> {
    /// Squared Schmidt coefficients, descending.
    pub probs: Vec<R>,
    /// Columns are the `|α_x⟩`.
    pub a_vectors: CMat<R>,
    /// Columns are the `|β_x⟩`.
    pub b_vectors: CMat<R>,
}

impl<R: Real> SchmidtT<R> {
    pub fn reconstruct(&self) -> CVec<R> {
        let da = self.a_vectors.nrows();
        let db = self.b_vectors.nrows();
        let mut v = CVec::zeros(da * db);
        for (k, &p) in self.probs.iter().enumerate() {
            let a = self.a_vectors.column(k).into_owned();
            let b = self.b_vectors.column(k).into_owned();
            v += linalg::kron_vec(&a, &b).scale(p.sqrt());
        }
        v
    }
}

pub fn schmidt_decompose<R: Real>(v: &PureStateT<R>, dim_a: usize, dim_b: usize) -> Result<SchmidtT<R>> {
    if dim_a * dim_b != v.dim() {
        return Err(Error::Shape(format!("{dim_a} x {dim_b} does not match vector dim {}", v.dim())));
    }
    let psi = CMat::from_fn(dim_a, dim_b, |i, j| v.data[i * dim_b + j]);
    let svd = psi.svd(true, true);
    let u = svd.u.ok_or_else(|| Error::Numerical("SVD without U".into()))?;
    let vt = svd.v_t.ok_or_else(|| Error::Numerical("SVD without V".into()))?;
    let r = svd.singular_values.len();
    let mut order: Vec<usize> = (0..r).collect();
    order.sort_by(|&i, &j| {
        svd.singular_values[j]
            .partial_cmp(&svd.singular_values[i])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let probs = order.iter().map(|&k| svd.singular_values[k] * svd.singular_values[k]).collect();
    let a_vectors = CMat::from_fn(dim_a, r, |i, c| u[(i, order[c])]);
    let b_vectors = CMat::from_fn(dim_b, r, |j, c| vt[(order[c], j)]);
    Ok(SchmidtT { probs, a_vectors, b_vectors })
}

/// `Σ_w ⟨w|ρ|w⟩` style helper: probability of the diagonal entries.
pub fn diagonal_probs<R: Real>(rho: &DensityMatrixT<R>) -> Vec<R> {
    (0..rho.dim()).map(|i| rho.data[(i, i)].re).collect()
}

/// Complex scalar helper used by callers constructing operators from literals.
pub fn c64(re: f64, im: f64) -> Complex<f64> {
    Complex::new(re, im)
}
