//! CPTP maps held as Kraus families.

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::scalar::Real;
use crate::state::{DensityMatrixT, HermitianOperatorT, PovmT};

pub const TOL_KRAUS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct QuantumChannelT<R: Real> {
    dim_in: usize,
    dim_out: usize,
    kraus: Vec<CMat<R>>,
}

/// `V†V = I`.
#[derive(Debug, Clone, PartialEq)]
pub struct IsometryT<R: Real> {
    data: CMat<R>,
}

impl<R: Real> IsometryT<R> {
    pub fn new(data: CMat<R>) -> Result<Self> {
        linalg::check_dim(data.nrows())?;
        if data.nrows() < data.ncols() || data.ncols() == 0 {
            return Err(Error::Shape(format!("{}x{} cannot be an isometry", data.nrows(), data.ncols())));
        }
        let dev = linalg::max_abs_diff(&(data.adjoint() * &data), &linalg::identity(data.ncols()));
        if dev > R::tol(TOL_KRAUS) {
            return Err(Error::BadParameter(format!("V†V deviates from identity by {dev}")));
        }
        Ok(Self { data })
    }

    pub fn dim_in(&self) -> usize {
        self.data.ncols()
    }

    pub fn dim_out(&self) -> usize {
        self.data.nrows()
    }

    pub fn matrix(&self) -> &CMat<R> {
        &self.data
    }

    /// `V V†`.
    pub fn projector(&self) -> CMat<R> {
        &self.data * self.data.adjoint()
    }

    pub fn as_channel(&self) -> QuantumChannelT<R> {
        QuantumChannelT { dim_in: self.dim_in(), dim_out: self.dim_out(), kraus: vec![self.data.clone()] }
    }
}

impl<R: Real> QuantumChannelT<R> {
    /// Validates shapes and `Σ F†F = I`.
    pub fn new(kraus: Vec<CMat<R>>) -> Result<Self> {
        let first = kraus.first().ok_or_else(|| Error::Shape("empty Kraus family".into()))?;
        let (dim_out, dim_in) = first.shape();
        linalg::check_dim(dim_out.max(dim_in))?;
        let mut sum = CMat::zeros(dim_in, dim_in);
        for k in &kraus {
            if k.shape() != (dim_out, dim_in) {
                return Err(Error::Shape("Kraus operators of different shapes".into()));
            }
            sum += k.adjoint() * k;
        }
        let dev = linalg::max_abs_diff(&sum, &linalg::identity(dim_in));
        if dev > R::tol(TOL_KRAUS) {
            return Err(Error::BadParameter(format!("Kraus completeness defect {dev}")));
        }
        Ok(Self { dim_in, dim_out, kraus })
    }

    /// Trace-nonincreasing pieces (a subset of a channel's Kraus family) skip the check.
    pub(crate) fn from_trusted(dim_in: usize, dim_out: usize, kraus: Vec<CMat<R>>) -> Self {
        Self { dim_in, dim_out, kraus }
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    pub fn kraus(&self) -> &[CMat<R>] {
        &self.kraus
    }

    pub fn identity(d: usize) -> Self {
        Self { dim_in: d, dim_out: d, kraus: vec![linalg::identity(d)] }
    }

    pub fn unitary(u: CMat<R>) -> Result<Self> {
        if u.nrows() != u.ncols() {
            return Err(Error::BadParameter("unitary must be square".into()));
        }
        Self::new(vec![u])
    }

    /// `(1−p)ρ + p·I/d`, Kraus family from the Weyl (clock and shift) operators.
    pub fn depolarizing(d: usize, p: f64) -> Result<Self> {
        check_prob(p)?;
        if d < 2 {
            return Err(Error::BadParameter("depolarizing needs d >= 2".into()));
        }
        let d2 = (d * d) as f64;
        let mut kraus = Vec::with_capacity(d * d);
        for a in 0..d {
            for b in 0..d {
                let w = if a == 0 && b == 0 { 1.0 - p + p / d2 } else { p / d2 };
                if w == 0.0 {
                    continue;
                }
                kraus.push(weyl::<R>(d, a, b).scale(R::lit(w.sqrt())));
            }
        }
        Self::new(kraus)
    }

    /// Kraus `{√(1−p) I, √p Z}`.
    pub fn dephasing(p: f64) -> Result<Self> {
        check_prob(p)?;
        Self::new(vec![
            linalg::identity::<R>(2).scale(R::lit((1.0 - p).sqrt())),
            pauli_z::<R>().scale(R::lit(p.sqrt())),
        ])
    }

    /// Kraus `{√(1−p) I, √p X}`.
    pub fn bit_flip(p: f64) -> Result<Self> {
        check_prob(p)?;
        Self::new(vec![
            linalg::identity::<R>(2).scale(R::lit((1.0 - p).sqrt())),
            pauli_x::<R>().scale(R::lit(p.sqrt())),
        ])
    }

    pub fn amplitude_damping(gamma: f64) -> Result<Self> {
        check_prob(gamma)?;
        let mut k0 = CMat::zeros(2, 2);
        k0[(0, 0)] = linalg::cplx(1.0, 0.0);
        k0[(1, 1)] = linalg::cplx((1.0 - gamma).sqrt(), 0.0);
        let mut k1 = CMat::zeros(2, 2);
        k1[(0, 1)] = linalg::cplx(gamma.sqrt(), 0.0);
        Self::new(vec![k0, k1])
    }

    /// Traces out every subsystem not in `keep`.
    pub fn partial_trace(dims: &[usize], keep: &[usize]) -> Result<Self> {
        let d_in: usize = dims.iter().product();
        let traced: Vec<usize> = (0..dims.len()).filter(|i| !keep.contains(i)).collect();
        let traced_dims: Vec<usize> = traced.iter().map(|&i| dims[i]).collect();
        let kept_dims: Vec<usize> = keep.iter().map(|&i| dims[i]).collect();
        if keep.iter().any(|&i| i >= dims.len()) || keep.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Shape(format!("keep set {keep:?} must be increasing and in range")));
        }
        let d_out: usize = kept_dims.iter().product();
        let d_t: usize = traced_dims.iter().product();
        let mut kraus = vec![CMat::zeros(d_out, d_in); d_t];
        for full in 0..d_in {
            let digits = linalg::split_index(full, dims);
            let kd: Vec<usize> = keep.iter().map(|&i| digits[i]).collect();
            let td: Vec<usize> = traced.iter().map(|&i| digits[i]).collect();
            let t = linalg::join_index(&td, &traced_dims);
            kraus[t][(linalg::join_index(&kd, &kept_dims), full)] = linalg::cplx(1.0, 0.0);
        }
        Self::new(kraus)
    }

    /// Random channel from a Haar isometry. `count` is raised to at least
    /// `⌈dim_in / dim_out⌉` so that an isometry exists.
    pub fn random<G: Rng + ?Sized>(dim_in: usize, dim_out: usize, count: usize, rng: &mut G) -> Self {
        let count = count.max(dim_in.div_ceil(dim_out));
        let v = linalg::haar_isometry::<R, G>(dim_out * count, dim_in, rng);
        let kraus = (0..count)
            .map(|j| CMat::from_fn(dim_out, dim_in, |o, i| v[(o * count + j, i)]))
            .collect();
        Self { dim_in, dim_out, kraus }
    }

    pub fn apply(&self, rho: &DensityMatrixT<R>) -> Result<DensityMatrixT<R>> {
        if rho.dim() != self.dim_in {
            return Err(Error::Shape(format!("channel input dim {} but state dim {}", self.dim_in, rho.dim())));
        }
        Ok(DensityMatrixT::from_trusted(self.apply_matrix(rho.matrix())))
    }

    /// `Σ F X F†` on an arbitrary operator (no shape check beyond the product).
    pub fn apply_matrix(&self, x: &CMat<R>) -> CMat<R> {
        let mut out = CMat::zeros(self.dim_out, self.dim_out);
        for k in &self.kraus {
            out += k * x * k.adjoint();
        }
        out
    }

    /// Heisenberg-picture action `Σ F† Y F`.
    pub fn adjoint_apply(&self, y: &CMat<R>) -> CMat<R> {
        let mut out = CMat::zeros(self.dim_in, self.dim_in);
        for k in &self.kraus {
            out += k.adjoint() * y * k;
        }
        out
    }

    /// Kraus family of `self ⊗ other`.
    pub fn tensor(&self, other: &Self) -> Result<Self> {
        linalg::check_dim(self.dim_in * other.dim_in)?;
        linalg::check_dim(self.dim_out * other.dim_out)?;
        let mut kraus = Vec::with_capacity(self.kraus.len() * other.kraus.len());
        for a in &self.kraus {
            for b in &other.kraus {
                kraus.push(linalg::kron(a, b));
            }
        }
        Ok(Self { dim_in: self.dim_in * other.dim_in, dim_out: self.dim_out * other.dim_out, kraus })
    }

    pub fn tensor_power(&self, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::BadParameter("tensor power n must be >= 1".into()));
        }
        linalg::check_dim(self.dim_in.saturating_pow(n as u32))?;
        linalg::check_dim(self.dim_out.saturating_pow(n as u32))?;
        let mut acc = self.clone();
        for _ in 1..n {
            acc = acc.tensor(self)?;
        }
        Ok(acc)
    }

    /// `V = Σ_j F_j ⊗ |j⟩_E`, environment last with dim = number of Kraus operators.
    pub fn isometric_extension(&self) -> Result<IsometryT<R>> {
        let k = self.kraus.len();
        linalg::check_dim(self.dim_out * k)?;
        let mut v = CMat::zeros(self.dim_out * k, self.dim_in);
        for (j, f) in self.kraus.iter().enumerate() {
            for o in 0..self.dim_out {
                for i in 0..self.dim_in {
                    v[(o * k + j, i)] = f[(o, i)];
                }
            }
        }
        IsometryT::new(v)
    }

    pub fn env_dim(&self) -> usize {
        self.kraus.len()
    }

    /// Unnormalized Choi matrix `Σ_ij |i⟩⟨j| ⊗ N(|i⟩⟨j|)`.
    pub fn choi(&self) -> CMat<R> {
        let (di, dout) = (self.dim_in, self.dim_out);
        let mut j = CMat::zeros(di * dout, di * dout);
        for f in &self.kraus {
            // vec(F) = Σ_i |i⟩ ⊗ F|i⟩
            let v = CMat::from_fn(di * dout, 1, |r, _| f[(r % dout, r / dout)]);
            j += &v * v.adjoint();
        }
        j
    }

    /// Keeps the Kraus operators with the given indices (a trace-nonincreasing piece).
    pub fn restrict(&self, indices: &[usize]) -> Result<Self> {
        let kraus = indices
            .iter()
            .map(|&i| {
                self.kraus
                    .get(i)
                    .cloned()
                    .ok_or_else(|| Error::Shape(format!("Kraus index {i} out of range")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_trusted(self.dim_in, self.dim_out, kraus))
    }
}

/// Kraus family of `outer ∘ inner`: all products `G_i F_j`.
pub fn compose<R: Real>(outer: &QuantumChannelT<R>, inner: &QuantumChannelT<R>) -> Result<QuantumChannelT<R>> {
    if inner.dim_out != outer.dim_in {
        return Err(Error::Shape(format!("inner output {} vs outer input {}", inner.dim_out, outer.dim_in)));
    }
    let mut kraus = Vec::with_capacity(outer.kraus.len() * inner.kraus.len());
    for g in &outer.kraus {
        for f in &inner.kraus {
            kraus.push(g * f);
        }
    }
    Ok(QuantumChannelT { dim_in: inner.dim_in, dim_out: outer.dim_out, kraus })
}

/// Environment output `tr_out(V ρ V†)`, entries `tr(F_j ρ F_{j'}†)`.
pub fn complementary<R: Real>(ch: &QuantumChannelT<R>, rho: &DensityMatrixT<R>) -> Result<DensityMatrixT<R>> {
    if rho.dim() != ch.dim_in {
        return Err(Error::Shape(format!("channel input dim {} but state dim {}", ch.dim_in, rho.dim())));
    }
    let k = ch.kraus.len();
    let fr: Vec<CMat<R>> = ch.kraus.iter().map(|f| f * rho.matrix()).collect();
    let mut e = CMat::zeros(k, k);
    for j in 0..k {
        for jp in 0..k {
            e[(j, jp)] = (&fr[j] * ch.kraus[jp].adjoint()).trace();
        }
    }
    Ok(DensityMatrixT::from_trusted(e))
}

/// Isometry onto a Haar-random `m`-dimensional subspace of `C^dim`.
pub fn haar_random_subspace<R: Real>(dim: usize, m: usize, seed: u64) -> Result<IsometryT<R>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    haar_random_subspace_rng(dim, m, &mut rng)
}

pub fn haar_random_subspace_rng<R: Real, G: Rng + ?Sized>(dim: usize, m: usize, rng: &mut G) -> Result<IsometryT<R>> {
    linalg::check_dim(dim)?;
    if m == 0 || m > dim {
        return Err(Error::BadParameter(format!("subspace dim {m} not in 1..={dim}")));
    }
    IsometryT::new(linalg::haar_isometry::<R, G>(dim, m, rng))
}

/// Random POVM `Λ^x = V†(|x⟩⟨x| ⊗ I)V` from a Haar isometry.
pub fn random_povm<R: Real, G: Rng + ?Sized>(d: usize, outcomes: usize, rng: &mut G) -> PovmT<R> {
    let v = linalg::haar_isometry::<R, G>(d * outcomes, d, rng);
    let el = (0..outcomes)
        .map(|x| {
            let block = v.rows(x * d, d).into_owned();
            HermitianOperatorT::from_trusted(block.adjoint() * block)
        })
        .collect();
    PovmT::from_trusted(el)
}

fn check_prob(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::BadParameter(format!("probability {p} outside [0, 1]")))
    }
}

pub fn pauli_x<R: Real>() -> CMat<R> {
    let mut m = CMat::zeros(2, 2);
    m[(0, 1)] = linalg::cplx(1.0, 0.0);
    m[(1, 0)] = linalg::cplx(1.0, 0.0);
    m
}

pub fn pauli_z<R: Real>() -> CMat<R> {
    let mut m = CMat::zeros(2, 2);
    m[(0, 0)] = linalg::cplx(1.0, 0.0);
    m[(1, 1)] = linalg::cplx(-1.0, 0.0);
    m
}

pub fn pauli_y<R: Real>() -> CMat<R> {
    let mut m = CMat::zeros(2, 2);
    m[(0, 1)] = linalg::cplx(0.0, -1.0);
    m[(1, 0)] = linalg::cplx(0.0, 1.0);
    m
}

/// `X^a Z^b` with `X|k⟩ = |k+1⟩`, `Z|k⟩ = ω^k |k⟩`.
fn weyl<R: Real>(d: usize, a: usize, b: usize) -> CMat<R> {
    let mut m = CMat::zeros(d, d);
    for k in 0..d {
        let phase = 2.0 * std::f64::consts::PI * ((b * k) % d) as f64 / d as f64;
        m[((k + a) % d, k)] = Complex::new(R::lit(phase.cos()), R::lit(phase.sin()));
    }
    m
}

/// Channel fixtures that can be named in experiment configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum StandardChannel {
    Identity { dim: usize },
    Depolarizing { p: f64 },
    Dephasing { p: f64 },
    BitFlip { p: f64 },
    AmplitudeDamping { gamma: f64 },
    /// Qubit rotation `exp(−iθ Y/2)`.
    RotationY { theta: f64 },
}

impl StandardChannel {
    pub fn build<R: Real>(&self) -> Result<QuantumChannelT<R>> {
        match *self {
            Self::Identity { dim } => {
                if dim == 0 {
                    return Err(Error::BadParameter("identity dim must be >= 1".into()));
                }
                Ok(QuantumChannelT::identity(dim))
            }
            Self::Depolarizing { p } => QuantumChannelT::depolarizing(2, p),
            Self::Dephasing { p } => QuantumChannelT::dephasing(p),
            Self::BitFlip { p } => QuantumChannelT::bit_flip(p),
            Self::AmplitudeDamping { gamma } => QuantumChannelT::amplitude_damping(gamma),
            Self::RotationY { theta } => {
                let (s, c) = (theta / 2.0).sin_cos();
                let mut u = CMat::zeros(2, 2);
                u[(0, 0)] = linalg::cplx(c, 0.0);
                u[(0, 1)] = linalg::cplx(-s, 0.0);
                u[(1, 0)] = linalg::cplx(s, 0.0);
                u[(1, 1)] = linalg::cplx(c, 0.0);
                QuantumChannelT::unitary(u)
            }
        }
    }
}
