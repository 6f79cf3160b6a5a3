//! Hash encoders that turn a source distribution into a near-uniform message
//! (classical) and their spectral lift to a density operator (quantum).
//!
//! For a hash `f: X → [M]` the encoder is `Q_{X|W}(·|w) = P_{X|W}(·|w)` by Bayes
//! on `P_W = f(P_X)`. Rows with `P_W(w) = 0` fall back to the uniform distribution
//! over `f^{-1}(w)` when that preimage is nonempty and to `P_X` otherwise; such
//! rows are listed in [`HashEncoder::fallback_rows`].

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::measures::Pmf;
use crate::state::{DensityMatrixT, HermitianOperatorT, PovmT};

pub const EXHAUSTIVE_MAX_ALPHABET: usize = 12;
pub const EXHAUSTIVE_MAX_M: usize = 4;
pub const DEFAULT_ATTEMPTS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HashFamily {
    /// Exhaustive when `|X| ≤ 12` and `M ≤ 4`, random functions otherwise.
    #[default]
    Auto,
    Exhaustive,
    Random,
    /// `x ↦ ((a·x + b) mod p) mod M` with prime `p ≥ |X|`.
    TwoUniversal,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HashOptions {
    pub seed: u64,
    pub attempts: usize,
    pub family: HashFamily,
}

impl HashOptions {
    pub fn seeded(seed: u64) -> Self {
        Self { seed, attempts: DEFAULT_ATTEMPTS, family: HashFamily::Auto }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HashEncoder {
    pub m: usize,
    /// `f(x)`, 0-based.
    pub f: Vec<usize>,
    /// `Q_{X|W}(x|w)`, one row per message.
    pub cond: Vec<Vec<f64>>,
    /// `‖Q_X − P_X‖₁`.
    pub defect: f64,
    /// `P_Q[W ≠ Ŵ]`.
    pub error: f64,
    /// `‖P_W − U_M‖₁`.
    pub w_distance: f64,
    pub fallback_rows: Vec<usize>,
    /// Best-found defect exceeds the requested ε.
    pub warning: bool,
}

impl HashEncoder {
    pub fn alphabet(&self) -> usize {
        self.f.len()
    }

    /// `Q_X(x) = (1/M) Σ_w Q_{X|W}(x|w)`.
    pub fn induced_pmf(&self) -> Vec<f64> {
        let mut q = vec![0.0; self.alphabet()];
        for row in &self.cond {
            for (qx, r) in q.iter_mut().zip(row) {
                *qx += r / self.m as f64;
            }
        }
        q
    }

    pub fn preimage(&self, w: usize) -> Vec<usize> {
        (0..self.f.len()).filter(|&x| self.f[x] == w).collect()
    }
}

/// Pushforward `P_W(w) = Σ_{x: f(x)=w} P_X(x)`.
pub fn pushforward(p: &[f64], f: &[usize], m: usize) -> Vec<f64> {
    let mut pw = vec![0.0; m];
    for (x, &w) in f.iter().enumerate() {
        pw[w] += p[x];
    }
    pw
}

/// The Bayes encoder rows with the fallback convention, plus fallback row indices.
pub fn encoder_rows(p: &[f64], f: &[usize], m: usize) -> (Vec<Vec<f64>>, Vec<usize>) {
    let pw = pushforward(p, f, m);
    let mut rows = Vec::with_capacity(m);
    let mut fallback = Vec::new();
    for w in 0..m {
        let pre: Vec<usize> = (0..f.len()).filter(|&x| f[x] == w).collect();
        let row = if pw[w] > 0.0 {
            (0..f.len()).map(|x| if f[x] == w { p[x] / pw[w] } else { 0.0 }).collect()
        } else if !pre.is_empty() {
            fallback.push(w);
            let u = 1.0 / pre.len() as f64;
            (0..f.len()).map(|x| if f[x] == w { u } else { 0.0 }).collect()
        } else {
            fallback.push(w);
            p.to_vec()
        };
        rows.push(row);
    }
    (rows, fallback)
}

/// Exact `(‖Q_X − P_X‖₁, P[W ≠ Ŵ])` from the joint `Q_{WXŴ}`.
pub fn measure_hash_quality(enc: &HashEncoder, p: &Pmf) -> Result<(f64, f64)> {
    if p.len() != enc.alphabet() || enc.cond.iter().any(|r| r.len() != p.len()) {
        return Err(Error::Shape(format!("encoder alphabet {} vs PMF {}", enc.alphabet(), p.len())));
    }
    Ok(quality_of_rows(p.probs(), &enc.f, &enc.cond))
}

fn quality_of_rows(p: &[f64], f: &[usize], rows: &[Vec<f64>]) -> (f64, f64) {
    let m = rows.len() as f64;
    let mut q = vec![0.0; p.len()];
    let mut err = 0.0;
    for (w, row) in rows.iter().enumerate() {
        for x in 0..p.len() {
            q[x] += row[x] / m;
            if f[x] != w {
                err += row[x] / m;
            }
        }
    }
    let defect = q.iter().zip(p).map(|(a, b)| (a - b).abs()).sum();
    (defect, err)
}

/// Quality of a hash table without materializing rows.
pub fn evaluate_hash(p: &[f64], f: &[usize], m: usize) -> (f64, f64) {
    let pw = pushforward(p, f, m);
    let mut count = vec![0usize; m];
    for &w in f {
        count[w] += 1;
    }
    let mf = m as f64;
    let empty = count.iter().filter(|&&c| c == 0).count() as f64;
    let mut defect = 0.0;
    for x in 0..p.len() {
        let w = f[x];
        let own = if pw[w] > 0.0 { p[x] / (mf * pw[w]) } else { 1.0 / (mf * count[w] as f64) };
        let qx = own + empty * p[x] / mf;
        defect += (qx - p[x]).abs();
    }
    (defect, empty / mf)
}

fn quantize(x: f64) -> i64 {
    (x * 1e12).round() as i64
}

fn decode_table(mut index: u64, m: usize, len: usize) -> Vec<usize> {
    // lexicographic order: x = 0 is the most significant digit
    let mut f = vec![0usize; len];
    for x in (0..len).rev() {
        f[x] = (index % m as u64) as usize;
        index /= m as u64;
    }
    f
}

fn random_table(p_len: usize, m: usize, seed: u64, index: usize) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    (0..p_len).map(|_| rng.random_range(0..m)).collect()
}

fn next_prime(n: u64) -> u64 {
    let is_prime = |k: u64| k >= 2 && (2..).take_while(|d| d * d <= k).all(|d| k % d != 0);
    (n.max(2)..).find(|&k| is_prime(k)).expect("primes are unbounded")
}

fn two_universal_table(p_len: usize, m: usize, seed: u64, index: usize) -> Vec<usize> {
    let prime = next_prime(p_len as u64);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    let a = rng.random_range(1..prime.max(2));
    let b = rng.random_range(0..prime);
    (0..p_len as u64).map(|x| (((a * x + b) % prime) % m as u64) as usize).collect()
}

/// Finds a hash `f: X → [M]` minimizing `(defect, error)` lexicographically and
/// returns the matching Bayes encoder.
pub fn build_classical_hash(p: &Pmf, m: usize, eps: f64, opts: HashOptions) -> Result<HashEncoder> {
    if m == 0 {
        return Err(Error::BadParameter("M must be >= 1".into()));
    }
    if !(eps > 0.0) {
        return Err(Error::BadParameter(format!("ε = {eps} must be positive")));
    }
    let probs = p.probs();
    let n = probs.len();
    let exhaustive = match opts.family {
        HashFamily::Auto => n <= EXHAUSTIVE_MAX_ALPHABET && m <= EXHAUSTIVE_MAX_M,
        HashFamily::Exhaustive => true,
        _ => false,
    };
    let best = if m == 1 {
        vec![0; n]
    } else if exhaustive {
        let total = (m as u64)
            .checked_pow(n as u32)
            .filter(|&t| t <= 1 << 26)
            .ok_or_else(|| Error::BadParameter(format!("exhaustive search over {m}^{n} tables is too large")))?;
        let (_, _, idx) = (0..total)
            .into_par_iter()
            .map(|i| {
                let (d, e) = evaluate_hash(probs, &decode_table(i, m, n), m);
                (quantize(d), quantize(e), i)
            })
            .min()
            .expect("nonempty search space");
        decode_table(idx, m, n)
    } else {
        let attempts = opts.attempts.max(1);
        let universal = opts.family == HashFamily::TwoUniversal;
        let (_, _, idx) = (0..attempts)
            .into_par_iter()
            .map(|i| {
                let f = if universal {
                    two_universal_table(n, m, opts.seed, i)
                } else {
                    random_table(n, m, opts.seed, i)
                };
                let (d, e) = evaluate_hash(probs, &f, m);
                (quantize(d), quantize(e), i)
            })
            .min()
            .expect("attempts >= 1");
        if universal {
            two_universal_table(n, m, opts.seed, idx)
        } else {
            random_table(n, m, opts.seed, idx)
        }
    };
    Ok(encoder_from_table(probs, best, m, eps))
}

/// Encoder for a given hash table.
pub fn encoder_from_table(p: &[f64], f: Vec<usize>, m: usize, eps: f64) -> HashEncoder {
    let (cond, fallback_rows) = encoder_rows(p, &f, m);
    let (defect, error) = quality_of_rows(p, &f, &cond);
    let pw = pushforward(p, &f, m);
    let w_distance = pw.iter().map(|x| (x - 1.0 / m as f64).abs()).sum();
    HashEncoder { m, f, cond, defect, error, w_distance, fallback_rows, warning: defect > eps }
}

/// Spectral lift: `g(w) = Σ_x Q_{X|W}(x|w)|x⟩⟨x|`, `Λ^w = Σ_{f(x)=w} |x⟩⟨x|`
/// in the eigenbasis of the target (eigenvalues descending).
#[derive(Debug, Clone)]
pub struct QuantumHashCode {
    pub m: usize,
    pub basis: CMat<f64>,
    pub spectrum: Vec<f64>,
    pub encoder: HashEncoder,
    pub g: Vec<DensityMatrixT<f64>>,
    pub povm: PovmT<f64>,
    /// `‖(1/M) Σ_w g(w) − ρ‖₁`, measured.
    pub defect: f64,
    /// `(1/M) Σ_w tr(Λ^w g(w))`, measured.
    pub success: f64,
}

impl QuantumHashCode {
    /// `Λ^w` as a matrix.
    pub fn projector(&self, w: usize) -> &CMat<f64> {
        self.povm.elements()[w].matrix()
    }
}

pub fn build_quantum_hash(rho: &DensityMatrixT<f64>, m: usize, eps: f64, opts: HashOptions) -> Result<QuantumHashCode> {
    let (vals, basis) = linalg::eigh(rho.matrix())?;
    let spectrum: Vec<f64> = vals.iter().map(|&l| l.max(0.0)).collect();
    let total: f64 = spectrum.iter().sum();
    let pmf = Pmf::new(spectrum.iter().map(|l| l / total).collect())?;
    let encoder = build_classical_hash(&pmf, m, eps, opts)?;
    let d = rho.dim();
    let diag_op = |weights: &[f64]| linalg::rebuild(weights, &basis);
    let g: Vec<DensityMatrixT<f64>> =
        encoder.cond.iter().map(|row| DensityMatrixT::from_trusted(diag_op(row))).collect();
    let elements: Vec<HermitianOperatorT<f64>> = (0..m)
        .map(|w| {
            let ind: Vec<f64> = (0..d).map(|x| if encoder.f[x] == w { 1.0 } else { 0.0 }).collect();
            HermitianOperatorT::from_trusted(diag_op(&ind))
        })
        .collect();
    let povm = PovmT::from_trusted(elements);
    let avg = DensityMatrixT::mixture(&vec![1.0 / m as f64; m], &g)?;
    let defect = avg.trace_distance(rho)?;
    let success = (0..m).map(|w| povm.elements()[w].expectation(&g[w])).sum::<f64>() / m as f64;
    Ok(QuantumHashCode { m, basis, spectrum, encoder, g, povm, defect, success })
}
