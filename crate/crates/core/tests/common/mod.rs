#![allow(dead_code)]

use qsteg::linalg::{self, CMat};
use qsteg::DensityMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_state(d: usize, seed: u64) -> DensityMatrix {
    DensityMatrix::random(d, d, &mut rng(seed))
}

pub fn diag(p: &[f64]) -> DensityMatrix {
    DensityMatrix::diagonal(p).unwrap()
}

pub fn plus() -> DensityMatrix {
    DensityMatrix::new(CMat::from_element(2, 2, linalg::cplx(0.5, 0.0))).unwrap()
}

pub fn max_diff(a: &CMat<f64>, b: &CMat<f64>) -> f64 {
    linalg::max_abs_diff(a, b)
}

/// Hermitian eigenvalues by the characteristic polynomial for 2x2 matrices.
pub fn eig2(m: &CMat<f64>) -> (f64, f64) {
    let (a, d) = (m[(0, 0)].re, m[(1, 1)].re);
    let b = m[(0, 1)];
    let off = b.re * b.re + b.im * b.im;
    let mid = 0.5 * (a + d);
    let r = (0.25 * (a - d) * (a - d) + off).sqrt();
    (mid + r, mid - r)
}

/// Sum over explicit multi-indices; independent of the library's partial trace.
pub fn ptrace_oracle(m: &CMat<f64>, dims: &[usize], keep: &[usize]) -> CMat<f64> {
    let n: usize = dims.iter().product();
    let kept: usize = keep.iter().map(|&k| dims[k]).product();
    let digits = |mut i: usize| {
        let mut d = vec![0; dims.len()];
        for k in (0..dims.len()).rev() {
            d[k] = i % dims[k];
            i /= dims[k];
        }
        d
    };
    let kept_index = |d: &[usize]| keep.iter().fold(0, |acc, &k| acc * dims[k] + d[k]);
    let mut out = CMat::zeros(kept, kept);
    for i in 0..n {
        for j in 0..n {
            let (di, dj) = (digits(i), digits(j));
            let traced_equal = (0..dims.len()).filter(|k| !keep.contains(k)).all(|k| di[k] == dj[k]);
            if traced_equal {
                out[(kept_index(&di), kept_index(&dj))] += m[(i, j)];
            }
        }
    }
    out
}

pub fn h2(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        0.0
    } else {
        -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
    }
}

/// Support-restricted power via nalgebra's own Hermitian eigensolver.
pub fn pow_oracle(m: &CMat<f64>, a: f64) -> CMat<f64> {
    let e = m.clone().symmetric_eigen();
    let d = m.nrows();
    let mut out = CMat::zeros(d, d);
    for k in 0..d {
        let l = e.eigenvalues[k];
        if l > 1e-12 {
            let v = e.eigenvectors.column(k);
            out += (&v * v.adjoint()) * linalg::cplx::<f64>(l.powf(a), 0.0);
        }
    }
    out
}

/// `Σ_x |x⟩⟨x| ⊗ P(x)ρ^x` as a dense matrix.
pub fn joint_oracle(p: &[f64], states: &[DensityMatrix]) -> CMat<f64> {
    let d = states[0].dim();
    let n = p.len();
    let mut out = CMat::zeros(n * d, n * d);
    for x in 0..n {
        for i in 0..d {
            for j in 0..d {
                out[(x * d + i, x * d + j)] = states[x].matrix()[(i, j)] * p[x];
            }
        }
    }
    out
}

pub fn mi_up_oracle(p: &[f64], states: &[DensityMatrix], a: f64) -> f64 {
    let d = states[0].dim();
    let joint = joint_oracle(p, states);
    let mut rho_b = CMat::zeros(d, d);
    for (x, s) in states.iter().enumerate() {
        rho_b += s.matrix() * linalg::cplx::<f64>(p[x], 0.0);
    }
    let rho_x = CMat::from_diagonal(&qsteg::linalg::CVec::from_iterator(p.len(), p.iter().map(|&q| linalg::cplx(q, 0.0))));
    let prod = rho_x.kronecker(&rho_b);
    let h = pow_oracle(&prod, a / 2.0);
    let t = (&joint * &h * pow_oracle(&joint, -a) * &h).trace().re;
    -t.log2() / a
}

pub fn mi_down_oracle(p: &[f64], states: &[DensityMatrix], a: f64) -> f64 {
    let d = states[0].dim();
    let mut rho_b = CMat::zeros(d, d);
    for (x, s) in states.iter().enumerate() {
        rho_b += s.matrix() * linalg::cplx::<f64>(p[x], 0.0);
    }
    let b = pow_oracle(&rho_b, a);
    let t: f64 = states.iter().zip(p).map(|(s, &q)| q * (pow_oracle(s.matrix(), 1.0 - a) * &b).trace().re).sum();
    -t.log2() / a
}

/// Plain loop over `points` evenly spaced values, returning the best finite one.
pub fn grid_max(f: impl Fn(f64) -> f64, lo: f64, hi: f64, points: usize) -> (f64, f64) {
    let mut best = (f64::NAN, f64::NEG_INFINITY);
    for i in 0..points {
        let a = lo + (hi - lo) * i as f64 / (points - 1) as f64;
        let v = f(a);
        if v.is_finite() && v > best.1 {
            best = (a, v);
        }
    }
    best
}

/// [`grid_max`] followed by a second grid of the same size over the two cells
/// around the winner; needed when the objective is large (|f| ~ 1e5) and the
/// comparison is absolute.
pub fn grid_max_zoom(f: impl Fn(f64) -> f64, lo: f64, hi: f64, points: usize) -> (f64, f64) {
    let (a, _) = grid_max(&f, lo, hi, points);
    let h = (hi - lo) / (points - 1) as f64;
    grid_max(&f, (a - h).max(lo), (a + h).min(hi), points)
}

pub fn grid_min(f: impl Fn(f64) -> f64, lo: f64, hi: f64, points: usize) -> (f64, f64) {
    let (a, v) = grid_max(|x| -f(x), lo, hi, points);
    (a, -v)
}
