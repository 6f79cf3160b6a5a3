//! Dense complex matrix helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::scalar::Real;

pub type CMat<R> = DMatrix<Complex<R>>;
pub type CVec<R> = DVector<Complex<R>>;

/// Largest Hilbert-space dimension any operation will build.
pub const MAX_DIM: usize = 4096;

pub fn cplx<R: Real>(re: f64, im: f64) -> Complex<R> {
    Complex::new(R::lit(re), R::lit(im))
}

pub fn creal<R: Real>(re: R) -> Complex<R> {
    Complex::new(re, R::zero())
}

pub fn check_dim(d: usize) -> Result<()> {
    if d > MAX_DIM {
        Err(Error::DimensionLimit(d, MAX_DIM))
    } else {
        Ok(())
    }
}

pub fn identity<R: Real>(d: usize) -> CMat<R> {
    CMat::identity(d, d)
}

pub fn zeros<R: Real>(r: usize, c: usize) -> CMat<R> {
    CMat::zeros(r, c)
}

pub fn kron<R: Real>(a: &CMat<R>, b: &CMat<R>) -> CMat<R> {
    a.kronecker(b)
}

pub fn kron_vec<R: Real>(a: &CVec<R>, b: &CVec<R>) -> CVec<R> {
    a.kronecker(b)
}

/// `|z|`.
pub fn cabs<R: Real>(z: &Complex<R>) -> R {
    (z.re * z.re + z.im * z.im).sqrt()
}

pub fn trace<R: Real>(m: &CMat<R>) -> Complex<R> {
    m.trace()
}

pub fn max_abs<R: Real>(m: &CMat<R>) -> R {
    m.iter().fold(R::zero(), |acc, z| acc.max(cabs(z)))
}

pub fn max_abs_diff<R: Real>(a: &CMat<R>, b: &CMat<R>) -> R {
    a.iter()
        .zip(b.iter())
        .fold(R::zero(), |acc, (x, y)| acc.max(cabs(&(x - y))))
}

/// Max-entry deviation of `m` from Hermiticity.
pub fn hermiticity_defect<R: Real>(m: &CMat<R>) -> R {
    max_abs_diff(m, &m.adjoint())
}

pub fn hermitian_part<R: Real>(m: &CMat<R>) -> CMat<R> {
    (m + m.adjoint()).scale(R::lit(0.5))
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues sorted descending.
/// Columns of the returned matrix are the matching eigenvectors.
pub fn eigh<R: Real>(m: &CMat<R>) -> Result<(Vec<R>, CMat<R>)> {
    let d = m.nrows();
    if d == 0 {
        return Ok((Vec::new(), CMat::zeros(0, 0)));
    }
    let h = hermitian_part(m);
    let eig = SymmetricEigen::try_new(h, R::default_epsilon(), 0)
        .ok_or_else(|| Error::Numerical("Hermitian eigensolver did not converge".into()))?;
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| {
        eig.eigenvalues[j]
            .partial_cmp(&eig.eigenvalues[i])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = CMat::from_fn(d, d, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok((vals, vecs))
}

pub fn eigvalsh<R: Real>(m: &CMat<R>) -> Result<Vec<R>> {
    Ok(eigh(m)?.0)
}

/// `V diag(f(λ)) V†` for Hermitian `m`.
pub fn spectral_map<R: Real>(m: &CMat<R>, f: impl Fn(R) -> R) -> Result<CMat<R>> {
    let (vals, vecs) = eigh(m)?;
    Ok(rebuild(&vals.into_iter().map(f).collect::<Vec<_>>(), &vecs))
}

pub fn rebuild<R: Real>(vals: &[R], vecs: &CMat<R>) -> CMat<R> {
    let d = vecs.nrows();
    let mut out = CMat::zeros(d, d);
    for (k, &l) in vals.iter().enumerate() {
        if l == R::zero() {
            continue;
        }
        let v = vecs.column(k);
        out += (&v * v.adjoint()).scale(l);
    }
    out
}

/// Square root of a positive semidefinite matrix; small negative eigenvalues are clipped.
pub fn psd_sqrt<R: Real>(m: &CMat<R>) -> Result<CMat<R>> {
    spectral_map(m, |l| if l > R::zero() { l.sqrt() } else { R::zero() })
}

/// Sum of singular values.
pub fn trace_norm_general<R: Real>(m: &CMat<R>) -> R {
    if m.is_empty() {
        return R::zero();
    }
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .fold(R::zero(), |a, &s| a + s)
}

/// Index bookkeeping for a row-major tensor product with the first factor most significant.
pub fn split_index(mut idx: usize, dims: &[usize]) -> Vec<usize> {
    let mut digits = vec![0; dims.len()];
    for (k, &d) in dims.iter().enumerate().rev() {
        digits[k] = idx % d;
        idx /= d;
    }
    digits
}

pub fn join_index(digits: &[usize], dims: &[usize]) -> usize {
    digits.iter().zip(dims).fold(0, |acc, (&x, &d)| acc * d + x)
}

fn validate_keep(dims: &[usize], keep: &[usize], total: usize) -> Result<Vec<usize>> {
    let prod: usize = dims.iter().product();
    if prod != total {
        return Err(Error::Shape(format!(
            "subsystem dims {dims:?} multiply to {prod}, operator has dim {total}"
        )));
    }
    let mut k = keep.to_vec();
    k.sort_unstable();
    k.dedup();
    if k.len() != keep.len() || k.iter().any(|&i| i >= dims.len()) {
        return Err(Error::Shape(format!("invalid keep set {keep:?} for {} subsystems", dims.len())));
    }
    Ok(k)
}

/// Partial trace of an arbitrary square operator. Kept subsystems stay in their original order.
pub fn partial_trace_mat<R: Real>(m: &CMat<R>, dims: &[usize], keep: &[usize]) -> Result<CMat<R>> {
    if m.nrows() != m.ncols() {
        return Err(Error::Shape("partial trace of a non-square matrix".into()));
    }
    let keep = validate_keep(dims, keep, m.nrows())?;
    let kept_dims: Vec<usize> = keep.iter().map(|&i| dims[i]).collect();
    let traced: Vec<usize> = (0..dims.len()).filter(|i| !keep.contains(i)).collect();
    let traced_dims: Vec<usize> = traced.iter().map(|&i| dims[i]).collect();
    let dk: usize = kept_dims.iter().product();
    let dt: usize = traced_dims.iter().product();
    let mut groups: Vec<Vec<(usize, usize)>> = vec![Vec::new(); dt];
    for full in 0..m.nrows() {
        let digits = split_index(full, dims);
        let kd: Vec<usize> = keep.iter().map(|&i| digits[i]).collect();
        let td: Vec<usize> = traced.iter().map(|&i| digits[i]).collect();
        groups[join_index(&td, &traced_dims)].push((join_index(&kd, &kept_dims), full));
    }
    let mut out = CMat::zeros(dk, dk);
    for g in &groups {
        for &(k1, i1) in g {
            for &(k2, i2) in g {
                out[(k1, k2)] += m[(i1, i2)];
            }
        }
    }
    Ok(out)
}

/// Reorders the tensor factors of a vector: output factor `k` is input factor `perm[k]`.
pub fn permute_vector<R: Real>(v: &CVec<R>, dims: &[usize], perm: &[usize]) -> Result<CVec<R>> {
    let total: usize = dims.iter().product();
    if total != v.len() || perm.len() != dims.len() {
        return Err(Error::Shape("permutation does not match vector layout".into()));
    }
    let mut seen = vec![false; dims.len()];
    for &p in perm {
        if p >= dims.len() || seen[p] {
            return Err(Error::Shape(format!("{perm:?} is not a permutation")));
        }
        seen[p] = true;
    }
    let new_dims: Vec<usize> = perm.iter().map(|&p| dims[p]).collect();
    let mut out = CVec::zeros(total);
    for idx in 0..total {
        let digits = split_index(idx, dims);
        let nd: Vec<usize> = perm.iter().map(|&p| digits[p]).collect();
        out[join_index(&nd, &new_dims)] = v[idx];
    }
    Ok(out)
}

/// Orthonormal completion: returns `d - cols.ncols()` unit vectors orthogonal to the
/// (assumed orthonormal) columns of `cols`, by Gram-Schmidt over the standard basis.
pub fn orthonormal_complement<R: Real>(cols: &CMat<R>) -> CMat<R> {
    let d = cols.nrows();
    let mut basis: Vec<CVec<R>> = (0..cols.ncols()).map(|k| cols.column(k).into_owned()).collect();
    let start = basis.len();
    let cut = R::lit(1e-6);
    for e in 0..d {
        if basis.len() == d {
            break;
        }
        let mut v = CVec::zeros(d);
        v[e] = Complex::new(R::one(), R::zero());
        for _ in 0..2 {
            for b in &basis {
                let ov = b.dotc(&v);
                v -= b * ov;
            }
        }
        let n = v.norm();
        if n > cut {
            basis.push(v.unscale(n));
        }
    }
    let extra = basis.len() - start;
    CMat::from_fn(d, extra, |r, c| basis[start + c][r])
}

pub fn gaussian_complex<R: Real, G: Rng + ?Sized>(rng: &mut G) -> Complex<R> {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex::new(R::lit(re), R::lit(im))
}

pub fn ginibre<R: Real, G: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut G) -> CMat<R> {
    let mut m = CMat::zeros(rows, cols);
    for c in 0..cols {
        for r in 0..rows {
            m[(r, c)] = gaussian_complex(rng);
        }
    }
    m
}

/// Haar-distributed isometry `dim x m` from the QR factorisation of a complex Gaussian
/// matrix, with the phases of `diag(R)` absorbed into `Q`.
pub fn haar_isometry<R: Real, G: Rng + ?Sized>(dim: usize, m: usize, rng: &mut G) -> CMat<R> {
    let g = ginibre::<R, G>(dim, m, rng);
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for k in 0..m {
        let z = r[(k, k)];
        let n = cabs(&z);
        let phase = if n > R::zero() { z.unscale(n) } else { Complex::new(R::one(), R::zero()) };
        let mut col = q.column_mut(k);
        col *= phase;
    }
    q
}
