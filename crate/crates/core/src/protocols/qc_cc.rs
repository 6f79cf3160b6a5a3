//! Quantum-to-classical stego code from a correctable Kraus split: the
//! correctable operators act on the code space as weighted unitaries `U_j`,
//! and the cypher message selects which `U_j` twirls the encoder.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{trace_distance, Channel, Dm, Mat, AUDIT_SLACK};
use crate::channel::{compose, pauli_x, IsometryT};
use crate::error::{Error, Result};
use crate::hashing::{build_classical_hash, HashOptions};
use crate::linalg::{self, creal};
use crate::measures::Pmf;
use crate::state::DensityMatrixT;

/// Tolerance on the Knill-Laflamme and proportionality residuals.
pub const SPLIT_TOL: f64 = 1e-8;
/// Weights `d_j` at or below this are dropped from the split.
pub const WEIGHT_CUT: f64 = 1e-12;
/// Exhaustive search over cypher hashes up to this many tables.
const MAX_TABLES: usize = 1 << 20;

/// Cover QC code: encoder isometry, decoder, the warden's `n`-use channel and
/// the indices of its correctable Kraus operators.
#[derive(Debug, Clone)]
pub struct QcCode {
    isometry: IsometryT<f64>,
    decoder: Channel,
    channel: Channel,
    correctable: Vec<usize>,
    c: f64,
    residual: f64,
}

impl QcCode {
    pub fn new(isometry: IsometryT<f64>, decoder: Channel, channel: Channel, correctable: Vec<usize>) -> Result<Self> {
        if channel.dim_in() != channel.dim_out() {
            return Err(Error::InvalidCover("channel must map A^n to itself".into()));
        }
        if isometry.dim_out() != channel.dim_in() || decoder.dim_in() != channel.dim_out() {
            return Err(Error::InvalidCover("encoder/decoder dimensions do not match the channel".into()));
        }
        if decoder.dim_out() != isometry.dim_in() {
            return Err(Error::InvalidCover("decoder output differs from the message space".into()));
        }
        let piece = channel.restrict(&correctable)?;
        let (c, residual) = proportionality(&compose(&decoder, &compose(&piece, &isometry.as_channel())?)?);
        if c <= 0.0 {
            return Err(Error::InvalidCover("correctable part has zero weight".into()));
        }
        Ok(Self { isometry, decoder, channel, correctable, c, residual })
    }

    pub fn m(&self) -> usize {
        self.isometry.dim_in()
    }

    pub fn isometry(&self) -> &IsometryT<f64> {
        &self.isometry
    }

    pub fn decoder(&self) -> &Channel {
        &self.decoder
    }

    pub fn channel(&self) -> &Channel {
        &self.channel
    }

    pub fn correctable(&self) -> &[usize] {
        &self.correctable
    }

    /// `D ∘ Ñ ∘ E = c · id`.
    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn residual(&self) -> f64 {
        self.residual
    }

    /// `Π / M`, the normalized code projector.
    pub fn code_state(&self) -> Dm {
        DensityMatrixT::from_trusted(self.isometry.projector().unscale(self.m() as f64))
    }
}

/// Best `c` with `Choi ≈ c ΩΩ†` and the max-entry residual.
fn proportionality(ch: &Channel) -> (f64, f64) {
    let m = ch.dim_in();
    let j = ch.choi();
    let c = j.trace().re / m as f64;
    let omega = Mat::from_fn(m * m, 1, |r, _| if r / m == r % m { creal(1.0) } else { creal(0.0) });
    let target = (&omega * omega.adjoint()).scale(c);
    (c, linalg::max_abs_diff(&j, &target))
}

/// Orthogonalized correctable operators with `Π F_j† F_k Π = δ_jk d_j Π`.
#[derive(Debug, Clone)]
pub struct KrausSplit {
    /// Orthogonalized operators, all of them (including negligible weights).
    pub ops: Vec<Mat>,
    /// `d_j` for every operator.
    pub d: Vec<f64>,
    /// Indices with `d_j > WEIGHT_CUT`.
    pub kept: Vec<usize>,
    /// Whether the original labels were already orthogonal.
    pub relabeled: bool,
    /// Max-entry Knill-Laflamme residual.
    pub residual: f64,
}

impl KrausSplit {
    /// `P_J(j) = d_j / Σ d`.
    pub fn p_j(&self) -> Vec<f64> {
        let total: f64 = self.d.iter().sum();
        self.d.iter().map(|x| x / total).collect()
    }

    pub fn c(&self) -> f64 {
        self.d.iter().sum()
    }
}

pub fn orthogonalize_split(cover: &QcCode) -> Result<KrausSplit> {
    let pi = cover.isometry.projector();
    let m = cover.m() as f64;
    let f: Vec<Mat> = cover.correctable.iter().map(|&i| cover.channel.kraus()[i].clone()).collect();
    let n = f.len();
    let fp: Vec<Mat> = f.iter().map(|x| x * &pi).collect();
    let gram = Mat::from_fn(n, n, |j, k| (fp[j].adjoint() * &fp[k]).trace().unscale(m));
    let off = (0..n)
        .flat_map(|j| (0..n).filter(move |&k| k != j).map(move |k| (j, k)))
        .map(|(j, k)| linalg::cabs(&gram[(j, k)]))
        .fold(0.0, f64::max);
    let (ops, d, relabeled) = if off <= WEIGHT_CUT {
        (f, (0..n).map(|j| gram[(j, j)].re).collect::<Vec<_>>(), false)
    } else {
        let (vals, vecs) = linalg::eigh(&gram)?;
        let ops = (0..n)
            .map(|k| {
                let mut acc = Mat::zeros(f[0].nrows(), f[0].ncols());
                for j in 0..n {
                    acc += f[j].scale(1.0) * vecs[(j, k)];
                }
                acc
            })
            .collect();
        (ops, vals.into_iter().map(|v| v.max(0.0)).collect(), true)
    };
    let mut residual: f64 = 0.0;
    for j in 0..n {
        for k in 0..n {
            let block = &pi * ops[j].adjoint() * &ops[k] * &pi;
            let target = if j == k { pi.scale(d[j]) } else { Mat::zeros(pi.nrows(), pi.ncols()) };
            residual = residual.max(linalg::max_abs_diff(&block, &target));
        }
    }
    if residual > SPLIT_TOL {
        return Err(Error::QcrSplit(format!("Knill-Laflamme residual {residual:.3e}")));
    }
    let kept = (0..n).filter(|&j| d[j] > WEIGHT_CUT).collect();
    Ok(KrausSplit { ops, d, kept, relabeled, residual })
}

#[derive(Debug, Clone, PartialEq)]
pub struct QcAudit {
    pub c: f64,
    pub eps: f64,
    pub p_j: Vec<f64>,
    pub kl_residual: f64,
    /// `max_j ‖F_j Π − √d_j U_j Π‖`.
    pub polar_residual: f64,
    pub zeta_achieved: f64,
    pub empty_messages: usize,
    /// Per cypher message, the weight of the Kraus operators `F` for which
    /// `D̄_W ∘ F(·)F† ∘ Ē^w̄` is proportional to the identity.
    pub c_bar: Vec<f64>,
    /// Minimum over inputs of the average cypher decoding probability.
    pub decode_min: f64,
    /// Maximum over inputs of `‖M(E(ρ)) − (1/M̄) Σ Ē^w̄(ρ)‖₁`.
    pub dist_max: f64,
    /// `ε + ζ + (1 − c)`.
    pub dist_bound: f64,
    pub bound_ok: bool,
}

#[derive(Debug, Clone)]
pub struct StegoQcCcCode {
    pub mbar: usize,
    pub split: KrausSplit,
    /// Completed unitaries, one per kept operator (same order as `split.kept`).
    pub unitaries: Vec<Mat>,
    /// Cypher hash on kept operators.
    pub g: Vec<usize>,
    pub mu: Vec<usize>,
    /// `Ē^w̄` as channels `W → A^n`.
    pub encoders: Vec<Channel>,
    /// `D̄`, output ordered `(W, W̄)`.
    pub decoder: Channel,
    pub audit: QcAudit,
}

/// Cypher hash on `P_J` minimizing `Σ_j |P_J(j) − 1/(M̄ μ_{g(j)})| + #{μ = 0}/M̄`.
fn twirl_cost(p: &[f64], g: &[usize], mbar: usize) -> (f64, Vec<usize>) {
    let mut mu = vec![0usize; mbar];
    for &w in g {
        mu[w] += 1;
    }
    let empty = mu.iter().filter(|&&x| x == 0).count();
    let spread: f64 = p.iter().zip(g).map(|(pj, &w)| (pj - 1.0 / (mbar * mu[w]) as f64).abs()).sum();
    (spread + empty as f64 / mbar as f64, mu)
}

fn cypher_hash(p: &[f64], mbar: usize, zeta: f64, opts: HashOptions) -> Result<Vec<usize>> {
    let n = p.len();
    let tables = (mbar as f64).powi(n as i32);
    if tables <= MAX_TABLES as f64 {
        let mut best: Option<(f64, Vec<usize>)> = None;
        let mut g = vec![0usize; n];
        for _ in 0..(tables as usize) {
            let (cost, _) = twirl_cost(p, &g, mbar);
            if best.as_ref().is_none_or(|(b, _)| cost < b - 1e-12) {
                best = Some((cost, g.clone()));
            }
            for digit in g.iter_mut().rev() {
                *digit += 1;
                if *digit < mbar {
                    break;
                }
                *digit = 0;
            }
        }
        Ok(best.expect("at least one table").1)
    } else {
        Ok(build_classical_hash(&Pmf::normalized(p.to_vec())?, mbar, zeta, opts)?.f)
    }
}

pub fn build_stego_qc_cc(cover: &QcCode, mbar: usize, zeta: f64, opts: HashOptions) -> Result<StegoQcCcCode> {
    if mbar == 0 {
        return Err(Error::BadParameter("M̄ must be positive".into()));
    }
    if cover.residual > SPLIT_TOL {
        return Err(Error::QcrSplit(format!("D∘Ñ∘E deviates from c·id by {:.3e}", cover.residual)));
    }
    let split = orthogonalize_split(cover)?;
    let v = cover.isometry.matrix();
    let pi = cover.isometry.projector();
    let kernel = linalg::orthonormal_complement(v);
    let mut unitaries = Vec::with_capacity(split.kept.len());
    let mut polar_residual: f64 = 0.0;
    for &j in &split.kept {
        let a = (&split.ops[j] * &pi).unscale(split.d[j].sqrt());
        let image = &a * v;
        let comp = linalg::orthonormal_complement(&image);
        let u = &image * v.adjoint() + &comp * kernel.adjoint();
        polar_residual = polar_residual.max(linalg::max_abs_diff(&(&split.ops[j] * &pi), &(&u * &pi).scale(split.d[j].sqrt())));
        unitaries.push(u);
    }
    let p_kept: Vec<f64> = {
        let pj = split.p_j();
        split.kept.iter().map(|&j| pj[j]).collect()
    };
    let g = cypher_hash(&p_kept, mbar, zeta, opts)?;
    let (zeta_achieved, mu) = twirl_cost(&p_kept, &g, mbar);
    let m = cover.m();
    let dim = v.nrows();

    let encoders: Vec<Channel> = (0..mbar)
        .map(|w| {
            let kraus: Vec<Mat> = if mu[w] == 0 {
                vec![v.clone()]
            } else {
                let s = (mu[w] as f64).sqrt();
                (0..g.len()).filter(|&k| g[k] == w).map(|k| (&unitaries[k] * v).unscale(s)).collect()
            };
            Channel::from_trusted(m, dim, kraus)
        })
        .collect();

    let mut occupied = Mat::zeros(dim, dim);
    for u in &unitaries {
        occupied += u * &pi * u.adjoint();
    }
    let sink = linalg::identity::<f64>(dim) - occupied;
    let ket = |w: usize| Mat::from_fn(mbar, 1, |r, _| if r == w { creal(1.0) } else { creal(0.0) });
    let mut dec = Vec::new();
    for k in cover.decoder.kraus() {
        for (idx, u) in unitaries.iter().enumerate() {
            dec.push(linalg::kron(&(k * &pi * u.adjoint()), &ket(g[idx])));
        }
        dec.push(linalg::kron(&(k * &sink), &ket(0)));
    }
    let decoder = Channel::from_trusted(dim, m * mbar, dec);

    let c = split.c();
    let audit = QcAudit {
        c,
        eps: 1.0 - c,
        p_j: split.p_j(),
        kl_residual: split.residual,
        polar_residual,
        zeta_achieved,
        empty_messages: mu.iter().filter(|&&x| x == 0).count(),
        c_bar: Vec::new(),
        decode_min: 0.0,
        dist_max: 0.0,
        dist_bound: (1.0 - c) + zeta_achieved + (1.0 - c),
        bound_ok: false,
    };
    let mut code = StegoQcCcCode { mbar, split, unitaries, g, mu, encoders, decoder, audit };
    let inputs = standard_test_inputs(m, opts.seed)?;
    audit_stego_qc_cc(&mut code, cover, &inputs)?;
    Ok(code)
}

/// Recomputes the split constants, cypher decoding and cover distance over `inputs`.
pub fn audit_stego_qc_cc(code: &mut StegoQcCcCode, cover: &QcCode, inputs: &[Dm]) -> Result<()> {
    let m = cover.m();
    let mbar = code.mbar;
    // D̄ followed by tracing out the cypher register.
    let mut dw = Vec::new();
    for k in code.decoder.kraus() {
        for w in 0..mbar {
            dw.push(Mat::from_fn(m, k.ncols(), |r, c| k[(r * mbar + w, c)]));
        }
    }
    let d_w = Channel::from_trusted(code.decoder.dim_in(), m, dw);
    let mut c_bar = Vec::with_capacity(mbar);
    for enc in &code.encoders {
        let mut total = 0.0;
        for f in cover.channel.kraus() {
            let single = Channel::from_trusted(f.ncols(), f.nrows(), vec![f.clone()]);
            let (c, res) = proportionality(&compose(&d_w, &compose(&single, enc)?)?);
            if res <= SPLIT_TOL {
                total += c;
            }
        }
        c_bar.push(total);
    }

    let mut decode_min = f64::INFINITY;
    let mut dist_max: f64 = 0.0;
    let cover_enc = cover.isometry.as_channel();
    for rho in inputs {
        let r = rho.matrix();
        let cover_out = cover.channel.apply_matrix(&cover_enc.apply_matrix(r));
        let mut stego = Mat::zeros(cover_out.nrows(), cover_out.ncols());
        let mut hits = 0.0;
        for (w, enc) in code.encoders.iter().enumerate() {
            let sent = enc.apply_matrix(r);
            let out = code.decoder.apply_matrix(&sent);
            hits += (0..m).map(|a| out[(a * mbar + w, a * mbar + w)].re).sum::<f64>();
            stego += sent;
        }
        stego.unscale_mut(mbar as f64);
        decode_min = decode_min.min(hits / mbar as f64);
        dist_max = dist_max.max(trace_distance(&cover_out, &stego)?);
    }
    let a = &mut code.audit;
    a.c_bar = c_bar;
    a.decode_min = decode_min;
    a.dist_max = dist_max;
    a.bound_ok = dist_max <= a.dist_bound + AUDIT_SLACK
        && decode_min >= 1.0 - a.zeta_achieved - AUDIT_SLACK
        && a.kl_residual <= SPLIT_TOL
        && a.polar_residual <= SPLIT_TOL;
    Ok(())
}

/// Sixteen audit inputs: for qubits the six Pauli eigenstates, `I/2` and nine
/// seeded random states; otherwise basis states, the maximally mixed state and
/// random states.
pub fn standard_test_inputs(m: usize, seed: u64) -> Result<Vec<Dm>> {
    let mut out = Vec::with_capacity(16);
    if m == 2 {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let vecs = [
            [(1.0, 0.0), (0.0, 0.0)],
            [(0.0, 0.0), (1.0, 0.0)],
            [(h, 0.0), (h, 0.0)],
            [(h, 0.0), (-h, 0.0)],
            [(h, 0.0), (0.0, h)],
            [(h, 0.0), (0.0, -h)],
        ];
        for v in vecs {
            let k = Mat::from_fn(2, 1, |r, _| linalg::cplx(v[r].0, v[r].1));
            out.push(DensityMatrixT::from_trusted(&k * k.adjoint()));
        }
    } else {
        out.extend((0..m.min(6)).map(|i| DensityMatrixT::basis(m, i)));
    }
    out.push(DensityMatrixT::maximally_mixed(m));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    while out.len() < 16 {
        let rank = 1 + out.len() % m;
        out.push(DensityMatrixT::random(m, rank, &mut rng));
    }
    Ok(out)
}

/// Three-qubit repetition code under `bit_flip(p)^{⊗3}` with the identity and
/// single-flip Kraus operators marked correctable.
pub fn bit_flip_code(p: f64) -> Result<QcCode> {
    let ch = Channel::bit_flip(p)?.tensor_power(3)?;
    let mut v = Mat::zeros(8, 2);
    v[(0, 0)] = creal(1.0);
    v[(7, 1)] = creal(1.0);
    let iso = IsometryT::new(v.clone())?;
    let x = pauli_x::<f64>();
    let id = linalg::identity::<f64>(2);
    let flips = [
        linalg::identity::<f64>(8),
        linalg::kron(&linalg::kron(&x, &id), &id),
        linalg::kron(&linalg::kron(&id, &x), &id),
        linalg::kron(&linalg::kron(&id, &id), &x),
    ];
    let p0 = &v * v.adjoint();
    let kraus: Vec<Mat> = flips.iter().map(|xk| v.adjoint() * xk * (xk * &p0 * xk)).collect();
    let decoder = Channel::new(kraus)?;
    // Kraus index bits: first qubit most significant, 1 = flip.
    QcCode::new(iso, decoder, ch, vec![0b000, 0b100, 0b010, 0b001])
}
