//! Classical-classical stego codes built from a cover code by hashing each
//! cover output (noiseless warden channel) or by resolvability codebooks
//! drawn from side states (noisy warden channel).

use super::resolvability::build_resolvability_code;
use super::{
    average, completeness_defect, expectation, log2_usize, nested_elements, trace_distance, Channel, Dm, Mat,
    Povm, AUDIT_SLACK, NESTED_TOL,
};
use crate::error::{Error, Result};
use crate::hashing::{build_quantum_hash, HashOptions};
use crate::linalg;
use crate::measures::CqStateT;
use crate::state::{HermitianOperatorT, PovmT};

/// Tolerance for `tr_X σ_XB^w = ρ^w`.
pub const SIDE_STATE_TOL: f64 = 1e-8;
/// Codebook draws per message in the noisy construction.
pub const RESOLVABILITY_TRIALS: usize = 8;

/// A cover code `(f, {Λ^w})` together with the channel the warden assumes.
#[derive(Debug, Clone)]
pub struct CcCode {
    n: usize,
    codewords: Vec<Dm>,
    povm: Povm,
    channel: Channel,
    outputs: Vec<Dm>,
    reliability: f64,
}

impl CcCode {
    /// `channel` is the `n`-use map the warden expects, so `ρ^w = channel(f(w))`.
    pub fn new(n: usize, codewords: Vec<Dm>, povm: Povm, channel: Channel) -> Result<Self> {
        if codewords.is_empty() {
            return Err(Error::InvalidCover("no codewords".into()));
        }
        if povm.len() != codewords.len() {
            return Err(Error::InvalidCover(format!("{} codewords but {} POVM elements", codewords.len(), povm.len())));
        }
        if povm.dim() != channel.dim_out() {
            return Err(Error::InvalidCover("POVM dimension differs from channel output".into()));
        }
        let outputs = codewords.iter().map(|c| channel.apply(c)).collect::<Result<Vec<_>>>()?;
        let reliability = outputs
            .iter()
            .zip(povm.elements())
            .map(|(r, e)| e.expectation(r))
            .sum::<f64>()
            / outputs.len() as f64;
        Ok(Self { n, codewords, povm, channel, outputs, reliability })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.codewords.len()
    }

    pub fn codewords(&self) -> &[Dm] {
        &self.codewords
    }

    pub fn povm(&self) -> &Povm {
        &self.povm
    }

    pub fn channel(&self) -> &Channel {
        &self.channel
    }

    /// `ρ^w` under the warden's channel.
    pub fn outputs(&self) -> &[Dm] {
        &self.outputs
    }

    /// `(1/M) Σ_w tr(Λ^w ρ^w)`.
    pub fn reliability(&self) -> f64 {
        self.reliability
    }

    /// `ρ^c = (1/M) Σ_w ρ^w`.
    pub fn average_output(&self) -> Mat {
        let m: Vec<Mat> = self.outputs.iter().map(|r| r.matrix().clone()).collect();
        average(&m)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MessageAudit {
    pub w: usize,
    pub zeta: f64,
    pub eps: f64,
    /// `‖ρ^w − avg_{s,w̄} N(f̄_s(w,w̄))‖₁`.
    pub dist: f64,
    pub p_decode: f64,
    pub bound_ok: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StegoAudit {
    pub dist_trace: f64,
    pub p_decode: f64,
    pub zeta_achieved: f64,
    pub eps_cover: f64,
    pub key_bits: f64,
    pub nested_defect: f64,
    /// `1 − ζ − 2√(ζ + ε)`.
    pub decode_bound: f64,
    pub bound_ok: bool,
}

#[derive(Debug, Clone)]
pub struct StegoCcCode {
    pub m: usize,
    pub mbar: usize,
    pub keys: usize,
    /// `encoders[s][w·M̄ + w̄]`, states fed to the true channel.
    pub encoders: Vec<Vec<Dm>>,
    /// `decoders[s]`, outcomes indexed like the encoders.
    pub decoders: Vec<Povm>,
    pub per_message: Vec<MessageAudit>,
    pub audit: StegoAudit,
    /// Some hash or codebook missed the requested ζ.
    pub warning: bool,
}

impl StegoCcCode {
    pub fn index(&self, w: usize, wbar: usize) -> usize {
        w * self.mbar + wbar
    }
}

fn decode_bound(zeta: f64, eps: f64) -> f64 {
    1.0 - zeta - 2.0 * (zeta + eps).max(0.0).sqrt()
}

/// Stego code when the true channel is the identity: each `ρ^w` is hashed into
/// `M̄` states and decoded by `√Λ^w Γ_w^{w̄} √Λ^w`.
pub fn build_stego_cc_noiseless(cover: &CcCode, mbar: usize, zeta: f64, opts: HashOptions) -> Result<StegoCcCode> {
    if mbar == 0 {
        return Err(Error::BadParameter("M̄ must be positive".into()));
    }
    let m = cover.m();
    let mut encoders = Vec::with_capacity(m * mbar);
    let mut elements = Vec::with_capacity(m * mbar);
    let mut zetas = Vec::with_capacity(m);
    let mut warning = false;
    for (w, rho) in cover.outputs().iter().enumerate() {
        let o = HashOptions { seed: opts.seed.wrapping_add(w as u64), ..opts };
        let hash = build_quantum_hash(rho, mbar, zeta, o)?;
        warning |= hash.encoder.warning;
        zetas.push(hash.defect.max(1.0 - hash.success));
        let gammas: Vec<Mat> = (0..mbar).map(|wb| hash.projector(wb).clone()).collect();
        elements.extend(nested_elements(cover.povm().elements()[w].matrix(), &gammas)?);
        encoders.extend(hash.g);
    }
    finish(cover, None, vec![encoders], vec![elements], mbar, &zetas, 0.0, warning)
}

/// Stego code for a noisy true channel `n_true`. `side[w]` lists input states
/// `σ_{A^n}^x` with weights such that `Σ_x P(x) n_true(σ^x) = ρ^w`.
pub fn build_stego_cc_noisy(
    cover: &CcCode,
    n_true: &Channel,
    side: &[CqStateT<f64>],
    mbar: usize,
    keys: usize,
    zeta: f64,
    seed: u64,
) -> Result<StegoCcCode> {
    if mbar == 0 || keys == 0 {
        return Err(Error::BadParameter("M̄ and K̄ must be positive".into()));
    }
    let m = cover.m();
    if side.len() != m {
        return Err(Error::SideStateMismatch(format!("{} side states for {} messages", side.len(), m)));
    }
    if n_true.dim_out() != cover.channel().dim_out() {
        return Err(Error::SideStateMismatch("true channel output differs from cover output".into()));
    }
    let mut encoders = vec![Vec::with_capacity(m * mbar); keys];
    let mut elements = vec![Vec::with_capacity(m * mbar); keys];
    let mut zetas = Vec::with_capacity(m);
    let mut warning = false;
    for (w, sigma) in side.iter().enumerate() {
        let outs = sigma.states().iter().map(|s| n_true.apply(s)).collect::<Result<Vec<_>>>()?;
        let cq = CqStateT::new(sigma.pmf().clone(), outs)?;
        let gap = linalg::max_abs_diff(cq.marginal_b().matrix(), cover.outputs()[w].matrix());
        if gap > SIDE_STATE_TOL {
            return Err(Error::SideStateMismatch(format!("message {w}: |tr_X σ − ρ^w| = {gap:.3e}")));
        }
        let code = build_resolvability_code(&cq, mbar, keys, seed.wrapping_add(w as u64), RESOLVABILITY_TRIALS)?;
        let z = (1.0 - code.reliability).max(code.distance);
        warning |= z > zeta;
        zetas.push(z);
        let lambda = cover.povm().elements()[w].matrix();
        for s in 0..keys {
            let gammas: Vec<Mat> = code.decoders[s].elements().iter().map(|e| e.matrix().clone()).collect();
            elements[s].extend(nested_elements(lambda, &gammas)?);
            encoders[s].extend(code.codebooks[s].iter().map(|&x| sigma.states()[x].clone()));
        }
    }
    finish(cover, Some(n_true), encoders, elements, mbar, &zetas, log2_usize(keys), warning)
}

#[allow(clippy::too_many_arguments)]
fn finish(
    cover: &CcCode,
    n_true: Option<&Channel>,
    encoders: Vec<Vec<Dm>>,
    elements: Vec<Vec<Mat>>,
    mbar: usize,
    zetas: &[f64],
    key_bits: f64,
    warning: bool,
) -> Result<StegoCcCode> {
    let nested_defect = elements.iter().map(|e| completeness_defect(e)).fold(0.0, f64::max);
    if nested_defect > NESTED_TOL {
        return Err(Error::Numerical(format!("nested POVM incomplete by {nested_defect:.3e}")));
    }
    let decoders: Vec<Povm> = elements
        .into_iter()
        .map(|es| PovmT::from_trusted(es.into_iter().map(HermitianOperatorT::from_trusted).collect()))
        .collect();
    let mut code = StegoCcCode {
        m: cover.m(),
        mbar,
        keys: encoders.len(),
        encoders,
        decoders,
        per_message: Vec::new(),
        audit: StegoAudit {
            dist_trace: 0.0,
            p_decode: 0.0,
            zeta_achieved: zetas.iter().cloned().fold(0.0, f64::max),
            eps_cover: 1.0 - cover.reliability(),
            key_bits,
            nested_defect,
            decode_bound: 0.0,
            bound_ok: false,
        },
        warning,
    };
    let eps_w: Vec<f64> = cover
        .outputs()
        .iter()
        .zip(cover.povm().elements())
        .map(|(r, e)| 1.0 - e.expectation(r))
        .collect();
    audit_stego_cc(&mut code, cover, n_true, zetas, &eps_w)?;
    Ok(code)
}

/// Recomputes distances and decoding probabilities from the stored encoders
/// and decoders. `n_true = None` means the identity channel.
pub fn audit_stego_cc(
    code: &mut StegoCcCode,
    cover: &CcCode,
    n_true: Option<&Channel>,
    zetas: &[f64],
    eps_w: &[f64],
) -> Result<()> {
    let (m, mbar, keys) = (code.m, code.mbar, code.keys);
    let mut per_message = Vec::with_capacity(m);
    let mut received_all = Vec::with_capacity(m);
    let mut p_total = 0.0;
    for w in 0..m {
        let mut received = Vec::with_capacity(keys * mbar);
        let mut hits = 0.0;
        for s in 0..keys {
            for wb in 0..mbar {
                let idx = code.index(w, wb);
                let input = code.encoders[s][idx].matrix();
                let out = match n_true {
                    Some(ch) => ch.apply_matrix(input),
                    None => input.clone(),
                };
                hits += expectation(code.decoders[s].elements()[idx].matrix(), &out);
                received.push(out);
            }
        }
        let avg = average(&received);
        let dist = trace_distance(&avg, cover.outputs()[w].matrix())?;
        let p = hits / (keys * mbar) as f64;
        p_total += p;
        let bound_ok = dist <= zetas[w] + AUDIT_SLACK && p >= decode_bound(zetas[w], eps_w[w]) - AUDIT_SLACK;
        per_message.push(MessageAudit { w, zeta: zetas[w], eps: eps_w[w], dist, p_decode: p, bound_ok });
        received_all.push(avg);
    }
    let a = &mut code.audit;
    a.dist_trace = trace_distance(&average(&received_all), &cover.average_output())?;
    a.p_decode = p_total / m as f64;
    a.decode_bound = decode_bound(a.zeta_achieved, a.eps_cover);
    a.bound_ok = a.dist_trace <= a.zeta_achieved + AUDIT_SLACK && a.p_decode >= a.decode_bound - AUDIT_SLACK;
    code.per_message = per_message;
    Ok(())
}
