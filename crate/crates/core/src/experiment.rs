//! JSON-configured experiments producing a CSV table (one row per parameter
//! point) and a JSON summary.
//!
//! A config is `{"kind": ..., "seed": ..., "sweep": [point, ...]}` where the
//! point schema depends on the kind. Points are evaluated in parallel and
//! written in sweep order; each point's seed is `seed + index`.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::StandardChannel;
use crate::error::{Error, Result};
use crate::hashing::HashOptions;
use crate::linalg;
use crate::measures::{CqStateT, OrderSearch, Pmf};
use crate::protocols::{self, cc_es, es_rs, qc_cc, CcCode};
use crate::rates::{self, ProductMode};
use crate::state::{tensor_all, DensityMatrixT, PovmT, PureStateT};
use crate::QuantumChannel;

type Dm = DensityMatrixT<f64>;

/// Input state description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "kebab-case", deny_unknown_fields)]
pub enum StateSpec {
    Basis { dim: usize, index: usize },
    Plus,
    Minus,
    MaximallyMixed { dim: usize },
    Diagonal { probs: Vec<f64> },
    Product { factors: Vec<StateSpec> },
}

impl StateSpec {
    pub fn build(&self) -> Result<Dm> {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Ok(match self {
            StateSpec::Basis { dim, index } => {
                if index >= dim {
                    return Err(Error::Config(format!("basis index {index} out of range for dim {dim}")));
                }
                DensityMatrixT::basis(*dim, *index)
            }
            StateSpec::Plus | StateSpec::Minus => {
                let s = if matches!(self, StateSpec::Plus) { h } else { -h };
                let v = linalg::CVec::from_vec(vec![linalg::cplx(h, 0.0), linalg::cplx(s, 0.0)]);
                DensityMatrixT::from_pure(&PureStateT::new(v)?)
            }
            StateSpec::MaximallyMixed { dim } => DensityMatrixT::maximally_mixed(*dim),
            StateSpec::Diagonal { probs } => DensityMatrixT::diagonal(probs)?,
            StateSpec::Product { factors } => {
                let parts = factors.iter().map(StateSpec::build).collect::<Result<Vec<_>>>()?;
                tensor_all(&parts)?
            }
        })
    }
}

/// One channel for every use, or one per use.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum UsesSpec {
    Same(StandardChannel),
    PerUse(Vec<StandardChannel>),
}

impl UsesSpec {
    pub fn build(&self, n: usize) -> Result<QuantumChannel> {
        let list: Vec<StandardChannel> = match self {
            UsesSpec::Same(c) => vec![c.clone(); n],
            UsesSpec::PerUse(v) => {
                if v.len() != n {
                    return Err(Error::Config(format!("{} per-use channels for n = {n}", v.len())));
                }
                v.clone()
            }
        };
        let mut it = list.iter();
        let mut acc: QuantumChannel = it.next().ok_or_else(|| Error::Config("n must be >= 1".into()))?.build()?;
        for c in it {
            acc = acc.tensor(&c.build()?)?;
        }
        Ok(acc)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CqSpec {
    pub probs: Vec<f64>,
    pub states: Vec<StateSpec>,
}

impl CqSpec {
    fn build_inputs(&self) -> Result<CqStateT<f64>> {
        let states = self.states.iter().map(StateSpec::build).collect::<Result<Vec<_>>>()?;
        CqStateT::new(Pmf::new(self.probs.clone())?, states)
    }
}

/// Evenly spaced axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub from: f64,
    pub to: f64,
    pub steps: usize,
}

impl Axis {
    pub fn values(&self) -> Vec<f64> {
        match self.steps {
            0 => Vec::new(),
            1 => vec![self.from],
            s => (0..s).map(|i| self.from + (self.to - self.from) * i as f64 / (s - 1) as f64).collect(),
        }
    }
}

fn default_nu_tol() -> f64 {
    crate::state::DEFAULT_NU_TOL
}

fn default_trials() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CcCoverSpec {
    pub n: usize,
    /// Warden's per-use channel(s).
    pub channel: UsesSpec,
    pub codewords: Vec<StateSpec>,
    /// Outcome for each computational basis state of the output.
    pub labels: Vec<usize>,
}

impl CcCoverSpec {
    pub fn build(&self) -> Result<CcCode> {
        let ch = self.channel.build(self.n)?;
        let words = self.codewords.iter().map(StateSpec::build).collect::<Result<Vec<_>>>()?;
        let povm = PovmT::projective(&linalg::identity(ch.dim_out()), &self.labels, words.len())?;
        CcCode::new(self.n, words, povm, ch)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ExperimentConfig {
    RateCcNoiseless {
        #[serde(default)]
        seed: u64,
        sweep: Vec<RateCcNoiselessPoint>,
    },
    RateCcNoisy {
        #[serde(default)]
        seed: u64,
        sweep: Vec<RateCcNoisyPoint>,
    },
    RateGaussian {
        #[serde(default)]
        seed: u64,
        sweep: Vec<GaussianPoint>,
    },
    RateProduct {
        #[serde(default)]
        seed: u64,
        sweep: Vec<ProductPoint>,
    },
    SimulateCcNoiseless {
        #[serde(default)]
        seed: u64,
        sweep: Vec<CcNoiselessPoint>,
    },
    SimulateCcNoisy {
        #[serde(default)]
        seed: u64,
        sweep: Vec<CcNoisyPoint>,
    },
    SimulateCcEs {
        #[serde(default)]
        seed: u64,
        sweep: Vec<CcEsPoint>,
    },
    SimulateEsRs {
        #[serde(default)]
        seed: u64,
        sweep: Vec<EsRsPoint>,
    },
    SimulateQcCc {
        #[serde(default)]
        seed: u64,
        sweep: Vec<QcCcPoint>,
    },
    SimulateResolvability {
        #[serde(default)]
        seed: u64,
        sweep: Vec<ResolvabilityPoint>,
    },
    VerifyGentle {
        #[serde(default)]
        seed: u64,
        sweep: Vec<GentlePoint>,
    },
    VerifyPjBound {
        #[serde(default)]
        seed: u64,
        sweep: Vec<PjPoint>,
    },
    VerifySutherland {
        #[serde(default)]
        seed: u64,
        sweep: Vec<SutherlandPoint>,
    },
    VerifyRandomCode {
        #[serde(default)]
        seed: u64,
        sweep: Vec<RandomCodePoint>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateCcNoiselessPoint {
    pub n: usize,
    pub channel: UsesSpec,
    pub codewords: Vec<StateSpec>,
    pub zeta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateCcNoisyPoint {
    pub n: usize,
    /// True per-use channel(s) applied to the side-state inputs.
    pub channel: UsesSpec,
    pub side: Vec<CqSpec>,
    pub zeta: f64,
    pub xi: f64,
    #[serde(default = "default_nu_tol")]
    pub nu_tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianPoint {
    pub n: f64,
    pub r: f64,
    pub zeta: f64,
    pub nu0: Axis,
    pub nu1: Axis,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProductPoint {
    pub channel: StandardChannel,
    pub n: usize,
    pub k: usize,
    pub delta: f64,
    pub states: Vec<StateSpec>,
    /// Candidate decompositions per state; selects the noisy mode when present.
    #[serde(default)]
    pub candidates: Option<Vec<Vec<CqSpec>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CcNoiselessPoint {
    pub cover: CcCoverSpec,
    pub mbar: usize,
    pub zeta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CcNoisyPoint {
    /// The cover with the warden's channel `N∘M` per use.
    pub cover: CcCoverSpec,
    /// True per-use channel(s).
    pub true_channel: UsesSpec,
    pub side: Vec<CqSpec>,
    pub mbar: usize,
    pub keys: usize,
    pub zeta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CcEsPoint {
    pub mbar: usize,
    #[serde(default)]
    pub mbar_cc: Option<usize>,
    pub zeta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EsRsPoint {
    pub mbar: usize,
    pub zeta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QcCcPoint {
    /// Bit-flip probability of the repetition-code cover.
    pub p: f64,
    pub mbar: usize,
    pub zeta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResolvabilityPoint {
    pub source: CqSpec,
    pub m: usize,
    pub k: usize,
    pub seeds: usize,
    #[serde(default = "default_trials")]
    pub trials: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GentlePoint {
    pub instances: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PjPoint {
    pub p: f64,
    pub delta: f64,
    #[serde(default)]
    pub clamp: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SutherlandPoint {
    pub p: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomCodePoint {
    pub channel: StandardChannel,
    pub n: usize,
    pub m: usize,
    pub samples: usize,
    pub delta: f64,
}

/// A CSV cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Real(f64),
    Bool(bool),
    Text(String),
}

impl Cell {
    pub fn render(&self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Real(x) => format_real(*x),
            Cell::Bool(b) => b.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Real(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

/// Fixed 12-digit decimal; `-0` prints as `0`, infinities as `inf`/`-inf`.
pub fn format_real(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let s = format!("{x:.12}");
    if s.starts_with('-') && s[1..].chars().all(|c| c == '0' || c == '.') {
        s[1..].to_string()
    } else {
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    /// Pass/fail flag per row (rows without a flag count as passing).
    pub pass: Vec<bool>,
}

impl Table {
    fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new(), pass: Vec::new() }
    }

    fn push(&mut self, row: Vec<Cell>, ok: bool) {
        self.rows.push(row);
        self.pass.push(ok);
    }

    pub fn all_pass(&self) -> bool {
        self.pass.iter().all(|&p| p)
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(&self.header).map_err(|e| Error::Config(e.to_string()))?;
        for r in &self.rows {
            w.write_record(r.iter().map(Cell::render)).map_err(|e| Error::Config(e.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Config(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Config(e.to_string()))
    }
}

impl ExperimentConfig {
    pub fn kind(&self) -> &'static str {
        match self {
            ExperimentConfig::RateCcNoiseless { .. } => "rate-cc-noiseless",
            ExperimentConfig::RateCcNoisy { .. } => "rate-cc-noisy",
            ExperimentConfig::RateGaussian { .. } => "rate-gaussian",
            ExperimentConfig::RateProduct { .. } => "rate-product",
            ExperimentConfig::SimulateCcNoiseless { .. } => "simulate-cc-noiseless",
            ExperimentConfig::SimulateCcNoisy { .. } => "simulate-cc-noisy",
            ExperimentConfig::SimulateCcEs { .. } => "simulate-cc-es",
            ExperimentConfig::SimulateEsRs { .. } => "simulate-es-rs",
            ExperimentConfig::SimulateQcCc { .. } => "simulate-qc-cc",
            ExperimentConfig::SimulateResolvability { .. } => "simulate-resolvability",
            ExperimentConfig::VerifyGentle { .. } => "verify-gentle",
            ExperimentConfig::VerifyPjBound { .. } => "verify-pj-bound",
            ExperimentConfig::VerifySutherland { .. } => "verify-sutherland",
            ExperimentConfig::VerifyRandomCode { .. } => "verify-random-code",
        }
    }

    pub fn seed(&self) -> u64 {
        match self {
            ExperimentConfig::RateCcNoiseless { seed, .. }
            | ExperimentConfig::RateCcNoisy { seed, .. }
            | ExperimentConfig::RateGaussian { seed, .. }
            | ExperimentConfig::RateProduct { seed, .. }
            | ExperimentConfig::SimulateCcNoiseless { seed, .. }
            | ExperimentConfig::SimulateCcNoisy { seed, .. }
            | ExperimentConfig::SimulateCcEs { seed, .. }
            | ExperimentConfig::SimulateEsRs { seed, .. }
            | ExperimentConfig::SimulateQcCc { seed, .. }
            | ExperimentConfig::SimulateResolvability { seed, .. }
            | ExperimentConfig::VerifyGentle { seed, .. }
            | ExperimentConfig::VerifyPjBound { seed, .. }
            | ExperimentConfig::VerifySutherland { seed, .. }
            | ExperimentConfig::VerifyRandomCode { seed, .. } => *seed,
        }
    }

    pub fn set_seed(&mut self, new: u64) {
        match self {
            ExperimentConfig::RateCcNoiseless { seed, .. }
            | ExperimentConfig::RateCcNoisy { seed, .. }
            | ExperimentConfig::RateGaussian { seed, .. }
            | ExperimentConfig::RateProduct { seed, .. }
            | ExperimentConfig::SimulateCcNoiseless { seed, .. }
            | ExperimentConfig::SimulateCcNoisy { seed, .. }
            | ExperimentConfig::SimulateCcEs { seed, .. }
            | ExperimentConfig::SimulateEsRs { seed, .. }
            | ExperimentConfig::SimulateQcCc { seed, .. }
            | ExperimentConfig::SimulateResolvability { seed, .. }
            | ExperimentConfig::VerifyGentle { seed, .. }
            | ExperimentConfig::VerifyPjBound { seed, .. }
            | ExperimentConfig::VerifySutherland { seed, .. }
            | ExperimentConfig::VerifyRandomCode { seed, .. } => *seed = new,
        }
    }
}

#[derive(Deserialize)]
struct KindOnly {
    kind: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Envelope<P> {
    #[allow(dead_code)]
    kind: String,
    #[serde(default)]
    seed: u64,
    sweep: Vec<P>,
}

fn line_of(text: &str, needle: &str) -> Option<usize> {
    text.lines().position(|l| l.contains(needle)).map(|i| i + 1)
}

fn config_error(text: &str, e: serde_json::Error) -> Error {
    let msg = e.to_string();
    let msg = msg.rsplit_once(" at line ").map_or(msg.as_str(), |(m, _)| m).to_string();
    if e.line() > 0 {
        return Error::Config(format!("line {} column {}: {msg}", e.line(), e.column()));
    }
    // Errors inside tagged sub-objects come without a position; anchor on the
    // first quoted identifier named in the message.
    let anchor = msg.split('`').nth(1).and_then(|id| line_of(text, &format!("\"{id}\"")));
    match anchor {
        Some(l) => Error::Config(format!("line {l}: {msg}")),
        None => Error::Config(msg),
    }
}

fn typed<P: serde::de::DeserializeOwned>(text: &str) -> Result<(u64, Vec<P>)> {
    let env: Envelope<P> = serde_json::from_str(text).map_err(|e| config_error(text, e))?;
    Ok((env.seed, env.sweep))
}

/// Parses a config; errors carry the line (and column when known).
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    use ExperimentConfig as C;
    let kind = serde_json::from_str::<KindOnly>(text).map_err(|e| config_error(text, e))?.kind;
    macro_rules! arm {
        ($v:ident) => {{
            let (seed, sweep) = typed(text)?;
            C::$v { seed, sweep }
        }};
    }
    Ok(match kind.as_str() {
        "rate-cc-noiseless" => arm!(RateCcNoiseless),
        "rate-cc-noisy" => arm!(RateCcNoisy),
        "rate-gaussian" => arm!(RateGaussian),
        "rate-product" => arm!(RateProduct),
        "simulate-cc-noiseless" => arm!(SimulateCcNoiseless),
        "simulate-cc-noisy" => arm!(SimulateCcNoisy),
        "simulate-cc-es" => arm!(SimulateCcEs),
        "simulate-es-rs" => arm!(SimulateEsRs),
        "simulate-qc-cc" => arm!(SimulateQcCc),
        "simulate-resolvability" => arm!(SimulateResolvability),
        "verify-gentle" => arm!(VerifyGentle),
        "verify-pj-bound" => arm!(VerifyPjBound),
        "verify-sutherland" => arm!(VerifySutherland),
        "verify-random-code" => arm!(VerifyRandomCode),
        other => {
            let at = line_of(text, "\"kind\"").map_or(String::new(), |l| format!("line {l}: "));
            return Err(Error::Config(format!("{at}unknown experiment kind `{other}`")));
        }
    })
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    parse_config(&text).map_err(|e| match e {
        Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
        other => other,
    })
}

fn par_rows<P, F>(points: &[P], seed: u64, f: F) -> Result<Vec<Vec<(Vec<Cell>, bool)>>>
where
    P: Sync,
    F: Fn(&P, u64) -> Result<Vec<(Vec<Cell>, bool)>> + Sync,
{
    points.par_iter().enumerate().map(|(i, p)| f(p, seed.wrapping_add(i as u64))).collect()
}

fn collect(header: &[&str], groups: Vec<Vec<(Vec<Cell>, bool)>>) -> Table {
    let mut t = Table::new(header);
    for (row, ok) in groups.into_iter().flatten() {
        t.push(row, ok);
    }
    t
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Evaluates every point of the sweep.
pub fn run_config(cfg: &ExperimentConfig) -> Result<Table> {
    let seed = cfg.seed();
    match cfg {
        ExperimentConfig::RateCcNoiseless { sweep, .. } => {
            let g = par_rows(sweep, seed, |p, _| {
                let ch = p.channel.build(p.n)?;
                let outs = p.codewords.iter().map(|s| ch.apply(&s.build()?)).collect::<Result<Vec<_>>>()?;
                let r = rates::rate_cc_noiseless(&outs, p.zeta)?;
                Ok(vec![(
                    vec![p.n.into(), p.zeta.into(), r.value.into(), r.raw.into(), r.argmax.unwrap_or(f64::NAN).into(), r.boundary.into()],
                    true,
                )])
            })?;
            Ok(collect(&["n", "zeta", "rate", "raw", "argmax_a", "boundary"], g))
        }
        ExperimentConfig::RateCcNoisy { sweep, .. } => {
            let g = par_rows(sweep, seed, |p, _| {
                let ch = p.channel.build(p.n)?;
                let side = p
                    .side
                    .iter()
                    .map(|s| {
                        let cq = s.build_inputs()?;
                        let outs = cq.states().iter().map(|x| ch.apply(x)).collect::<Result<Vec<_>>>()?;
                        CqStateT::new(cq.pmf().clone(), outs)
                    })
                    .collect::<Result<Vec<_>>>()?;
                let r = rates::rate_cc_noisy(&side, p.zeta, p.xi, p.nu_tol)?;
                let (m6, k6) = (r.by_nu_tol[0].1, r.by_nu_tol[0].2);
                let (m8, k8) = (r.by_nu_tol[1].1, r.by_nu_tol[1].2);
                Ok(vec![(
                    vec![
                        p.n.into(),
                        p.zeta.into(),
                        p.xi.into(),
                        r.log_mbar.value.into(),
                        r.log_mbar.raw.into(),
                        r.log_kbar.value.into(),
                        r.log_kbar.raw.into(),
                        m6.into(),
                        k6.into(),
                        m8.into(),
                        k8.into(),
                        (r.log_mbar.boundary || r.log_kbar.boundary).into(),
                    ],
                    true,
                )])
            })?;
            Ok(collect(
                &[
                    "n", "zeta", "xi", "log_mbar", "log_mbar_raw", "log_kbar", "log_kbar_raw", "log_mbar_nu1e-6",
                    "log_kbar_nu1e-6", "log_mbar_nu1e-8", "log_kbar_nu1e-8", "boundary",
                ],
                g,
            ))
        }
        ExperimentConfig::RateGaussian { sweep, .. } => {
            let mut t = Table::new(&["nu0", "nu1", "n", "r", "zeta", "rate", "raw", "argmax_a", "boundary"]);
            for p in sweep {
                let grid: Vec<(f64, f64)> =
                    p.nu0.values().into_iter().flat_map(|a| p.nu1.values().into_iter().map(move |b| (a, b))).collect();
                let rows: Vec<Vec<Cell>> = grid
                    .par_iter()
                    .map(|&(a, b)| {
                        let r = rates::rate_gaussian(a, b, p.n, p.r, p.zeta)?;
                        Ok(vec![
                            a.into(),
                            b.into(),
                            p.n.into(),
                            p.r.into(),
                            p.zeta.into(),
                            r.value.into(),
                            r.raw.into(),
                            r.argmax.unwrap_or(f64::NAN).into(),
                            r.boundary.into(),
                        ])
                    })
                    .collect::<Result<_>>()?;
                for r in rows {
                    t.push(r, true);
                }
            }
            Ok(t)
        }
        ExperimentConfig::RateProduct { sweep, .. } => {
            let g = par_rows(sweep, seed, |p, _| {
                let ch: QuantumChannel = p.channel.build()?;
                let states = p.states.iter().map(StateSpec::build).collect::<Result<Vec<_>>>()?;
                let mode = match &p.candidates {
                    None => ProductMode::Noiseless,
                    Some(c) => ProductMode::Noisy(
                        c.iter()
                            .map(|l| l.iter().map(CqSpec::build_inputs).collect::<Result<Vec<_>>>())
                            .collect::<Result<_>>()?,
                    ),
                };
                let r = rates::rate_product_structure(&states, &ch, p.n, p.k, p.delta, &mode)?;
                let label = if p.candidates.is_some() { "noisy" } else { "noiseless" };
                Ok(vec![(
                    vec![Cell::Text(label.into()), p.n.into(), p.k.into(), p.delta.into(), r.value.into(), r.raw.into()],
                    true,
                )])
            })?;
            Ok(collect(&["mode", "n", "k", "delta", "rate", "raw"], g))
        }
        ExperimentConfig::SimulateCcNoiseless { sweep, .. } => {
            let g = par_rows(sweep, seed, |p, s| {
                let cover = p.cover.build()?;
                let code = protocols::build_stego_cc_noiseless(&cover, p.mbar, p.zeta, HashOptions::seeded(s))?;
                Ok(code
                    .per_message
                    .iter()
                    .map(|m| {
                        let ok = m.bound_ok && code.audit.bound_ok;
                        (
                            vec![
                                m.w.into(),
                                p.cover.n.into(),
                                p.mbar.into(),
                                m.zeta.into(),
                                m.dist.into(),
                                m.p_decode.into(),
                                ok.into(),
                            ],
                            ok,
                        )
                    })
                    .collect())
            })?;
            Ok(collect(&["w", "n", "mbar", "zeta_achieved", "dist_trace", "p_decode", "bound_ok"], g))
        }
        ExperimentConfig::SimulateCcNoisy { sweep, .. } => {
            let g = par_rows(sweep, seed, |p, s| {
                let cover = p.cover.build()?;
                let n_true = p.true_channel.build(p.cover.n)?;
                let side = p.side.iter().map(CqSpec::build_inputs).collect::<Result<Vec<_>>>()?;
                let code = protocols::build_stego_cc_noisy(&cover, &n_true, &side, p.mbar, p.keys, p.zeta, s)?;
                Ok(code
                    .per_message
                    .iter()
                    .map(|m| {
                        let ok = m.bound_ok && code.audit.bound_ok;
                        (
                            vec![
                                m.w.into(),
                                p.cover.n.into(),
                                p.mbar.into(),
                                p.keys.into(),
                                m.zeta.into(),
                                m.dist.into(),
                                m.p_decode.into(),
                                code.audit.key_bits.into(),
                                ok.into(),
                            ],
                            ok,
                        )
                    })
                    .collect())
            })?;
            Ok(collect(
                &["w", "n", "mbar", "keys", "zeta_achieved", "dist_trace", "p_decode", "key_bits", "bound_ok"],
                g,
            ))
        }
        ExperimentConfig::SimulateCcEs { sweep, .. } => {
            let g = par_rows(sweep, seed, |p, s| {
                let cover = cc_es::dephasing_demo_cover()?;
                let code = protocols::build_stego_cc_es(
                    &cover,
                    &protocols::TrivialAligner,
                    p.mbar,
                    p.mbar_cc,
                    p.zeta,
                    HashOptions::seeded(s),
                )?;
                let a = &code.audit;
                Ok(vec![(
                    vec![
                        p.mbar.into(),
                        code.mbar_cc.into(),
                        a.reliability.into(),
                        a.reliability_bound.into(),
                        a.ent_distance.into(),
                        a.ent_bound.into(),
                        a.dist_trace.into(),
                        a.key_bits.into(),
                        a.bound_ok.into(),
                    ],
                    a.bound_ok,
                )])
            })?;
            Ok(collect(
                &[
                    "mbar", "mbar_cc", "reliability", "reliability_bound", "ent_distance", "ent_bound", "dist_trace",
                    "key_bits", "bound_ok",
                ],
                g,
            ))
        }
        ExperimentConfig::SimulateEsRs { sweep, .. } => {
            let g = par_rows(sweep, seed, |p, s| {
                let cover = es_rs::dephasing_demo_cover()?;
                let code = protocols::build_stego_es_rs(&cover, p.mbar, p.zeta, HashOptions::seeded(s))?;
                let a = &code.audit;
                let ok = a.bound_ok && a.b_output_gap <= 1e-10;
                Ok(vec![(
                    vec![
                        p.mbar.into(),
                        a.fidelity.into(),
                        a.bound.into(),
                        a.zeta_achieved.into(),
                        a.eps_cover.into(),
                        a.b_output_gap.into(),
                        ok.into(),
                    ],
                    ok,
                )])
            })?;
            Ok(collect(&["mbar", "fidelity", "bound", "zeta_achieved", "eps_cover", "b_output_gap", "bound_ok"], g))
        }
        ExperimentConfig::SimulateQcCc { sweep, .. } => {
            let g = par_rows(sweep, seed, |p, s| {
                let cover = qc_cc::bit_flip_code(p.p)?;
                let code = protocols::build_stego_qc_cc(&cover, p.mbar, p.zeta, HashOptions::seeded(s))?;
                let a = &code.audit;
                let closed = bit_flip_pj(p.p);
                let pj_err = closed.iter().zip(&a.p_j).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
                let ok = a.bound_ok && pj_err <= 1e-10;
                Ok(vec![(
                    vec![
                        p.p.into(),
                        p.mbar.into(),
                        a.c.into(),
                        a.zeta_achieved.into(),
                        a.kl_residual.into(),
                        pj_err.into(),
                        a.decode_min.into(),
                        a.dist_max.into(),
                        a.dist_bound.into(),
                        ok.into(),
                    ],
                    ok,
                )])
            })?;
            Ok(collect(
                &[
                    "p", "mbar", "c", "zeta_achieved", "kl_residual", "pj_error", "decode_min", "dist_max",
                    "dist_bound", "bound_ok",
                ],
                g,
            ))
        }
        ExperimentConfig::SimulateResolvability { sweep, .. } => {
            let g = par_rows(sweep, seed, |p, s| {
                let src = p.source.build_inputs()?;
                let runs = (0..p.seeds)
                    .map(|i| protocols::build_resolvability_code(&src, p.m, p.k, s.wrapping_mul(1_000_003).wrapping_add(i as u64), p.trials))
                    .collect::<Result<Vec<_>>>()?;
                let mut d: Vec<f64> = runs.iter().map(|r| r.distance).collect();
                let mean_rel = runs.iter().map(|r| r.reliability).sum::<f64>() / p.seeds.max(1) as f64;
                let mean_d = d.iter().sum::<f64>() / p.seeds.max(1) as f64;
                let med = median(&mut d);
                Ok(vec![(
                    vec![p.m.into(), p.k.into(), (p.m * p.k).into(), p.seeds.into(), med.into(), mean_d.into(), mean_rel.into()],
                    true,
                )])
            })?;
            Ok(collect(&["m", "k", "mk", "seeds", "median_distance", "mean_distance", "mean_reliability"], g))
        }
        ExperimentConfig::VerifyGentle { sweep, .. } => {
            let g = par_rows(sweep, seed, |p, s| {
                let mut rng = ChaCha8Rng::seed_from_u64(s);
                (0..p.instances)
                    .map(|i| {
                        let inst = protocols::random_gentle_instance(&mut rng);
                        let r = protocols::verify_gentle_composition(&inst.states, &inst.channels, &inst.povm, &inst.p)?;
                        Ok((vec![i.into(), r.lhs.into(), r.eps.into(), r.bound.into(), r.holds.into()], r.holds))
                    })
                    .collect()
            })?;
            Ok(collect(&["instance", "lhs", "eps", "bound", "holds"], g))
        }
        ExperimentConfig::VerifyPjBound { sweep, .. } => {
            let g = par_rows(sweep, seed, |p, _| {
                let cover = qc_cc::bit_flip_code(p.p)?;
                let r = if p.clamp {
                    protocols::verify_pj_minentropy_bound_clamped(&cover, p.delta)?
                } else {
                    protocols::verify_pj_minentropy_bound(&cover, p.delta)?
                };
                Ok(vec![(
                    vec![
                        p.p.into(),
                        p.delta.into(),
                        r.eps.into(),
                        r.delta_env.into(),
                        r.lhs.into(),
                        r.rhs.into(),
                        r.clamped.into(),
                        r.holds.into(),
                    ],
                    r.holds,
                )])
            })?;
            Ok(collect(&["p", "delta", "eps", "delta_env", "lhs", "rhs", "clamped", "holds"], g))
        }
        ExperimentConfig::VerifySutherland { sweep, .. } => {
            let g = par_rows(sweep, seed, |p, _| {
                let cover = qc_cc::bit_flip_code(p.p)?;
                let single = QuantumChannel::bit_flip(p.p)?;
                let r = rates::experiment_sutherland_bound(&cover, &single, 3, p.delta, &OrderSearch::unit_interval())?;
                Ok(vec![(
                    vec![p.p.into(), 3usize.into(), p.delta.into(), r.lhs.into(), r.entropy_p.into(), r.rhs.into(), r.margin.into(), r.holds.into()],
                    r.holds,
                )])
            })?;
            Ok(collect(&["p", "n", "delta", "lhs", "entropy_p", "rhs", "margin", "holds"], g))
        }
        ExperimentConfig::VerifyRandomCode { sweep, .. } => {
            let g = par_rows(sweep, seed, |p, s| {
                let ch: QuantumChannel = p.channel.build()?;
                let r = rates::experiment_random_code_entropy(p.m, p.n, &ch, p.samples, s, p.delta)?;
                Ok(vec![(
                    vec![
                        p.n.into(),
                        p.m.into(),
                        p.samples.into(),
                        r.mean.into(),
                        r.stderr.into(),
                        r.min_rank.into(),
                        r.bound.into(),
                        r.holds.into(),
                    ],
                    r.holds,
                )])
            })?;
            Ok(collect(&["n", "m", "samples", "mean", "stderr", "min_rank", "bound", "holds"], g))
        }
    }
}

/// `P_J` of the repetition code under `bit_flip(p)^{⊗3}` in closed form.
pub fn bit_flip_pj(p: f64) -> Vec<f64> {
    let d = [(1.0 - p).powi(3), p * (1.0 - p).powi(2), p * (1.0 - p).powi(2), p * (1.0 - p).powi(2)];
    let s: f64 = d.iter().sum();
    d.iter().map(|x| x / s).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub kind: String,
    pub seed: u64,
    pub version: String,
    pub wall_time_s: f64,
    pub rows: usize,
    pub failed_rows: usize,
    pub passed: bool,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub table: Table,
    pub csv: String,
    pub summary: Summary,
    pub written: Vec<PathBuf>,
}

/// Runs a config and, when `out_dir` is given, writes `<kind>.csv` and
/// `<kind>.json` there.
pub fn run_experiment(cfg: &ExperimentConfig, out_dir: Option<&Path>) -> Result<RunOutput> {
    let start = Instant::now();
    let table = run_config(cfg)?;
    let csv = table.to_csv()?;
    let summary = Summary {
        kind: cfg.kind().into(),
        seed: cfg.seed(),
        version: env!("CARGO_PKG_VERSION").into(),
        wall_time_s: start.elapsed().as_secs_f64(),
        rows: table.rows.len(),
        failed_rows: table.pass.iter().filter(|&&p| !p).count(),
        passed: table.all_pass(),
    };
    let mut written = Vec::new();
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir).map_err(|e| Error::Config(format!("{}: {e}", dir.display())))?;
        let csv_path = dir.join(format!("{}.csv", cfg.kind()));
        std::fs::write(&csv_path, &csv).map_err(|e| Error::Config(format!("{}: {e}", csv_path.display())))?;
        let json_path = dir.join(format!("{}.json", cfg.kind()));
        let json = serde_json::to_string_pretty(&summary).map_err(|e| Error::Config(e.to_string()))?;
        std::fs::write(&json_path, json + "\n").map_err(|e| Error::Config(format!("{}: {e}", json_path.display())))?;
        written.push(csv_path);
        written.push(json_path);
    }
    Ok(RunOutput { table, csv, summary, written })
}
