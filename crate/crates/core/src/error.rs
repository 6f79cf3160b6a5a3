use thiserror::Error;

/// Errors raised across the toolkit. Display strings are stable and are
/// matched by the CLI and the tests.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension limit: {0} exceeds the cap of {1}")]
    DimensionLimit(usize, usize),
    #[error("shape error: {0}")]
    Shape(String),
    #[error("numerical error: {0}")]
    Numerical(String),
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("bad parameter: {0}")]
    BadParameter(String),
    #[error("invalid order: a must be nonzero")]
    InvalidOrder,
    #[error("no finite value over the order range")]
    NoFiniteValue,
    #[error("side-state mismatch: {0}")]
    SideStateMismatch(String),
    #[error("code does not satisfy QC_R split: {0}")]
    QcrSplit(String),
    #[error("invalid cover: {0}")]
    InvalidCover(String),
    #[error("distillation infeasible at requested M̄ = {0}")]
    DistillationInfeasible(usize),
    #[error("bound vacuous: delta {delta} <= 2 sqrt(eps) = {threshold}")]
    BoundVacuous { delta: f64, threshold: f64 },
    #[error("invalid symplectic eigenvalue: {0} < 1")]
    InvalidSymplectic(f64),
    #[error("divisibility: n = {n} is not a multiple of k = {k}")]
    Divisibility { n: usize, k: usize },
    #[error("config error: {0}")]
    Config(String),
    #[error("parse error: line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;
