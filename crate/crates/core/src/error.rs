use crate::models::ModelKind;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("empty dataset")]
    EmptyDataset,

    #[error("unknown built-in dataset `{0}` (expected product_a, product_b or product_c)")]
    UnknownDataset(String),

    #[error("invalid {kind} parameters: {reason}")]
    InvalidParams { kind: ModelKind, reason: String },

    #[error("{0} model diverges at t = 0")]
    DivergesAtOrigin(ModelKind),

    #[error("{kind} model is not finite at t = {time} h")]
    NonFinite { kind: ModelKind, time: f64 },

    #[error("load level {level} is outside the attainable range of the {kind} model")]
    OutOfRange { kind: ModelKind, level: f64 },

    #[error("could not bracket the time for load level {level}")]
    NoBracket { level: f64 },

    #[error("{needed} uncensored points required, {available} available")]
    InsufficientPoints { needed: usize, available: usize },

    #[error("invalid fit configuration: {0}")]
    InvalidConfig(String),

    #[error("no start converged for the {kind} fit (best SSE {best_sse})")]
    NoConvergence { kind: ModelKind, best_sse: f64 },

    #[error("fit has not converged")]
    NotConverged,

    #[error("non-positive degrees of freedom ({0})")]
    NonPositiveDof(i64),

    #[error("covariance is singular along the prediction gradient")]
    SingularCovariance,

    #[error("no failure detected; the record is censored")]
    NoFailure,

    #[error("series has no {0} channel")]
    MissingChannel(&'static str),

    #[error("regression lines are parallel; no intersection")]
    ParallelLines,

    #[error("window [{from} s, {to} s] holds {count} samples, at least {needed} required")]
    SparseWindow {
        from: f64,
        to: f64,
        count: usize,
        needed: usize,
    },

    #[error("intersection iteration did not converge after {0} iterations")]
    DetectionDiverged(usize),

    #[error("invalid series: {0}")]
    InvalidSeries(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}
