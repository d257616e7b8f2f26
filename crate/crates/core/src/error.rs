use thiserror::Error;

/// Errors produced by the state algebra, the protocol model, the simulator and the estimators.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("state vector is not normalized (squared norm {0})")]
    NotNormalized(f64),

    #[error("matrix is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),

    #[error("trace is not one (got {0})")]
    InvalidTrace(f64),

    #[error("matrix is not positive semidefinite (smallest eigenvalue {0:e})")]
    NotPositive(f64),

    #[error("unknown {kind} `{name}`")]
    UnknownName { kind: &'static str, name: String },

    #[error("inconsistent Bell outcome: {0}")]
    InconsistentOutcome(String),

    #[error(
        "duration {duration_s:e} s is not a positive multiple of the loop period {period_s:e} s"
    )]
    LoopMisaligned { duration_s: f64, period_s: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("unphysical configuration: {0}")]
    Unphysical(String),

    #[error("zero denominator in {0}")]
    ZeroDenominator(&'static str),

    #[error("measurement set is not informationally complete (rank {rank} of {required})")]
    NotInformationallyComplete { rank: usize, required: usize },

    #[error("input states do not span the qubit operator space (rank {rank} of 4)")]
    InsufficientInputSpan { rank: usize },

    #[error("missing measurement setting: {0}")]
    MissingSetting(String),

    #[error(
        "estimator did not converge after {iterations} iterations \
         (last log-likelihood change {last_change:e})"
    )]
    NotConverged { iterations: usize, last_change: f64 },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("no events in detection window starting at {offset_s:e} s")]
    EmptyWindow { offset_s: f64 },

    #[error("line {line}: {reason}")]
    MalformedRecord { line: usize, reason: String },

    #[error("no events")]
    NoEvents,

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
