use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised across the library.
///
/// Variants are grouped loosely by the module that raises them. The CLI maps
/// each variant to an exit code through [`Error::exit_code`].
#[derive(Debug, Error)]
pub enum Error {
    // structural causal models
    #[error("cycle detected among endogenous nodes: {0}")]
    CycleDetected(String),
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("matrix is singular or ill-conditioned (condition estimate {0:e})")]
    SingularMatrix(f64),
    #[error("unknown fixture `{0}`")]
    UnknownFixture(String),
    #[error("invalid expression `{expr}`: {reason}")]
    Expression { expr: String, reason: String },

    // transport
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("marginal masses differ: {src} vs {tgt}")]
    InfeasibleWeights { src: f64, tgt: f64 },
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("instance too large for exhaustive enumeration ({n}x{m})")]
    TooLarge { n: usize, m: usize },
    #[error("coupling row {0} carries no mass")]
    EmptyRow(usize),

    // counterfactual models
    #[error("statistical parity violated: label {label} has share {left} in group {s} but {right} in group {s_prime}")]
    ParityViolated {
        label: i64,
        s: i64,
        s_prime: i64,
        left: f64,
        right: f64,
    },
    #[error("unknown group {0}")]
    UnknownGroup(i64),
    #[error("unknown atom {index} in group {group}")]
    UnknownAtom { group: i64, index: usize },

    // fairness
    #[error("operation requires a {expected} task")]
    TaskMismatch { expected: &'static str },
    #[error("expected {expected} groups, found {found}")]
    GroupCount { expected: String, found: usize },
    #[error("target variance is zero")]
    ZeroTargetVariance,
    #[error("counterfactual model is not deterministic (pair {s}->{s_prime}, atom {index})")]
    NonDeterministicModel { s: i64, s_prime: i64, index: usize },

    // learning
    #[error("loss became non-finite at iteration {0}")]
    NonFiniteLoss(usize),

    // data
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("group {0} is empty")]
    EmptyGroup(i64),
    #[error("parse failure: {0}")]
    ParseFailure(String),

    // plumbing
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code: 2 for usage and validation problems, 3 for
    /// numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::SingularMatrix(_) | Error::NonFiniteLoss(_) | Error::EmptyRow(_) => 3,
            _ => 2,
        }
    }
}
