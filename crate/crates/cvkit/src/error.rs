//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A trajectory coordinate became non-finite; the step size is too
    /// large for the landscape.
    #[error("trajectory diverged at step {step} (|x| exceeded {threshold:e})")]
    Diverged { step: usize, threshold: f64 },

    #[error("lag {lag} is not smaller than the dataset size {len}")]
    LagTooLarge { lag: usize, len: usize },

    #[error("need at least 2 samples, got {0}")]
    TooFewSamples(usize),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid network spec: {0}")]
    InvalidSpec(String),

    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),

    #[error("eigensolver failed to converge: {0}")]
    ConvergenceFailure(String),

    /// Gram-Schmidt breakdown: the supplied family is (numerically)
    /// linearly dependent or constant.
    #[error("degenerate function family: {0}")]
    DegenerateFamily(String),

    #[error("need at least {need} bins, got {got}")]
    TooFewBins { need: usize, got: usize },

    #[error("bin {0} is empty")]
    EmptyBin(usize),

    #[error("feature variance below guard ({var:e} < {guard:e})")]
    DegenerateVariance { var: f64, guard: f64 },

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code for the CLI: 2 for configuration errors, 3 for
    /// numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidConfig(_) | Error::Json(_) | Error::Io(_) | Error::InvalidData(_) => 2,
            _ => 3,
        }
    }
}
