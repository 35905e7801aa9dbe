use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("invalid spectral bounds: alpha={alpha} must satisfy 0 <= alpha < beta={beta}")]
    InvalidBounds { alpha: f64, beta: f64 },

    #[error("spectral bounds must be finite for this operation (beta={beta})")]
    InfiniteBounds { beta: f64 },

    #[error("non-finite value in input")]
    NonFiniteInput,

    #[error("matrix is not symmetric: max asymmetry {asymmetry:e} exceeds tolerance {tolerance:e}")]
    Asymmetric { asymmetry: f64, tolerance: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("symmetric eigensolver failed to converge (n={n})")]
    EigenFailure { n: usize },

    #[error("penalty rho must be positive to derive finite bounds")]
    DegeneratePenalty,

    #[error("penalty rho must be finite and nonnegative, got {0}")]
    InvalidPenalty(f64),

    #[error("dual point violates |sigma_hat - sigma| <= rho by {violation:e}")]
    InfeasibleDualPoint { violation: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}
