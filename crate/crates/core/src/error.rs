use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("width matrices violate the symplecticity condition (residual {0:e})")]
    NotSymplectic(f64),

    #[error("matrix {0} is not invertible")]
    NotInvertible(&'static str),

    #[error("{0} is not positive definite")]
    NotPositiveDefinite(&'static str),

    #[error("Butcher weight b[{0}] is zero")]
    ZeroWeight(usize),

    #[error("tableau is malformed: {0}")]
    BadTableau(String),

    #[error("step size too large: tau*|M| = {scaled_norm:.4} exceeds the guard {threshold:.4}")]
    StepTooLarge { scaled_norm: f64, threshold: f64 },

    #[error("the order-4 scheme does not support time-dependent fields")]
    TimeDependentUnsupported,

    #[error("unknown builtin field '{0}'")]
    UnknownBuiltin(String),

    #[error("bad parameters: {0}")]
    BadParams(String),

    #[error("matrix K is not skew-symmetric")]
    NotSkew,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("runs are not on the same grid: {0}")]
    GridMismatch(String),

    #[error("step {step}: {source}")]
    AtStep { step: usize, source: Box<Error> },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit code used by the command line driver.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::StepTooLarge { .. } => 3,
            Error::AtStep { source, .. } => source.exit_code(),
            Error::Io(_) | Error::Csv(_) => 1,
            _ => 2,
        }
    }
}
