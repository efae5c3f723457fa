use thiserror::Error;

/// Errors raised by the numerical core and the experiment runner.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum DeoError {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("vector must have at least one entry")]
    EmptyVector,

    #[error("cannot normalize a zero vector (norm {norm:e})")]
    ZeroVector { norm: f64 },

    #[error("non-finite value in {what}")]
    NumericFailure { what: String },

    #[error("dimension {dim} exceeds the dense-oracle limit of {max}")]
    TooLarge { dim: usize, max: usize },

    #[error("eigensolver did not converge after {sweeps} sweeps")]
    NoConvergence { sweeps: usize },

    #[error("invalid value for `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl DeoError {
    pub(crate) fn numeric(what: impl Into<String>) -> Self {
        DeoError::NumericFailure { what: what.into() }
    }

    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        DeoError::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    /// Process exit code used by the command-line runner.
    pub fn exit_code(&self) -> i32 {
        match self {
            DeoError::Config { .. } => 2,
            DeoError::NumericFailure { .. } => 3,
            _ => 1,
        }
    }
}

impl From<std::io::Error> for DeoError {
    fn from(e: std::io::Error) -> Self {
        DeoError::Io(e.to_string())
    }
}

impl From<csv::Error> for DeoError {
    fn from(e: csv::Error) -> Self {
        DeoError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, DeoError>;
