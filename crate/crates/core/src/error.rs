use thiserror::Error;

pub type Result<T> = std::result::Result<T, HeomError>;

#[derive(Debug, Error)]
pub enum HeomError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("hierarchy needs {requested} slots, above the cap of {cap}")]
    Capacity { requested: u128, cap: usize },

    #[error("correlation expansion did not converge within {cap} terms (last relative change {last_change:.3e})")]
    Truncation { cap: usize, last_change: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("step size underflow at t = {time_au:.6} a.u. (h = {step:.3e})")]
    StepUnderflow { time_au: f64, step: f64 },

    #[error("non-finite auxiliary density operator at t = {time_au:.6} a.u.")]
    NonFinite { time_au: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

/// Broad failure classes, used for process exit codes and C status codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Numerical,
    Capacity,
    Io,
}

impl HeomError {
    pub fn class(&self) -> ErrorClass {
        match self {
            HeomError::Config(_) | HeomError::InvalidInput(_) => ErrorClass::Config,
            HeomError::Capacity { .. } | HeomError::Truncation { .. } => ErrorClass::Capacity,
            HeomError::Io(_) => ErrorClass::Io,
            HeomError::DimensionMismatch(_)
            | HeomError::StepUnderflow { .. }
            | HeomError::NonFinite { .. }
            | HeomError::Unsupported(_)
            | HeomError::InvalidState(_) => ErrorClass::Numerical,
        }
    }
}
