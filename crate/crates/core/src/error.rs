use thiserror::Error;

/// Errors raised by the toolkit.
///
/// Configuration errors carry the name of the offending field so front ends
/// can point the user at the right knob.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid configuration `{field}`: {reason}")]
    Config { field: &'static str, reason: String },

    #[error("shape mismatch: expected {expected} entries, got {got}")]
    Shape { expected: usize, got: usize },

    #[error("grid mismatch between operands")]
    GridMismatch,

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("expansion out of regime: {0}")]
    OutOfRegime(String),

    #[error("numerical abort at t = {time}: norm drifted by {drift:e}")]
    NormDrift { time: f64, drift: f64 },
}

impl Error {
    pub(crate) fn config(field: &'static str, reason: impl Into<String>) -> Self {
        Error::Config {
            field,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
