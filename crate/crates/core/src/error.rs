//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter or specification violates its documented invariants.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A mathematical function was evaluated outside its domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// The data are degenerate for the requested operation
    /// (singular periodogram, collapsed objective, ...).
    #[error("degenerate: {0}")]
    Degenerate(String),

    /// A matrix that must be inverted is (numerically) singular.
    #[error("singular matrix: {0}")]
    Singular(String),

    /// The optimizer could not produce an estimate.
    #[error("estimation failed: {0}")]
    EstimationFailed(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// Malformed CSV input; `line` is 1-based.
    #[error("csv error at line {line}: {message}")]
    Csv { line: usize, message: String },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
