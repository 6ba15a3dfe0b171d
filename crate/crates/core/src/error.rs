//! Error type shared across the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised by model construction, graph construction, and the
/// numerical recursions.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid argument or malformed input data.
    #[error("validation: {0}")]
    Validation(String),

    /// Matrix or vector dimensions do not line up.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// A matrix required to be (semi)definite is not, or a factorization
    /// failed beyond the jitter retry.
    #[error("numerical: {0}")]
    Numerical(String),

    /// A graph violated a structural requirement (connectivity, index
    /// range, self-edges).
    #[error("graph: {0}")]
    Graph(String),
}

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub(crate) fn dimension(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }

    pub(crate) fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }

    pub(crate) fn graph(msg: impl Into<String>) -> Self {
        Error::Graph(msg.into())
    }
}
