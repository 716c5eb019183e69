use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// Two fields that must live on the same grid do not.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// An argument is outside its documented range.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A mathematical precondition (domain restriction) is violated.
    #[error("domain error: {0}")]
    Domain(String),

    /// The Newton solve left the decomposition basin.
    #[error("decomposition basin error: {0}")]
    Basin(String),

    /// Non-finite samples or an otherwise unrecoverable numerical state.
    /// Carries the last good prefix of the run when one exists.
    #[error("numerical failure: {reason}")]
    Numerical {
        reason: String,
        last_good: Option<Box<crate::evolution::Evolution>>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
