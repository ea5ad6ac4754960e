use thiserror::Error;

/// Failure modes shared by every module of the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain where the operation is defined.
    #[error("domain error: {0}")]
    Domain(String),
    /// The input is well-formed but carries no usable information
    /// (all-zero density, point mass on both axes, ...).
    #[error("degenerate input: {0}")]
    Degenerate(String),
    /// A constructed object violates one of its invariants.
    #[error("validation failed: {0}")]
    Validation(String),
    /// The caller did not establish a documented precondition.
    #[error("precondition violated: {0}")]
    Precondition(String),
    /// The operation does not apply to this kind of instance.
    #[error("not applicable: {0}")]
    NotApplicable(String),
    /// Two routes that must agree numerically did not.
    #[error("numerical consistency failure: {0}")]
    Consistency(String),
    /// Malformed serialized input.
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
