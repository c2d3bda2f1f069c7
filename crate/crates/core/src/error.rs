use thiserror::Error;

/// Errors raised by the library. The CLI maps each variant onto an exit code.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Malformed input or a violated precondition.
    #[error("validation error: {0}")]
    Validation(String),
    /// Several validation problems collected in one pass.
    #[error("{} validation errors:\n  {}", .0.len(), .0.join("\n  "))]
    ValidationList(Vec<String>),
    /// Non-finite fields, empty valid band or a singular local system.
    #[error("numerical failure: {0}")]
    Numerical(String),
    /// A task consumed a different number of forward runs than budgeted.
    #[error("run budget violated: expected {expected} forward runs, used {used}")]
    Budget { expected: usize, used: usize },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub(crate) fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
