use thiserror::Error;

/// Errors produced by the softmax kit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A caller-supplied argument violates an operation's precondition.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// A buffer could not be allocated.
    #[error("allocation failed: {0}")]
    Resource(String),

    /// A value is outside the numeric domain an operation accepts.
    #[error("numeric domain error: {message}")]
    NumericDomain {
        message: String,
        /// Row of the offending element, when the error comes from a matrix.
        row: Option<usize>,
    },
}

impl Error {
    pub(crate) fn argument(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::NumericDomain {
            message: msg.into(),
            row: None,
        }
    }

    pub(crate) fn domain_at_row(row: usize, msg: impl Into<String>) -> Self {
        Error::NumericDomain {
            message: format!("row {row}: {}", msg.into()),
            row: Some(row),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
