//! Error type shared by all modules.

/// Coarse classification used by the CLI to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    /// Filesystem / OS-level failure.
    Io,
    /// Input that violates a documented precondition or format.
    Validation,
    /// Numerical failure: non-convergence, underflow, invariant breach.
    Numeric,
}

impl ErrorCategory {
    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCategory::Io => "io",
            ErrorCategory::Validation => "validation",
            ErrorCategory::Numeric => "numeric",
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{0}")]
    Io(#[from] std::io::Error),

    /// A data row that could not be parsed; carries the 1-based line number.
    #[error("line {line}: {msg}")]
    MalformedRow { line: usize, msg: String },

    #[error("{0}")]
    Invalid(String),

    #[error("{0}")]
    Numeric(String),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    pub fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }

    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::Io(_) => ErrorCategory::Io,
            Error::MalformedRow { .. } | Error::Invalid(_) => ErrorCategory::Validation,
            Error::Numeric(_) => ErrorCategory::Numeric,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
