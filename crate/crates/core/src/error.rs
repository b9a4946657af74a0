use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A value violates a domain invariant. `field` names the offending field.
    #[error("invalid {field}: {reason}")]
    Validation { field: String, reason: String },

    #[error("configuration error: {0}")]
    Config(String),

    /// A linear inverse produced parameters outside the physically meaningful domain.
    #[error("out of domain: {0}")]
    OutOfDomain(String),

    #[error("parse error in {source_name}: {message}")]
    Parse { source_name: String, message: String },

    #[error("stream error: {0}")]
    Stream(String),

    #[error("timed out after {steps} steps")]
    Timeout { steps: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn validation(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// Process exit code for this error: 2 for bad input, 3 for runtime failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Validation { .. }
            | Error::Config(_)
            | Error::OutOfDomain(_)
            | Error::Parse { .. }
            | Error::Stream(_) => 2,
            Error::Timeout { .. } | Error::Io(_) => 3,
        }
    }
}
