use thiserror::Error;

/// Errors produced by the reconstruction pipeline and its data loaders.
#[derive(Debug, Error)]
pub enum EdgError {
    /// A caller-supplied argument is out of range or inconsistent with the inputs.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// Input data violates a precondition (non-finite entries, empty structure, ...).
    #[error("invalid input: {0}")]
    Input(String),

    /// Malformed text input.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    /// Failure while serializing results.
    #[error("serialization failed: {0}")]
    Serialize(String),
}

impl EdgError {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        EdgError::Argument(msg.into())
    }

    pub(crate) fn input(msg: impl Into<String>) -> Self {
        EdgError::Input(msg.into())
    }
}

impl From<csv::Error> for EdgError {
    fn from(e: csv::Error) -> Self {
        EdgError::Serialize(e.to_string())
    }
}

impl From<serde_json::Error> for EdgError {
    fn from(e: serde_json::Error) -> Self {
        EdgError::Serialize(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, EdgError>;
