use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    /// Malformed or truncated file content (bad magic, unsupported maxval, ...).
    #[error("format error: {0}")]
    Format(String),

    /// A precondition on an operation's inputs was violated.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Two feature vectors or a model/feature pair disagree on schema.
    #[error("schema mismatch: expected `{expected}`, got `{got}`")]
    SchemaMismatch { expected: String, got: String },

    /// Numerical failure: singular system, NaN loss, ...
    #[error("numeric error: {0}")]
    Numeric(String),
}

impl Error {
    pub fn format(msg: impl Into<String>) -> Self {
        Error::Format(msg.into())
    }

    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }
}
