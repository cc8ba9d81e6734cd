use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Coarse classification of failures, used by front-ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Transport,
    Data,
    Model,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("input {index} has {length} tokens, exceeding the model limit of {max_length}")]
    Truncation {
        index: usize,
        length: usize,
        max_length: usize,
    },
    #[error("transport error after {attempts} attempt(s): {message}")]
    Transport { attempts: u32, message: String },
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("model does not support capability `{0}`")]
    UnsupportedCapability(String),
    #[error("numeric error: {0}")]
    Numeric(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid instance `{id}`: {message}")]
    Validation { id: String, message: String },
    #[error("alignment error: {0}")]
    Alignment(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Config(_) | Error::UnsupportedCapability(_) | Error::InvalidInput(_) => {
                ErrorKind::Config
            }
            Error::Transport { .. } => ErrorKind::Transport,
            Error::Parse { .. }
            | Error::Validation { .. }
            | Error::Alignment(_)
            | Error::Truncation { .. }
            | Error::Io(_)
            | Error::Json(_) => ErrorKind::Data,
            Error::Protocol(_) | Error::Numeric(_) => ErrorKind::Model,
        }
    }
}
