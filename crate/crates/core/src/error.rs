use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("key {0} is not in the tree")]
    NotFound(u32),
    #[error("key {0} is already in the tree")]
    DuplicateKey(u32),
    #[error("key {key} is outside the universe 1..={n}")]
    KeyOutOfRange { key: u32, n: u32 },
    #[error("invalid priority for key {key}: {reason}")]
    InvalidPriority { key: u32, reason: String },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
