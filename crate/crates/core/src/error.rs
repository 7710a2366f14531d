use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("numeric check failed: {0}")]
    Numeric(String),
    #[error("invalid audio: {0}")]
    Audio(String),
    #[error("{path}: {message}")]
    Wav { path: PathBuf, message: String },
    #[error("manifest {path}, row {row}: {message}")]
    Manifest { path: PathBuf, row: usize, message: String },
    #[error("bad tag string: {0}")]
    Tags(String),
    #[error("config: {0}")]
    Config(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("dataset: {0}")]
    Dataset(String),
    #[error("usage: {0}")]
    Usage(String),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io { context: context.into(), source }
    }

    /// Process exit code used by the command-line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) | Error::Config(_) => 1,
            Error::Shape(_) | Error::NonFinite(_) | Error::Numeric(_) => 3,
            _ => 2,
        }
    }
}
