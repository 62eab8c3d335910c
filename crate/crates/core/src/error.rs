use std::path::PathBuf;
use thiserror::Error;

/// Errors surfaced by record I/O, preprocessing, and feature extraction.
#[derive(Debug, Error)]
pub enum CoreError {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{file}:{line}: malformed {field}: {message}")]
    Parse {
        file: String,
        line: usize,
        field: String,
        message: String,
    },

    #[error("no records in {0}")]
    NoRecords(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("insufficient RR intervals: need at least 2, got {0}")]
    InsufficientRr(usize),
}

pub type Result<T> = std::result::Result<T, CoreError>;
