use ecgdk_model::{ModelError, MmdError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("data error: {0}")]
    Data(String),

    #[error("training set has no usable labeled segments")]
    EmptyTrainSet,

    #[error("training set contains only class {0}; the task loss is degenerate")]
    SingleClass(String),

    #[error(transparent)]
    Model(#[from] ModelError),

    #[error(transparent)]
    Mmd(#[from] MmdError),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, TrainError>;
