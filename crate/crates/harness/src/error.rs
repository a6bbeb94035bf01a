use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Core(#[from] crashbo::Error),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error("unknown problems {0:?}")]
    UnknownProblems(Vec<String>),

    #[error("unknown optimizers {0:?}")]
    UnknownOptimizers(Vec<String>),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("no results in {0}")]
    EmptyResults(PathBuf),

    #[error("{path} line {line}: {message}")]
    MalformedTrace { path: PathBuf, line: usize, message: String },
}

pub(crate) fn io_error(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> HarnessError {
    let path = path.into();
    move |source| HarnessError::Io { path, source }
}

pub(crate) fn json_error(path: impl Into<PathBuf>) -> impl FnOnce(serde_json::Error) -> HarnessError {
    let path = path.into();
    move |source| HarnessError::Json { path, source }
}
