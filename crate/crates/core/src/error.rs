use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },

    #[error("empty input: {0}")]
    Empty(String),

    #[error("format error in {path} at row {row}: {msg}")]
    Format { path: PathBuf, row: usize, msg: String },

    #[error("manifest error: {0}")]
    Manifest(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("invalid specification: {0}")]
    Spec(String),

    #[error("split error: {0}")]
    Split(String),

    #[error("pipeline error at stage {stage} ({name}): {msg}")]
    Pipeline {
        stage: usize,
        name: String,
        msg: String,
    },

    #[error("evaluation error for query `{query}`: {msg}")]
    Evaluation { query: String, msg: String },

    #[error("while encoding `{id}`: {source}")]
    Encode {
        id: String,
        #[source]
        source: Box<Error>,
    },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("image decode error on {path}: {msg}")]
    Image { path: PathBuf, msg: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub(crate) fn check_len(expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::Dimension { expected, actual })
    }
}
