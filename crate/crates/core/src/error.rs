use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the tagger library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: unknown label {label:?} (no alias maps it to a known class)")]
    UnknownLabel { line: usize, label: String },

    #[error("line {line}: expected {expected} vector components, found {found}")]
    Dimension {
        line: usize,
        expected: usize,
        found: usize,
    },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("phrase {index} has no gold labels")]
    Unlabeled { index: usize },

    #[error("phrase {index}: {gold} gold labels but {predicted} predictions")]
    Alignment {
        index: usize,
        gold: usize,
        predicted: usize,
    },

    #[error("missing dataset: {0}")]
    MissingDataset(String),

    #[error("checkpoint: {0}")]
    Checkpoint(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
