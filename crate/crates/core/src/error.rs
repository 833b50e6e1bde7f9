use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the summary loop library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: {message}")]
    Record { line: usize, message: String },

    #[error("duplicate document id {id:?} at line {line}")]
    DuplicateId { id: String, line: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("input of {required} tokens exceeds the {limit}-token context; truncate by {excess}")]
    ContextOverflow {
        required: usize,
        limit: usize,
        excess: usize,
    },

    #[error("length mismatch: original has {original} tokens, filled has {filled}")]
    LengthMismatch { original: usize, filled: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("degenerate calibration: lp_low = {lp_low}, lp_high = {lp_high}")]
    DegenerateCalibration { lp_low: f64, lp_high: f64 },

    #[error("backend {0} does not support training")]
    NotTrainable(String),

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error("missing artifact: {0}")]
    MissingArtifact(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
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
