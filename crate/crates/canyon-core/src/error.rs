//! Crate-wide error type.

use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by grid I/O, validation and the analysis operations.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid container {path}: {reason}")]
    InvalidContainer { path: PathBuf, reason: String },

    #[error("payload length mismatch: expected {expected} bytes, found {actual}")]
    PayloadLength { expected: usize, actual: usize },

    #[error("non-finite value in field `{field}` at index {index}")]
    NonFinite { field: &'static str, index: usize },

    #[error("invalid band configuration: {0}")]
    InvalidBand(String),

    #[error("invalid angle grid: {0}")]
    InvalidAngles(String),

    #[error("shape mismatch: expected {expected}, found {actual}")]
    ShapeMismatch { expected: String, actual: String },

    #[error("noise estimation failed: {0}")]
    NoiseEstimation(String),

    #[error("invalid scene: {0}")]
    InvalidScene(String),

    #[error("invalid model parameters: {0}")]
    InvalidParams(String),

    #[error("clustering failed: {0}")]
    Clustering(String),

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("stage `{stage}` failed for `{grid}`: {source}")]
    Stage {
        stage: &'static str,
        grid: String,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn container(path: impl Into<PathBuf>, reason: impl Into<String>) -> Self {
        Error::InvalidContainer { path: path.into(), reason: reason.into() }
    }

    pub(crate) fn stage(stage: &'static str, grid: impl Into<String>, source: Error) -> Self {
        Error::Stage { stage, grid: grid.into(), source: Box::new(source) }
    }
}
