//! Crate-wide error type.

use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ProbeError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("insufficient samples: need at least {needed}, got {got}")]
    InsufficientSamples { needed: usize, got: usize },
    #[error("correlation magnitude {0} exceeds 1")]
    Domain(f64),
    #[error("unknown stage '{0}'")]
    UnknownStage(String),
    #[error("unknown factor '{0}'")]
    UnknownFactor(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("no feasible pairs: {0}")]
    InfeasiblePairs(String),
    #[error("adapter validation failed: {0}")]
    AdapterValidation(String),
    #[error("training diverged at epoch {epoch}: loss is not finite")]
    TrainingDiverged { epoch: u32 },
    #[error("stylization backend '{backend}' failed on image '{image_id}': {message}")]
    StylizeBackend {
        backend: String,
        image_id: String,
        message: String,
    },
    #[error("empty evaluation set")]
    EmptyEvalSet,
    #[error("internal consistency error: {0}")]
    Internal(String),
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
    #[error("{path}: {source}")]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },
}

pub type Result<T> = std::result::Result<T, ProbeError>;

/// Attaches a path to an io::Error when bubbling it up.
pub fn io_err(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> ProbeError {
    let path = path.into();
    move |source| ProbeError::Io { path, source }
}

pub fn json_err(path: impl Into<PathBuf>) -> impl FnOnce(serde_json::Error) -> ProbeError {
    let path = path.into();
    move |source| ProbeError::Json { path, source }
}

pub fn image_err(path: impl Into<PathBuf>) -> impl FnOnce(image::ImageError) -> ProbeError {
    let path = path.into();
    move |source| ProbeError::Image { path, source }
}
