use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the discovery pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("degenerate variable `{name}`: column has zero variance")]
    DegenerateVariable { name: String },

    #[error("invalid panel: {0}")]
    InvalidPanel(String),

    #[error("parse error at row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: usize,
        message: String,
    },

    #[error("insufficient samples: need more than k={k} samples, got {m}")]
    InsufficientSamples { k: usize, m: usize },

    #[error("zero nearest-neighbor distance at sample {index}: duplicate points with no jitter")]
    ZeroDistance { index: usize },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("horizon {horizon} too small for tau_max {tau_max}")]
    WindowTooSmall { horizon: usize, tau_max: usize },

    #[error("unknown node (var {var}, time {time})")]
    UnknownNode { var: usize, time: usize },

    #[error("temporal order violated: {0}")]
    TemporalOrder(String),

    #[error("discovery failed for target {target}: {source}")]
    Target {
        target: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("unstable trajectory: |x| exceeded {limit:e} at t={step} in variable {var}; spec: {spec}")]
    Unstable {
        limit: f64,
        step: usize,
        var: usize,
        spec: String,
    },

    #[error("generation failed after {attempts} attempts: {reason}")]
    GenerationFailed { attempts: usize, reason: String },

    #[error("comparison error: {0}")]
    Comparison(String),

    #[error("invalid spec: {0}")]
    InvalidSpec(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
