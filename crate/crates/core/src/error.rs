use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported dimension {0} (expected 2 or 3)")]
    UnsupportedDim(usize),

    #[error("invalid cutoff {cutoff} for dim {dim} (allowed 1..={max})")]
    InvalidCutoff { dim: usize, cutoff: usize, max: usize },

    #[error("grid of {grid} points per axis is too coarse for cutoff {cutoff} (need at least {min})")]
    GridTooCoarse { grid: usize, cutoff: usize, min: usize },

    #[error("dimension mismatch: expected {expected} values, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("fields live on different bases: (dim {a_dim}, K {a_k}) vs (dim {b_dim}, K {b_k})")]
    BasisMismatch {
        a_dim: usize,
        a_k: usize,
        b_dim: usize,
        b_k: usize,
    },

    #[error("invalid polynomial: {0}")]
    InvalidPolynomial(String),

    #[error("invalid noise specification: {0}")]
    InvalidNoise(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("config error at `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("instability at t = {time}: {quantity} = {value:e} exceeds guard {limit:e}")]
    Blowup {
        time: f64,
        quantity: &'static str,
        value: f64,
        limit: f64,
    },

    #[error("insufficient paths: {got} supplied, at least {needed} required")]
    InsufficientPaths { got: usize, needed: usize },

    #[error("trajectory has no stored states (store_states = false)")]
    MissingStates,

    #[error("malformed trajectory data: {0}")]
    Format(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
