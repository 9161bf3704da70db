use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the segmentation engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("failed to decode {path}: {reason}")]
    Decode { path: PathBuf, reason: String },

    #[error("{path} has {channels} channel(s); only 8-bit grayscale scans are accepted")]
    Channel { path: PathBuf, channels: u8 },

    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("{path}:{line}: {reason}")]
    Parse {
        path: PathBuf,
        line: u64,
        reason: String,
    },

    #[error("nodes ({0}, {1}) and ({2}, {3}) are not 8-neighbors")]
    Topology(usize, usize, usize, usize),

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("degenerate selection: both points lie in column {0}")]
    DegenerateSelection(usize),

    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    #[error("label ({col}, {row}) lies outside the {rows}x{cols} scan")]
    LabelOutOfBounds {
        col: usize,
        row: usize,
        rows: usize,
        cols: usize,
    },

    #[error("layer mismatch: boundary is {boundary}, labels are {labels}")]
    LayerMismatch { boundary: String, labels: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("image encoding failed: {0}")]
    Encode(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
