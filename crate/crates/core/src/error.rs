use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("cannot decode image {path}: {source}")]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },

    #[error("unsupported MRC mode {0} (supported: 0, 1, 2, 6)")]
    UnsupportedMrcMode(i32),

    #[error("invalid MRC file: {0}")]
    InvalidMrc(String),

    #[error("unsupported file format: {0}")]
    UnsupportedFormat(String),

    #[error("invalid dimensions {height}x{width}: {reason}")]
    InvalidDimensions {
        height: usize,
        width: usize,
        reason: &'static str,
    },

    #[error("non-finite pixel value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("shape mismatch: expected {expected:?}, found {found:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("region {region} owns {blocks} blocks; at least 2 are needed to estimate statistics")]
    DegenerateRegion { region: u8, blocks: usize },

    #[error("level set became non-finite at step {step}; reduce dt")]
    Diverged { step: usize },

    #[error("report serialization failed: {0}")]
    Report(String),
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
