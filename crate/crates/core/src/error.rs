use std::path::PathBuf;

/// Errors raised anywhere in the localization pipeline.
#[derive(thiserror::Error, Debug)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected:?}, got {actual:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        actual: (usize, usize),
    },

    /// Two windows share no common area, so no pixel pairs can be formed.
    #[error("windows have no common area")]
    EmptyWindow,

    #[error("window grid has {tiles} tile(s); at least 2 are required")]
    DegenerateGrid { tiles: usize },

    #[error("codec error: {0}")]
    Codec(String),

    #[error("cannot read {path}: {source}")]
    Unreadable {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("cannot write {path}: {message}")]
    Unwritable { path: PathBuf, message: String },

    #[error("unsupported image format: {0}")]
    UnsupportedFormat(PathBuf),

    #[error("image dimensions overflow: {0}")]
    DimensionOverflow(String),

    #[error("{kind} region provider failed: {message}")]
    Provider { kind: &'static str, message: String },

    #[error("segmentation protocol violation: {0}")]
    ProtocolViolation(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
