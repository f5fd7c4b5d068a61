use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty dataset")]
    EmptyDataset,

    #[error("input keys are not sorted (position {position})")]
    Unsorted { position: usize },

    #[error("duplicate key {key} at position {position}")]
    DuplicateKey { key: u64, position: usize },

    #[error("key {key} does not fit in {bits} bits")]
    KeyTooWide { key: u64, bits: u32 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("segment index {index} out of range for spline of {len} points")]
    SegmentOutOfRange { index: usize, len: usize },

    #[error("offset overflow: {0} entries do not fit in 31-bit offsets")]
    OffsetOverflow(usize),

    #[error("out-of-order key {key} after {previous}")]
    OutOfOrder { key: u64, previous: u64 },

    #[error("not a PLEX file")]
    BadMagic,

    #[error("unsupported format version {0}")]
    UnsupportedVersion(u32),

    #[error("truncated input: needed {needed} more bytes at offset {offset}")]
    Truncated { offset: usize, needed: usize },

    #[error("corrupt index: {0}")]
    Corrupt(String),

    #[error("dataset size mismatch: header says {expected} keys, file holds {actual}")]
    SizeMismatch { expected: u64, actual: u64 },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
