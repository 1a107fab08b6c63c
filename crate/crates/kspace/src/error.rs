use thiserror::Error;

#[derive(Debug, Error)]
pub enum KspaceError {
    #[error("image size {rows}x{cols} invalid: both sides must be powers of two and at least 8")]
    BadSize { rows: usize, cols: usize },
    #[error("buffer of length {len} cannot hold {rows}x{cols}")]
    BufferLength { rows: usize, cols: usize, len: usize },
    #[error("non-finite value at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("shape mismatch: {0:?} vs {1:?}")]
    ShapeMismatch((usize, usize), (usize, usize)),
    #[error("invalid mask parameters: {0}")]
    BadMask(String),
    #[error("transform id {0} out of range 0..32")]
    BadTransform(usize),
    #[error("invalid phantom parameters: {0}")]
    BadPhantom(String),
    #[error(transparent)]
    Io(#[from] csmri_io::IoError),
}

pub type Result<T> = std::result::Result<T, KspaceError>;
