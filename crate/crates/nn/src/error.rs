use thiserror::Error;

use crate::Shape;

#[derive(Debug, Error)]
pub enum NnError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("expected {expected} input channels, got {got}")]
    Channels { expected: usize, got: usize },
    #[error("spatial size {h}x{w} must be even for 2x2 pooling")]
    OddSpatial { h: usize, w: usize },
    #[error("pool switches for {switches:?} do not fit input {input:?}")]
    Switches { switches: Shape, input: Shape },
    #[error("batch norm needs at least 2 values per channel in train mode, got {0}")]
    BatchTooSmall(usize),
    #[error("unsupported kernel {0}x{1}")]
    Kernel(usize, usize),
    #[error("parameter file: {0}")]
    Persist(String),
    #[error(transparent)]
    Io(#[from] csmri_io::IoError),
}

pub type Result<T> = std::result::Result<T, NnError>;
