//! File formats shared by the toolkit.
//!
//! * [`ptf`]: the portable tensor file, a tiny self-describing binary
//!   container for real and complex `f32` arrays.
//! * [`kv`]: flat `key=value` text documents used for configs and
//!   parameter manifests.

pub mod kv;
pub mod ptf;

pub use kv::KvDocument;
pub use ptf::{DType, PtfTensor};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad magic bytes {0:?}, expected \"PTF1\"")]
    BadMagic([u8; 4]),
    #[error("unknown dtype tag {0}")]
    UnknownDType(u8),
    #[error("payload length {got} does not match dims {dims:?}")]
    LengthMismatch { dims: Vec<usize>, got: usize },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("missing key `{0}`")]
    MissingKey(String),
    #[error("key `{key}`: cannot parse {value:?}")]
    BadValue { key: String, value: String },
}

pub type Result<T> = std::result::Result<T, IoError>;
