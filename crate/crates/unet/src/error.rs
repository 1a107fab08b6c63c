use csmri_io::IoError;
use csmri_nn::NnError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum UnetError {
    #[error("invalid network spec: {0}")]
    Spec(String),
    #[error("input shape {got:?} does not match the network ({expected})")]
    Input { expected: String, got: [usize; 4] },
    #[error("training set is empty")]
    EmptyDataset,
    #[error("training data: {0}")]
    Data(String),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Io(#[from] IoError),
}

pub type Result<T> = std::result::Result<T, UnetError>;
