use csmri_homology::HomologyError;
use csmri_io::IoError;
use csmri_kspace::KspaceError;
use csmri_nn::NnError;
use csmri_unet::UnetError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{0}")]
    Invalid(String),
    #[error("reference image has zero norm")]
    ZeroReference,
    #[error(transparent)]
    Kspace(#[from] KspaceError),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Unet(#[from] UnetError),
    #[error(transparent)]
    Homology(#[from] HomologyError),
    #[error(transparent)]
    Io(#[from] IoError),
    #[error("i/o error: {0}")]
    File(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, PipelineError>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(PipelineError::Invalid(msg.into()))
}
