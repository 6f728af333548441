use thiserror::Error;

/// Errors produced by the clustering library.
#[derive(Debug, Error)]
pub enum OscError {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("solver diverged at iteration {iteration}: {detail}")]
    Divergence { iteration: usize, detail: String },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, OscError>;

pub(crate) fn dim_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(OscError::InvalidDimension(msg.into()))
}

pub(crate) fn param_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(OscError::InvalidParameter(msg.into()))
}
