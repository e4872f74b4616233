use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ThetaError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("parameter error: {0}")]
    Parameter(String),
    #[error("decomposition error: {0}")]
    Decomposition(String),
    #[error("refused: {0}")]
    Refused(String),
    #[error("bracket error: {0}")]
    Bracket(String),
    #[error("search space too large: {0}")]
    SearchSpace(String),
    #[error("internal consistency error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, ThetaError>;

pub(crate) fn param<T>(msg: impl Into<String>) -> Result<T> {
    Err(ThetaError::Parameter(msg.into()))
}

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(ThetaError::Domain(msg.into()))
}
