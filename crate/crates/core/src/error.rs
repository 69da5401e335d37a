use thiserror::Error;

/// Errors surfaced by simulator components.
#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum SimError {
    /// An operation received an argument outside its domain.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A configuration failed validation before a run started.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

impl SimError {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        SimError::InvalidArgument(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        SimError::InvalidConfig(msg.into())
    }
}
