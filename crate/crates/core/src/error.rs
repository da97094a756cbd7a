use std::io;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("empty sample batch")]
    EmptyBatch,

    #[error("singular design for action {action}; use a positive ridge")]
    SingularDesign { action: usize },

    #[error("policy puts mass on action {action} where the reference policy has none")]
    SupportViolation { action: usize },

    #[error("operation requires finitely many contexts")]
    ContinuousContexts,

    #[error("value {0} outside the admissible range [0, 1/4)")]
    OutOfRange(f64),

    #[error("config error at `{key}`: {message}")]
    Config { key: String, message: String },

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
        }
    }
}
