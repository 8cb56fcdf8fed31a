use thiserror::Error;

pub type Result<T, E = IrdError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum IrdError {
    /// Box, instance or dataset disagree on the number of features.
    #[error("dimension mismatch: expected {expected} features, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    /// A value or bound outside its feature domain, or an operation that would
    /// empty a dimension.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("predictor error: {0}")]
    Predictor(String),

    /// Failure talking to an external predictor process.
    #[error("predictor transport error: {0}")]
    Transport(String),

    #[error("parse error at row {row}, column `{column}`: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl IrdError {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        IrdError::Domain(msg.into())
    }

    pub(crate) fn precondition(msg: impl Into<String>) -> Self {
        IrdError::Precondition(msg.into())
    }
}
