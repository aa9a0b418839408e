use std::fmt;

/// Errors raised by the solvers, loaders and command implementations.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid operation: {0}")]
    InvalidOperation(String),

    #[error("tour structure: {0}")]
    Structure(String),

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("size guard exceeded: {0}")]
    SizeGuard(String),

    #[error("schema violation at `{field}`: {message}")]
    Schema { field: String, message: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn schema(field: impl Into<String>, message: impl fmt::Display) -> Self {
        Error::Schema {
            field: field.into(),
            message: message.to_string(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
