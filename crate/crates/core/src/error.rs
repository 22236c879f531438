use thiserror::Error;

/// Errors raised by the aim-core library.
#[derive(Debug, Error)]
pub enum AimError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("{context}: expected dimension {expected}, found {found}")]
    Dimension {
        context: String,
        expected: usize,
        found: usize,
    },

    #[error("{0}")]
    Validation(String),

    #[error("non-finite value in {0}")]
    Numeric(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl AimError {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        AimError::Validation(msg.into())
    }

    pub(crate) fn dimension(context: impl Into<String>, expected: usize, found: usize) -> Self {
        AimError::Dimension {
            context: context.into(),
            expected,
            found,
        }
    }
}

pub type Result<T> = std::result::Result<T, AimError>;
