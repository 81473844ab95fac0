use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// `row` is 1-based and counts every line of the input, header included.
    #[error("parse error at row {row}: {msg}")]
    Parse { row: usize, msg: String },

    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("truncated frame: need {needed} bytes, got {got}")]
    Truncated { needed: usize, got: usize },

    #[error("corrupt frame: {0}")]
    Corrupt(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn parse(row: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            row,
            msg: msg.into(),
        }
    }
}
