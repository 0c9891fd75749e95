use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("kernel mismatch: both functions must share the same bandwidths")]
    KernelMismatch,

    #[error("index {index} out of range for dictionary of size {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("reward {reward} exceeds the declared bound {bound}")]
    RewardBound { reward: f64, bound: f64 },

    #[error("negative squared norm {0} beyond numerical tolerance")]
    NegativeNorm(f64),

    #[error("config error in `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("malformed input: {0}")]
    Malformed(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}
