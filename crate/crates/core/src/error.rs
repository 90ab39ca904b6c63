use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("format error in {path}: {msg}")]
    Format { path: PathBuf, msg: String },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("zero surviving pairs: {0}")]
    NoSurvivingPairs(String),

    #[error("eigensolver failed: {0}")]
    Eigen(String),

    #[error("single-class training set")]
    SingleClass,

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Stable machine-readable code, used as the prefix of CLI error lines.
    pub fn code(&self) -> &'static str {
        match self {
            Error::DimensionMismatch(_) => "E_DIMENSION",
            Error::NonFinite(_) => "E_NONFINITE",
            Error::InvalidConfig(_) => "E_CONFIG",
            Error::InvalidInput(_) => "E_INPUT",
            Error::Format { .. } => "E_FORMAT",
            Error::Empty(_) => "E_EMPTY",
            Error::NoSurvivingPairs(_) => "E_NO_PAIRS",
            Error::Eigen(_) => "E_EIGEN",
            Error::SingleClass => "E_SINGLE_CLASS",
            Error::Io { .. } => "E_IO",
        }
    }

    pub fn format(path: impl Into<PathBuf>, msg: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            msg: msg.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
