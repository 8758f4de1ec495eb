use std::io;
use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected} values, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("spin value {value} at index {index} is not +1 or -1")]
    InvalidSpin { index: usize, value: i64 },

    #[error("prefix sums are stale; rebuild them after flipping spins")]
    StalePrefix,

    #[error("passage ball at t = {t} touches the grid boundary; enlarge the grid")]
    BoundaryContact { t: f64 },

    #[error("state invariant broken: {0}")]
    Invariant(String),

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("compute budget exceeded: {0}")]
    Budget(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
