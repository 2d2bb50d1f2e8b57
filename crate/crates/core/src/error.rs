use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid config value for `{key}`: {reason}")]
    InvalidConfig { key: &'static str, reason: String },

    #[error("failed to parse config: {0}")]
    ConfigSyntax(String),

    #[error("unknown {level} id {id}")]
    UnknownOwner { level: &'static str, id: usize },

    #[error("negative distance {0} m")]
    NegativeDistance(f64),

    #[error("negative SINR {0}")]
    NegativeSinr(f64),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("malformed channel record at line {line}: {reason}")]
    MalformedRecord { line: usize, reason: String },

    #[error("non-finite value at line {line}")]
    NonFinite { line: usize },

    #[error("matrix is not Hermitian positive definite (pivot {pivot} = {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("empty sample set")]
    EmptySamples,

    #[error("quantile level {0} outside (0, 1)")]
    QuantileOutOfRange(f64),

    #[error("option 1 outage is zero, improvement ratios are undefined")]
    UndefinedRatio,

    #[error("option {0} was not evaluated in this campaign")]
    MissingOption(u8),

    #[error("no channel files found in {0}")]
    NoChannelFiles(PathBuf),

    #[error("I/O error on {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
