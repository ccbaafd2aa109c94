use std::io;
use std::path::PathBuf;

use thiserror::Error;

/// Broad classification of a failure, used by the command line front end
/// to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// The caller asked for something impossible (bad levels, bad params).
    Config,
    /// Inputs on disk are missing, malformed or inconsistent.
    Data,
    /// Anything else.
    Internal,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("{path}: line {line}, column {column}: {message}")]
    ManifestParse {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("{path}: {message}")]
    Manifest { path: PathBuf, message: String },

    #[error("empty range: ground truth for query {query} is [{lo}, {hi}]")]
    EmptyRange { query: usize, lo: usize, hi: usize },

    #[error("no ground truth entry for query {0}")]
    MissingGroundTruth(usize),

    #[error("compression percent {0} outside [0, 99]")]
    InvalidLevel(i64),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("image has zero width or height")]
    EmptyImage,

    #[error("image {width}x{height} exceeds the JPEG size limit of 65535")]
    ImageTooLarge { width: u32, height: u32 },

    #[error("encoder failure: {0}")]
    Encode(String),

    #[error("decode failure: {0}")]
    Decode(String),

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("non-finite value at position {0}")]
    NonFinite(usize),

    #[error("empty set")]
    EmptySet,

    #[error("not a VPRD file")]
    BadMagic,

    #[error("unsupported VPRD version {0}")]
    UnsupportedVersion(u16),

    #[error("malformed VPRD file: {0}")]
    MalformedVprd(String),

    #[error("truncated VPRD file: {0}")]
    Truncated(String),

    #[error("missing corpus: {0}")]
    MissingCorpus(PathBuf),

    #[error("no descriptor set for level {0}")]
    MissingLevel(u8),

    #[error("level sets differ: {0}")]
    LevelMismatch(String),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("worker pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::InvalidLevel(_) | Error::InvalidParams(_) => ErrorClass::Config,
            Error::Pool(_) => ErrorClass::Internal,
            Error::Encode(_) => ErrorClass::Internal,
            _ => ErrorClass::Data,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
