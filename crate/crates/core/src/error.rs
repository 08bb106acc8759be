use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("degenerate skeleton in frame {frame}: scale joints coincide")]
    DegenerateSkeleton { frame: usize },

    #[error("insufficient frames: need at least {needed}, got {got}")]
    InsufficientFrames { needed: usize, got: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("infeasible k: {k} clusters requested but only {distinct} distinct points")]
    InfeasibleK { k: usize, distinct: usize },

    #[error("empty visual stream: no key frames to quantize")]
    EmptyStream,

    #[error("alignment enumeration too large: {size} alignments exceeds cap {cap}")]
    EnumerationTooLarge { size: u128, cap: u128 },

    #[error("unknown semantic pose symbol `{0}`")]
    UnknownSymbol(String),

    #[error("split error: {0}")]
    Split(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("JSON error in {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn json(path: impl Into<PathBuf>, source: serde_json::Error) -> Self {
        Error::Json {
            path: path.into(),
            source,
        }
    }
}
