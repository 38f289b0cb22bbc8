use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Why a checkpoint file was rejected.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum CheckpointError {
    #[error("bad magic bytes: expected {expected:?}, found {found:?}")]
    BadMagic { expected: String, found: String },
    #[error("unsupported format version {found} (supported: {supported})")]
    BadVersion { found: u16, supported: u16 },
    #[error("CRC-32 mismatch: stored {stored:#010x}, computed {computed:#010x}")]
    CrcMismatch { stored: u32, computed: u32 },
    #[error("file truncated or malformed: {0}")]
    Malformed(String),
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {op}: {lhs:?} vs {rhs:?}")]
    Dimension {
        op: &'static str,
        lhs: (usize, usize),
        rhs: (usize, usize),
    },
    #[error("index {index} out of range (limit {limit}) in {what}")]
    Index {
        what: &'static str,
        index: usize,
        limit: usize,
    },
    #[error("capacity exceeded: {0}")]
    Capacity(String),
    #[error("contract violated: {0}")]
    Contract(String),
    #[error("schema error: {0}")]
    Schema(String),
    #[error("invalid specification: {0}")]
    Spec(String),
    #[error("undefined distance: {0}")]
    UndefinedDistance(String),
    #[error("undefined correlation: {0}")]
    UndefinedCorrelation(String),
    #[error("verbalizer first-token collision between labels {0:?}; supply manual token overrides")]
    VerbalizerCollision(Vec<String>),
    #[error("non-finite loss at epoch {epoch}, batch {batch} (learning rate {learning_rate})")]
    NonFiniteLoss {
        epoch: usize,
        batch: usize,
        learning_rate: f32,
    },
    #[error("checkpoint {path}: {source}")]
    Checkpoint {
        path: PathBuf,
        #[source]
        source: CheckpointError,
    },
    #[error("configuration error: {0}")]
    Config(String),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// An I/O failure on `path`.
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the command-line runner.
    ///
    /// 2 = input/config error, 3 = runtime numeric failure,
    /// 4 = capacity or precondition error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Schema(_)
            | Error::Spec(_)
            | Error::Checkpoint { .. }
            | Error::Config(_)
            | Error::Io { .. }
            | Error::Json(_) => 2,
            Error::NonFiniteLoss { .. } => 3,
            Error::Dimension { .. }
            | Error::Index { .. }
            | Error::Capacity(_)
            | Error::Contract(_)
            | Error::UndefinedDistance(_)
            | Error::UndefinedCorrelation(_)
            | Error::VerbalizerCollision(_) => 4,
        }
    }
}
