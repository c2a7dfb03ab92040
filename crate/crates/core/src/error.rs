use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("block length {0} is not a power of two >= 2")]
    NotPowerOfTwo(usize),

    #[error("cannot normalize an all-zero batch")]
    ZeroPower,

    #[error("batch normalization needs at least 2 rows in training mode, got {0}")]
    BatchTooSmall(usize),

    #[error("layer mode mismatch: {0}")]
    ModeMismatch(String),

    #[error("training diverged at epoch {epoch}: {reason}")]
    Diverged {
        epoch: usize,
        reason: String,
        /// Best parameters seen before the divergence.
        last_good: Option<Box<crate::autoencoder::AeModel>>,
    },

    #[error("corrupt checkpoint: {0}")]
    CorruptCheckpoint(String),

    #[error("unsupported checkpoint version {found} (expected {expected})")]
    CheckpointVersion { found: u32, expected: u32 },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("sweep point (linewidth {linewidth_hz} Hz, OSNR {osnr_db} dB): {source}")]
    SweepPoint {
        linewidth_hz: f64,
        osnr_db: f64,
        #[source]
        source: Box<Error>,
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
