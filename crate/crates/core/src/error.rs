use std::path::PathBuf;

use thiserror::Error;

use crate::fingerprint::{ApId, RpId};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("observation batch references unknown RP id {0}")]
    UnknownRp(RpId),
    #[error("observation references unknown AP id {0}")]
    UnknownAp(ApId),
    #[error("no observation batches supplied")]
    EmptyInput,
    #[error("fingerprint database is empty")]
    EmptyDatabase,
    #[error("invalid environment: {0}")]
    InvalidEnvironment(String),
    #[error("invalid trajectory: {0}")]
    InvalidTrajectory(String),
    #[error("trajectory leaves the environment at t={t:.3} s ({x:.3}, {y:.3})")]
    OutOfBounds { t: f64, x: f64, y: f64 },

    #[error("kernel density fit needs at least one sample")]
    EmptySamples,
    #[error("non-finite RSSI sample at index {0}")]
    NonFiniteSample(usize),
    #[error("invalid kernel bandwidth {0} (must be > 0)")]
    InvalidBandwidth(f64),
    #[error("RP {rp} has no RSSI samples for AP {ap}")]
    NoSamplesForAp { rp: RpId, ap: ApId },

    #[error("no observable APs in the fingerprint vector")]
    NoObservableAps,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid SSP window: {0}")]
    InvalidWindow(String),

    #[error("insufficient CSI: {have} scans, {need} required")]
    InsufficientCsi { have: usize, need: usize },
    #[error("zero variance input to Pearson correlation")]
    ZeroVariance,
    #[error("no CSI available on the selected APs; fall back to the RSSI estimate")]
    CsiFallback,
    #[error("invalid CSI scan: {0}")]
    InvalidCsi(String),

    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("training diverged at epoch {epoch} (loss is NaN); try a learning rate below {learning_rate}")]
    NonFiniteLoss { epoch: usize, learning_rate: f64 },
    #[error("gradient check failed: {param} relative error {rel_err:.3e} exceeds {threshold:.1e}")]
    GradCheckFailed {
        param: String,
        rel_err: f64,
        threshold: f64,
    },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("frame at t={t} s arrived after t={last} s on the same track")]
    OutOfOrder { t: f64, last: f64 },
    #[error("frame from {got} delivered to the track of {expected}")]
    MacMismatch { expected: String, got: String },

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },
    #[error("i/o error on {path}: {source}")]
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

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            msg: msg.into(),
        }
    }
}
