use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("room geometry cannot hold source and receiver: {0}")]
    InfeasibleGeometry(String),

    #[error("rejection sampling gave up after {0} attempts")]
    IterationCap(usize),

    #[error("sample rate {rate} Hz is too low: need at least {required} Hz")]
    SampleRateTooLow { rate: f64, required: f64 },

    #[error("expected sample rate {expected} Hz, got {actual} Hz")]
    WrongSampleRate { expected: f64, actual: f64 },

    #[error("energy decay curve is undefined for an all-zero signal")]
    UndefinedCurve,

    #[error("decay never reaches {0} dB")]
    InsufficientDecay(f64),

    #[error("signal has zero power")]
    ZeroSignal,

    #[error("Eyring formula undefined for Sabine value {0} >= 1")]
    EyringDomain(f64),

    #[error("no curves passed screening")]
    EmptyScreening,

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("empty dataset")]
    EmptyDataset,

    #[error("training diverged at epoch {0}: non-finite loss")]
    Divergence(usize),

    #[error("corrupt file {path} at byte offset {offset}: {reason}")]
    Corrupt {
        path: PathBuf,
        offset: u64,
        reason: String,
    },

    #[error("misaligned inputs: {0}")]
    Misaligned(String),

    #[error("no model file for method {0}")]
    MissingModel(String),

    // The cause is part of the message, not a chained source, so reports
    // do not print it twice.
    #[error("{path}: {cause}")]
    Io { path: PathBuf, cause: std::io::Error },

    #[error("{0}")]
    Format(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            cause: source,
        }
    }
}

impl From<hound::Error> for Error {
    fn from(e: hound::Error) -> Self {
        Error::Format(format!("wav: {e}"))
    }
}
