use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed WAV file {path}: {reason}")]
    WavFormat { path: PathBuf, reason: String },

    #[error("unsupported audio encoding in {path}: {reason}")]
    UnsupportedFormat { path: PathBuf, reason: String },

    #[error("waveform is empty")]
    EmptyWaveform,

    #[error("sample rates differ: {0} Hz vs {1} Hz")]
    SampleRateMismatch(u32, u32),

    #[error("length mismatch: {0} vs {1} samples")]
    LengthMismatch(usize, usize),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("unsupported STFT configuration: {0}")]
    UnsupportedConfig(String),

    #[error("phase field of {frames}x{bins} is too small for a 3x3 kernel")]
    FieldTooSmall { frames: usize, bins: usize },

    #[error("metric is undefined: {0}")]
    UndefinedMetric(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
