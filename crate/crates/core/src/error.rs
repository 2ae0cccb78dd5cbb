use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("signal has zero power; SNR is undefined")]
    ZeroPower,

    #[error("could not produce {needed} separated distractors after {attempts} attempts")]
    DistractorExhausted { needed: usize, attempts: usize },

    #[error("label universe too small: need at least {needed} labels besides the answer, have {available}")]
    UniverseTooSmall { needed: usize, available: usize },

    #[error("{task}: SNR bin {snr_db} dB has no records")]
    EmptyBin { task: String, snr_db: f64 },

    #[error("budget: {0}")]
    Budget(String),

    #[error("config field `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("{path}:{line}: {message}")]
    Manifest {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("unknown sample id `{0}`")]
    UnknownSample(String),

    #[error("png: {0}")]
    Png(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    /// True for errors caused by bad user input or configuration rather than
    /// a runtime failure.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::InvalidInput(_)
                | Error::Unsupported(_)
                | Error::Config { .. }
                | Error::Manifest { .. }
                | Error::UnknownSample(_)
                | Error::Json(_)
        )
    }
}
