use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("fields live on different grids")]
    GridMismatch,

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("Newton iteration failed after {iterations} iterations (residual {residual:e})")]
    NewtonFailed { iterations: usize, residual: f64 },

    #[error("singular system: {0}")]
    Singular(String),

    #[error("modulation tracking failed at t = {t}: {reason}")]
    TrackingFailed { t: f64, reason: String },

    #[error("config `{key}`: {reason}")]
    Config { key: String, reason: String },

    #[error("nonpositive sample in decay fit at t = {t}")]
    NonPositiveSample { t: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn param(name: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.into(),
            reason: reason.into(),
        }
    }

    pub fn config(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
