use thiserror::Error;

/// Errors produced by the simulation and analysis routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite value in {0}")]
    NumericOverflow(&'static str),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("no negative differential resistance region found")]
    NoNdr,

    #[error("no equilibrium in the state window at v = {vm}")]
    NoEquilibrium { vm: f64 },

    #[error("load line does not intersect the DC curve")]
    NoOperatingPoint,

    #[error("trajectory diverged at t = {t:e}")]
    Diverged { t: f64 },

    #[error("no sustained oscillation: {0}")]
    NoOscillation(String),

    #[error("period estimate unstable (spread {spread:.3e} relative)")]
    PeriodUnstable { spread: f64 },

    #[error("fourier fit failed: {0}")]
    FitFailed(String),

    #[error("phase network did not settle (max drift {drift:.3e} rad/s)")]
    NotConverged { drift: f64 },

    #[error("dimension mismatch: {0}")]
    BadDimensions(String),

    #[error("bad duration or step: {0}")]
    BadDuration(String),

    #[error("config error at `{key}`: {msg}")]
    Config { key: String, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn config(key: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Config { key: key.into(), msg: msg.into() }
    }

    /// Process exit code used by the command line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } | Error::InvalidParams(_) | Error::BadDimensions(_) | Error::BadDuration(_) => 2,
            Error::NotConverged { .. } => 4,
            Error::Io(_) => 1,
            _ => 3,
        }
    }
}
