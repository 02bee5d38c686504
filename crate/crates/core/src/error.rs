use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{name} = {value} is outside its domain {domain}")]
    Domain { name: &'static str, value: f64, domain: &'static str },

    /// The transition series needs more terms than the configured cap allows,
    /// which happens when the time step is too small for the requested tolerance.
    #[error("transition series needs more than {cap} terms at t = {t} (tolerance {tol})")]
    SeriesOverflow { cap: usize, t: f64, tol: f64 },

    #[error("truncation level {m} exceeds cap {cap}")]
    TruncationCap { m: usize, cap: usize },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidParameter(_) => 1,
            Error::Domain { .. } => 1,
            Error::Data(_) | Error::Io(_) | Error::Json(_) | Error::Checkpoint(_) => 2,
            Error::SeriesOverflow { .. } | Error::TruncationCap { .. } | Error::Degenerate(_) | Error::Numerical(_) => {
                3
            }
        }
    }
}
