use std::path::PathBuf;

use crate::agent::UpdateDiagnostics;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A caller broke an operation's precondition (out-of-range voltage,
    /// stepping a finished episode, wrong input width).
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("non-finite plant state (theta={theta}, theta_dot={theta_dot})")]
    NonFiniteState { theta: f64, theta_dot: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("non-finite PPO loss, update aborted ({0:?})")]
    NonFiniteLoss(UpdateDiagnostics),

    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
