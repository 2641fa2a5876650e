use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Shapes, widths or parameter values that cannot work together.
    #[error("configuration error: {0}")]
    Config(String),

    /// A caller broke an operation's precondition (e.g. stepping a finished episode).
    #[error("contract violation: {0}")]
    Contract(String),

    /// NaN or infinity showed up in a loss, gradient or parameter.
    #[error("non-finite training signal: {0}")]
    NonFinite(String),

    /// Relative longitudinal speed of zero; time-to-collision does not exist.
    #[error("time-to-collision undefined: equal longitudinal speeds")]
    UndefinedTtc,

    #[error("report error: {0}")]
    Report(String),

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
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
