use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A formula left its mathematical domain (negative radicand, singular
    /// covariance). Carries a description of the offending inputs.
    #[error("numerical domain error: {0}")]
    NumericalDomain(String),

    #[error("well {well}: {source}")]
    Well {
        well: usize,
        #[source]
        source: Box<Error>,
    },

    /// Every particle weight vanished after normalization.
    #[error("degenerate filter at step {t}: {reason}")]
    DegenerateFilter { t: usize, reason: String },

    #[error("{}:{line}: {msg}", path.display())]
    Parse { path: PathBuf, line: u64, msg: String },

    #[error("inconsistent data at step {t}: {msg}")]
    Consistency { t: usize, msg: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn for_well(self, well: usize) -> Self {
        Error::Well { well, source: Box::new(self) }
    }
}
