use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised by the library surface.
///
/// `Usage` covers violated preconditions at call sites, `Model` covers
/// cost ensembles that break the convexity assumptions, and the remaining
/// variants are raised while a simulation is running.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("usage error: {0}")]
    Usage(String),

    #[error("model error: {0}")]
    Model(String),

    #[error("protocol error at round {round}, agent {agent}: {reason}")]
    Protocol {
        round: usize,
        agent: usize,
        reason: String,
    },

    #[error("numeric abort at round {round}: {reason}")]
    Numeric { round: usize, reason: String },
}

impl Error {
    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    pub(crate) fn model(msg: impl Into<String>) -> Self {
        Error::Model(msg.into())
    }

    /// True for errors caused by bad inputs or configuration, as opposed to
    /// failures that happen mid-run.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::DimensionMismatch { .. } | Error::NonFinite(_) | Error::Usage(_) | Error::Model(_)
        )
    }
}
