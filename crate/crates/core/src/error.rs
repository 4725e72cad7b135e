use thiserror::Error;

/// Errors shared across the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("EmptyFront: operation requires a non-empty Pareto front")]
    EmptyFront,

    #[error("BadScenarioCount: scenario count must be at least 1")]
    BadScenarioCount,

    #[error("BadAlpha: CVaR confidence level must lie in [0, 1), got {0}")]
    BadAlpha(f64),

    #[error("ParseError at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("DimensionMismatch: {0}")]
    DimensionMismatch(String),

    #[error("BadReferencePoint: {0}")]
    BadReferencePoint(String),

    #[error("BackendError: {0}")]
    Backend(String),

    #[error("NumericalFailure: {0}")]
    NumericalFailure(String),

    #[error("EndpointsTimeout: time limit expired before both frontier endpoints were found")]
    EndpointsTimeout,

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            msg: msg.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
