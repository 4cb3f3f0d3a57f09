use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or inconsistent input (bad indices, shapes, probabilities).
    #[error("input error: {0}")]
    Input(String),

    /// A constraint specification that cannot be applied to the given system.
    #[error("infeasible: {0}")]
    Infeasible(String),

    /// The request exceeds a hard size limit.
    #[error("capacity exceeded: {0}")]
    Capacity(String),

    /// Violated internal invariant; indicates a bug rather than bad input.
    #[error("internal error: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub(crate) fn internal(msg: impl Into<String>) -> Self {
        Error::Internal(msg.into())
    }
}
