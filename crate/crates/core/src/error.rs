use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("Pauli blocking: {n} cobosons cannot occupy {d} modes")]
    PauliBlocked { n: usize, d: usize },

    #[error("undefined ratio: chi_{n} is zero")]
    UndefinedRatio { n: usize },

    #[error("order {n} exceeds the computed sequence (n_max = {n_max})")]
    OutOfRange { n: usize, n_max: usize },

    #[error("internal consistency violated: {0}")]
    Consistency(String),

    #[error("resource limit: {0}")]
    Resource(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
