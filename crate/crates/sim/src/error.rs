use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    /// Bad configuration; maps to exit code 2.
    #[error("config error: {0}")]
    Config(String),
    /// A runtime contract was broken; maps to exit code 3.
    #[error("invariant violation: {0}")]
    Invariant(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("checkpoint error: {0}")]
    Checkpoint(#[from] neural::CheckpointError),
}

pub type SimResult<T> = Result<T, SimError>;

impl SimError {
    pub fn config(msg: impl Into<String>) -> Self {
        SimError::Config(msg.into())
    }

    pub fn invariant(msg: impl Into<String>) -> Self {
        SimError::Invariant(msg.into())
    }
}
