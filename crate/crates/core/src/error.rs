use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("invalid game state: {0}")]
    State(String),
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("training diverged at step {step}: {reason}")]
    Diverged { step: u64, reason: String },
    #[error("replay diverged at t = {t}: expected {expected}, got {actual}")]
    ReplayMismatch { t: u32, expected: String, actual: String },
    #[error("match {seed}: {source}")]
    Match {
        seed: u64,
        #[source]
        source: Box<Error>,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
