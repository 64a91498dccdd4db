use thiserror::Error;

/// Errors raised by the library operations.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid path: {0}")]
    InvalidPath(String),

    #[error("invalid compensator: {0}")]
    InvalidCompensator(String),

    #[error("compensator table row {row}: {reason}")]
    Table { row: usize, reason: String },

    #[error("time {0} is outside the operation's domain")]
    Domain(String),

    #[error("model `{model}` produced an infinite jump time at replication {replication}")]
    InfiniteTime { model: String, replication: u64 },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("invalid announcing sequence: {0}")]
    Announcing(String),

    #[error("unknown model `{name}`; valid models: {valid}")]
    UnknownModel { name: String, valid: String },

    #[error("i/o: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;
