use crate::actions::ConstraintViolation;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("route parse error at line {line}: {msg}")]
    RouteParse { line: usize, msg: String },
    #[error("weather trace parse error at line {line}: {msg}")]
    TraceParse { line: usize, msg: String },
    #[error("weather trace invalid: {0}")]
    TraceValidation(String),
    #[error("sim time {0} s maps outside the weather trace span")]
    OutOfSpan(f64),
    #[error("snapshot decode failed: {0}")]
    Decode(String),
    #[error("action rejected: {0}")]
    Rejected(ConstraintViolation),
    #[error("unknown action id {0}")]
    UnknownAction(usize),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("statistics input: {0}")]
    Stats(String),
    #[error("training aborted: {0}")]
    Training(String),
    #[error("log format error at line {line}: {msg}")]
    Log { line: usize, msg: String },
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("replay diverged at step {step}: expected {expected:016x}, got {actual:016x}")]
    ReplayMismatch { step: usize, expected: u64, actual: u64 },
    #[error("scenario: {0}")]
    Scenario(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
