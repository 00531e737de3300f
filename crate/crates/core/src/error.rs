use thiserror::Error;

use crate::ArmId;

/// Errors raised by the engine and its supporting modules.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid similarity matrix: {reason} at ({row}, {col})")]
    Similarity {
        row: usize,
        col: usize,
        reason: String,
    },

    #[error("value out of domain: {0}")]
    Domain(String),

    #[error("session complete: fewer than two active arms or horizon reached")]
    SessionComplete,

    #[error("arm {0} is not in the active set")]
    StaleArm(ArmId),

    #[error("degenerate similarity: arm {k} is identical to both {winner} and {loser}")]
    DegenerateSimilarity {
        k: ArmId,
        winner: ArmId,
        loser: ArmId,
    },

    #[error("degenerate electrode configuration: {0}")]
    DegenerateConfig(String),

    #[error("correlation undefined: {0}")]
    UndefinedCorrelation(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("snapshot: {0}")]
    Snapshot(String),

    #[error("{context}: {message}")]
    Io { context: String, message: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
