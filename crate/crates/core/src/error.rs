use thiserror::Error;

use crate::types::NodeId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("node {node} exceeds its compute capacity ({used} > {capacity} slots)")]
    CapacityExceeded { node: NodeId, used: u32, capacity: u32 },

    #[error("node {0} is not an AI satellite")]
    NotAiNode(NodeId),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("instance too large for exact enumeration: {0} assignment combinations")]
    TooLarge(usize),
}

impl Error {
    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            msg: msg.into(),
        }
    }
}
