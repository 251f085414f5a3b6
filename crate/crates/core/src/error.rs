use crate::graph::EdgeId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("graph is not connected")]
    DisconnectedGraph,
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("unknown edge {0}")]
    UnknownEdge(EdgeId),
    #[error("candidate set is empty")]
    EmptyCandidates,
    #[error("edge {0} is already active")]
    AlreadyActive(EdgeId),
    #[error("edge {0} is not active")]
    NotActive(EdgeId),
    #[error("rank {rank} out of range for {available} active edges")]
    RankOutOfRange { rank: usize, available: usize },
    #[error("no group with key {0}")]
    UnknownGroup(i64),
    #[error("malformed edge list: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParam(msg.into())
    }
}
