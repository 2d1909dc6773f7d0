use thiserror::Error;

use crate::topology::NodeId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("deployment infeasible for seed {seed}: {reason}")]
    DeploymentInfeasible { seed: u64, reason: String },

    #[error("node {0} is not a member of the tree")]
    NotAMember(NodeId),

    #[error("sources are not connected: {0}")]
    NotConnected(String),

    #[error("oracle limit exceeded: {size} sources > limit {limit}")]
    OracleLimit { size: usize, limit: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("division domain error: {0}")]
    DivisionDomain(String),

    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("curves not comparable: {0}")]
    NotComparable(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
