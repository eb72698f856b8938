use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("node {node} out of range for graph on {n} nodes")]
    InvalidNode { node: usize, n: usize },
    #[error("self-loop on node {0} rejected")]
    SelfLoopRejected(usize),
    #[error("parse error on line {line}: {message}")]
    ParseError { line: usize, message: String },
    #[error("io error: {0}")]
    Io(String),
    #[error("node-pair fraction {0} outside (0, 1]")]
    InvalidFraction(f64),
    #[error("subsample is empty")]
    EmptySample,
    #[error("rank {rank} invalid for matrix of dimension {dim}")]
    InvalidRank { rank: usize, dim: usize },
    #[error("statistic undefined: {0}")]
    Undefined(&'static str),
    #[error("calibrated within-block probability {0} exceeds 1")]
    InfeasibleDensity(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("graph has no edges")]
    NoEdges,
    #[error("AUC undefined: held-out labels contain a single class")]
    UndefinedAuc,
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("every candidate fraction produced a degenerate run")]
    SelectionFailed,
    #[error("statistic does not support this sample kind: {0}")]
    UnsupportedSample(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
