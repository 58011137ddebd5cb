use std::path::PathBuf;

use crate::graph::NodeId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: self-loop on node {node} rejected")]
    SelfLoop { line: usize, node: u64 },

    #[error("line {line}: strong edge ({u}, {v}) has no matching weak edge")]
    StrongNotWeak { line: usize, u: u64, v: u64 },

    #[error("node {node} out of range (graph has {node_count} nodes)")]
    NodeOutOfRange { node: usize, node_count: usize },

    #[error("unknown external node id {0}")]
    UnknownExternalId(u64),

    #[error("{candidate} is not a weak neighbor of focal node {focal}")]
    NotACandidate { focal: NodeId, candidate: NodeId },

    #[error("no candidates to rank")]
    NoCandidates,

    #[error("incompatible sketches: {0}")]
    IncompatibleSketch(String),

    #[error("sketch precision {0} outside [4, 18]")]
    InvalidPrecision(u8),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("degenerate training data: {0}")]
    DegenerateTraining(String),

    #[error("non-finite feature value at example {example}, feature {feature}")]
    NonFiniteFeature { example: usize, feature: usize },

    #[error("model file: {0}")]
    ModelFormat(String),

    #[error("no eligible test nodes (need strong degree > 0 and weak degree in [{d_min}, {d_max}])")]
    NoEligibleNodes { d_min: usize, d_max: usize },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
