use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    #[error("invalid network series: {0}")]
    Validation(String),

    #[error("a series needs at least two snapshots, found {0}")]
    EmptySeries(usize),

    #[error("label {label} of node {node} is outside 0..{k}")]
    LabelOutOfRange { node: usize, label: usize, k: usize },

    #[error("dimension mismatch: {0}")]
    Shape(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("responsibility gamma[{node}][{community}] = {value:e} is below the floor")]
    GammaBelowFloor {
        node: usize,
        community: usize,
        value: f64,
    },

    #[error("quadratic coefficient A[{index}] = {value} must be negative")]
    NonConcaveQp { index: usize, value: f64 },

    #[error("Hessian is singular even with ridge {ridge:e}: {diagnostic}")]
    SingularHessian { ridge: f64, diagnostic: String },

    #[error("non-finite lower bound encountered during {0}")]
    NonFinite(&'static str),

    #[error("all {restarts} restarts failed; last error: {last}")]
    AllRestartsFailed { restarts: usize, last: Box<Error> },

    #[error("community {community} is infeasible: {reason}")]
    Infeasible { community: usize, reason: String },

    #[error("only {available} cross-community dyads available, {requested} requested")]
    InsufficientCrossDyads { requested: usize, available: usize },

    #[error("exhaustive label alignment supports at most 8 communities, got {0}")]
    TooManyCommunities(usize),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
