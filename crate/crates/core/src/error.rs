use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("self-pair: {0} cannot be paired with itself")]
    SelfPair(String),

    #[error("invalid entity {key}: {reason}")]
    InvalidEntity { key: String, reason: String },

    #[error("duplicate entity key {0}")]
    DuplicateKey(String),

    #[error("empty collection")]
    EmptyCollection,

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("point ({x:.3}, {y:.3}) lies outside the node's logical region")]
    OutsideNode { x: f64, y: f64 },

    #[error("undefined similarity: both strings are empty")]
    UndefinedSimilarity,

    #[error("unknown taxonomy term {0:?}")]
    UnknownTerm(String),

    #[error("invalid taxonomy: {0}")]
    InvalidTaxonomy(String),

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("similarity value {value} for {dim} is outside [0, 1]")]
    SimilarityRange { dim: String, value: f64 },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("degenerate labels: every labeled pair is {0}")]
    DegenerateLabels(&'static str),

    #[error("too few levels: {0} skyline levels, need at least 3")]
    TooFewLevels(usize),

    #[error("pair {0} found in several blocks with differing similarity vectors")]
    InconsistentPair(String),

    #[error("{path}: row {row}: {reason}")]
    Parse {
        path: PathBuf,
        row: usize,
        reason: String,
    },

    #[error("stage {stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("config: {0}")]
    Config(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn parse(path: impl Into<PathBuf>, row: usize, reason: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            row,
            reason: reason.into(),
        }
    }

    pub fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// Tags the error with the pipeline stage it came from.
    pub fn in_stage(self, stage: &'static str) -> Self {
        match self {
            e @ Error::Stage { .. } => e,
            e => Error::Stage {
                stage,
                source: Box::new(e),
            },
        }
    }

    pub fn stage(&self) -> Option<&'static str> {
        match self {
            Error::Stage { stage, .. } => Some(stage),
            _ => None,
        }
    }
}
