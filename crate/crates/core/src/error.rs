use std::io;
use std::path::PathBuf;

use thiserror::Error;

use crate::relation::Relation;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("unknown relation label `{0}`")]
pub struct ParseLabelError(pub String);

/// A line-level problem in one of the JSONL/TSV inputs.
#[derive(Debug, Error)]
#[error("{}:{line}: field `{field}`: {message}", path.display())]
pub struct FormatError {
    pub path: PathBuf,
    pub line: usize,
    pub field: String,
    pub message: String,
}

impl FormatError {
    pub fn new(
        path: impl Into<PathBuf>,
        line: usize,
        field: impl Into<String>,
        message: impl Into<String>,
    ) -> Self {
        FormatError {
            path: path.into(),
            line,
            field: field.into(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Error)]
#[error("{}: {source}", path.display())]
pub struct IoError {
    pub path: PathBuf,
    #[source]
    pub source: io::Error,
}

pub(crate) trait IoContext<T> {
    fn at(self, path: &std::path::Path) -> Result<T, IoError>;
}

impl<T> IoContext<T> for io::Result<T> {
    fn at(self, path: &std::path::Path) -> Result<T, IoError> {
        self.map_err(|source| IoError {
            path: path.to_path_buf(),
            source,
        })
    }
}

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("event text must not be empty")]
    EmptyText,
    #[error("unknown event id `{0}`")]
    UnknownEvent(String),
    #[error("duplicate event id `{0}`")]
    DuplicateId(String),
    #[error("self-loop on event `{0}` is not allowed")]
    SelfLoop(String),
    #[error("confidence {0} outside [0, 2]")]
    BadConfidence(f64),
    #[error("human triplets carry no confidence; predicted triplets require one")]
    ConfidenceMismatch,
    #[error("cluster `{0}` is defined twice")]
    DuplicateCluster(String),
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error(transparent)]
    Io(#[from] IoError),
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("the split selects no positive triplets")]
    EmptySplit,
    #[error("split names unknown cluster `{0}`")]
    UnknownCluster(String),
    #[error("no admissible negative tail for head `{head}` after {attempts} attempts")]
    Unsatisfiable { head: String, attempts: usize },
    #[error("persona negatives require an xPersona/oPersona positive, got {0}")]
    NotPersona(Relation),
    #[error("no event containing `is` is available as a persona negative tail")]
    NoPersonaTail,
    #[error("persona negatives requested but the split has no xPersona/oPersona positives")]
    NoPersonaPositives,
    #[error("sampling ratios must be finite and non-negative")]
    BadRatio,
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error(transparent)]
    Io(#[from] IoError),
}

#[derive(Debug, Error)]
pub enum ScorerError {
    #[error("pair {index}: head and tail text must be non-empty")]
    EmptyText { index: usize },
    #[error("model file: {0}")]
    Model(String),
    #[error("training: {0}")]
    Training(String),
    #[error("pair {index}: invalid score: {message}")]
    InvalidScore { index: usize, message: String },
    #[error("protocol: {0}")]
    Protocol(String),
    #[error("transport failed after {attempts} attempt(s): {message}")]
    Transport { attempts: usize, message: String },
    #[error(transparent)]
    Io(#[from] IoError),
}

impl ScorerError {
    /// Index of the offending pair within the scored batch, when known.
    pub fn pair_index(&self) -> Option<usize> {
        match self {
            ScorerError::EmptyText { index } | ScorerError::InvalidScore { index, .. } => {
                Some(*index)
            }
            _ => None,
        }
    }
}

#[derive(Debug, Error)]
pub enum CompletionError {
    #[error("cluster sample size {requested} exceeds the {available} available clusters")]
    SampleTooLarge { requested: usize, available: usize },
    #[error("inter-cluster completion needs at least two sampled clusters, got {0}")]
    SampleTooSmall(usize),
    #[error("unknown cluster `{0}`")]
    UnknownCluster(String),
    #[error("thresholds: {0}")]
    Thresholds(String),
    #[error("scoring failed on candidate pairs {indices:?}: {source}")]
    Scoring {
        indices: Vec<usize>,
        #[source]
        source: ScorerError,
    },
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error(transparent)]
    Io(#[from] IoError),
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("requested {requested} samples from {available} predictions")]
    SampleTooLarge { requested: usize, available: usize },
    #[error("relation distribution is missing `{0}`")]
    MissingRelation(String),
    #[error("duplicate gold pair ({head}, {tail})")]
    DuplicatePair { head: String, tail: String },
    #[error("gold pair ({head}, {tail}) should be scoped `{expected}`")]
    ScopeMismatch {
        head: String,
        tail: String,
        expected: &'static str,
    },
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error(transparent)]
    Io(#[from] IoError),
}
