use std::fmt;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Where in a training run a numeric failure occurred.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepLocation {
    pub epoch: usize,
    pub step: usize,
}

impl fmt::Display for StepLocation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "epoch {} step {}", self.epoch, self.step)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: malformed input: {reason}")]
    MalformedLine { line: usize, reason: String },

    #[error("line {line}: event of node {node} at time {time} precedes cascade start {start}")]
    TimeOrderViolation {
        line: usize,
        node: String,
        time: u64,
        start: u64,
    },

    #[error("line {line}: cascade has no participant events")]
    EmptyCascade { line: usize },

    #[error("degenerate split: {train} train / {test} test cascades")]
    DegenerateSplit { train: usize, test: usize },

    #[error("non-finite parameter after update{}", .at.map(|l| format!(" at {l}")).unwrap_or_default())]
    NonFiniteUpdate { at: Option<StepLocation> },

    #[error("unrecognized file format: expected magic {expected:?}")]
    FormatVersionMismatch { expected: &'static str },

    #[error("corrupt file: {0}")]
    CorruptFile(String),

    #[error("every candidate embedding has zero norm")]
    AllZeroNorms,

    #[error("diffusion matrix has no candidates or no nodes")]
    EmptyMatrix,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn malformed(line: usize, reason: impl Into<String>) -> Self {
        Error::MalformedLine {
            line,
            reason: reason.into(),
        }
    }
}
