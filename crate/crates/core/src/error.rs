use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid environment: {0}")]
    InvalidEnvironment(String),

    #[error("infeasible horizon: horizon {horizon} is shorter than the shortest feasible path ({shortest})")]
    InfeasibleHorizon { horizon: usize, shortest: usize },

    #[error("goal is unreachable from start without crossing water")]
    GoalUnreachable,

    #[error("feature map not one-hot at cell ({row}, {col})")]
    NotOneHot { row: usize, col: usize },

    #[error("start state constrained")]
    StartConstrained,

    #[error("no feasible trajectory under the current constraint set")]
    Degenerate,

    #[error("demonstration infeasible under model (trajectory {0})")]
    InfeasibleDemonstration(usize),

    #[error("invalid trajectory {index}: {reason}")]
    InvalidTrajectory { index: usize, reason: String },

    #[error("non-finite gradient at step {step} (cluster weights {weights:?})")]
    NonFiniteGradient { step: usize, weights: Vec<f64> },

    #[error("degenerate weights: cluster {0} has zero norm")]
    DegenerateWeights(usize),

    #[error("empty demonstration set")]
    EmptyDataset,

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("parse error in {path}: {message}")]
    Parse { path: String, message: String },

    #[error("unsupported format version {found} (expected {expected})")]
    FormatVersion { found: u32, expected: u32 },

    #[error("usage: {0}")]
    Usage(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn parse(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse { path: path.into(), message: message.into() }
    }
}
