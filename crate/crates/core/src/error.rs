use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("non-finite value at row {row}, dimension {dim}")]
    NonFinite { row: usize, dim: usize },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: line {line}: {msg}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("distance matrix is not symmetric at ({i}, {j}): {a} vs {b}")]
    Asymmetric { i: usize, j: usize, a: f64, b: f64 },

    #[error("distance matrix entry ({i}, {j}) = {value} is outside [0, 1]")]
    OutOfRange { i: usize, j: usize, value: f64 },

    #[error("oracle model mismatch: {0}")]
    ModelMismatch(String),

    #[error("index {index} out of bounds for {len} points")]
    IndexOutOfBounds { index: usize, len: usize },

    #[error("no remaining vertex: every point is already a center")]
    NoRemainingVertex,

    #[error("exhaustive search refused: {subsets} subsets exceed the limit of {limit}")]
    TooLarge { subsets: u128, limit: u128 },

    #[error("arm ({v}, {s}) has not been pulled; its confidence interval is unbounded")]
    UnpulledArm { v: usize, s: usize },

    #[error("arm ({v}, {s}) is already exact")]
    ExactArm { v: usize, s: usize },

    #[error("stage {stage}: pull cap of {cap} reached without meeting the stopping rule")]
    StageCap { stage: usize, cap: u64 },

    #[error("non-finite objective at iteration {iteration}")]
    NonFiniteObjective { iteration: usize },

    #[error("stage {stage}: {source}")]
    Stage {
        stage: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn in_stage(self, stage: usize) -> Self {
        match self {
            e @ (Error::Stage { .. } | Error::StageCap { .. }) => e,
            other => Error::Stage {
                stage,
                source: Box::new(other),
            },
        }
    }

    /// True for errors caused by the input data rather than by a run.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::NonFinite { .. }
                | Error::Parse { .. }
                | Error::Asymmetric { .. }
                | Error::OutOfRange { .. }
        )
    }
}
