use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = GergmError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum GergmError {
    #[error("invalid network: {0}")]
    InvalidNetwork(String),

    #[error("edge ({i}, {j}) has weight {value} outside the unit interval")]
    OutOfUnitInterval { i: usize, j: usize, value: f64 },

    #[error("invalid statistic specification: {0}")]
    InvalidStatistic(String),

    #[error("gradient singular at zero statistic for {kind} (edge ({i}, {j}))")]
    SingularGradient { kind: String, i: usize, j: usize },

    #[error("invalid transform: {0}")]
    InvalidTransform(String),

    #[error("unbounded quantile at edge ({i}, {j}): restricted weight {value} is on the boundary")]
    UnboundedQuantile { i: usize, j: usize, value: f64 },

    #[error("negative weight {value} at edge ({i}, {j}) cannot be log1p-transformed")]
    NegativeWeight { i: usize, j: usize, value: f64 },

    #[error("Gibbs requires linear statistics (alpha = 1 or no weighting)")]
    GibbsIncompatible,

    #[error("invalid sampler configuration: {0}")]
    InvalidConfig(String),

    #[error("proposal tuning failed: last pilot acceptance rate {rate:.4} at sigma {sigma:.3e}")]
    TuningFailed { rate: f64, sigma: f64 },

    #[error("optimization failed: {0}")]
    Optimization(String),

    #[error("observed statistics outside simulated hull; increase M or adjust alpha")]
    OutsideHull,

    #[error("degenerate trace: {0}")]
    DegenerateTrace(String),

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl GergmError {
    pub(crate) fn parse(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        GergmError::Parse {
            path: path.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        GergmError::Io {
            path: path.into(),
            source,
        }
    }
}
