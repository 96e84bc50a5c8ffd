//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("argument {value} is outside the support [0, inf)")]
    Domain { value: f64 },

    #[error("survival function underflows at x = {x}; hazard is not representable")]
    HazardOverflow { x: f64 },

    #[error("distribution has no finite first moment ({family} shape = {shape})")]
    InfiniteMean { family: &'static str, shape: f64 },

    #[error("sample set is empty or invalid: {0}")]
    InvalidSamples(String),

    #[error("state `{0}` has no outgoing transitions in the logs")]
    UnreachableRow(String),

    #[error("absorbing state is unreachable from some transient state (condition estimate {condition:e})")]
    AbsorbingUnreachable { condition: f64 },

    #[error("expected cost is infinite from state `{0}`")]
    InfiniteCost(String),

    #[error("unknown state `{0}`")]
    UnknownState(String),

    #[error("invalid transition model: {0}")]
    InvalidModel(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("family `{0}` does not have exactly two parameters")]
    UnsupportedFamily(&'static str),

    #[error("episode does not end in the absorbing state")]
    IncompleteEpisode,

    #[error("group `{group}` has {n} samples; at least 2 are required")]
    InsufficientSample { group: &'static str, n: usize },

    #[error("both samples have zero variance")]
    ZeroVariance,

    #[error("schema error: {0}")]
    Schema(String),

    #[error("duplicate model-file key ({cluster}, {transition})")]
    DuplicateKey { cluster: String, transition: String },

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}
