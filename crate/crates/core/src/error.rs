use thiserror::Error;

/// Errors raised by the estimation, oracle and benchmark layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension p = {p} exceeds the exhaustive-search cap of {max}")]
    DimensionTooLarge { p: usize, max: usize },

    #[error("dimension must be at least 1")]
    EmptyDimension,

    #[error("treatment arm {arm} has no observations")]
    EmptyGroup { arm: u8 },

    #[error("too few observations: need at least {needed}, have {have}")]
    TooFewObservations { needed: usize, have: usize },

    #[error("slice {slice} has {rows} rows; second-moment estimators need at least 2")]
    SliceTooSmall { slice: usize, rows: usize },

    #[error("covariance matrix is singular (smallest eigenvalue {min_eigenvalue:e})")]
    SingularCovariance { min_eigenvalue: f64 },

    #[error("conditioning block is singular (smallest eigenvalue {min_eigenvalue:e})")]
    SingularBlock { min_eigenvalue: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid dataset: {0}")]
    InvalidData(String),

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("invalid population design: {0}")]
    InvalidMechanism(String),

    #[error("contradictory pruning hints: index {index} is listed as {first} and {second}")]
    ContradictoryHints {
        index: usize,
        first: &'static str,
        second: &'static str,
    },

    #[error("unknown simulation model {0}; expected 1..=5")]
    UnknownModel(u8),

    #[error("every subset produced a singular conditioning block")]
    AllSingular,

    #[error("{0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::InvalidData(e.to_string())
    }
}
