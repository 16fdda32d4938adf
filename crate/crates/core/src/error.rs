use thiserror::Error;

use crate::verdict::Diagnosis;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("point {x} lies outside the grid window [{lo}, {hi}]")]
    OutOfDomain { x: f64, lo: f64, hi: f64 },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("function has no finite value (improper)")]
    ImproperInput,

    #[error("+inf and -inf cannot be added")]
    IndeterminateSum,

    #[error("value -inf is not allowed here")]
    NegInfNotAllowed,

    #[error("NaN is not an extended real")]
    NotANumber,

    #[error("bad parameter: {0}")]
    BadParameter(String),

    #[error("function is not convex on its domain")]
    NotConvex,

    #[error("empty set: lower bound {lo} exceeds upper bound {hi}")]
    EmptySet { lo: f64, hi: f64 },

    #[error("graph has no point inside the comparison window")]
    EmptyWindow,

    #[error("no exact subgradient pair within the repair bounds on this window")]
    WindowTooSmall,

    #[error("horizon too small: {0}")]
    HorizonExceeded(String),

    #[error("grids differ")]
    GridMismatch,

    #[error("hypothesis failure: {0}")]
    Hypothesis(Diagnosis),

    #[error("no normalization witness within tolerance (best residual {best})")]
    NotFound { best: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
