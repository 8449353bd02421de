use thiserror::Error;

/// Errors raised by the order checkers, the matrix model and the analyses.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("test-function family is empty")]
    EmptyFamily,
    #[error("distribution has a non-positive atom {value}")]
    NonPositiveSupport { value: f64 },
    #[error("matrix entry ({row}, {col}) evaluated to {value} < 0")]
    NegativeEntry { row: usize, col: usize, value: f64 },
    #[error("population overflowed the float range at t = {t}")]
    Overflow { t: usize },
    #[error("logarithm of a zero population size")]
    LogOfZero,
    #[error("function evaluated to non-positive value {value}")]
    NonPositiveValue { value: f64 },
    #[error("model violates the log-convexity hypothesis: {0}")]
    HypothesisViolated(String),
    #[error("additive coupling noise has non-zero mean {mean:?}")]
    NonZeroMeanNoise { mean: Vec<f64> },
    #[error("index out of range: {0}")]
    IndexOutOfRange(String),
    #[error("trajectory went extinct at t = {t}")]
    ExtinctTrajectory { t: usize },
    #[error("power iteration did not converge on the mean matrix")]
    NonPrimitiveMeanMatrix,
    #[error("unsupported entry kind: {0}")]
    UnsupportedEntryKind(String),
    #[error("cannot parse entry {input:?}: {reason}")]
    EntryParse { input: String, reason: String },
    #[error("horizon mismatch: {0} vs {1}")]
    HorizonMismatch(usize, usize),
}

impl Error {
    /// True for failures that arise while simulating a valid setup, as
    /// opposed to rejected inputs.
    pub fn is_runtime(&self) -> bool {
        matches!(
            self,
            Error::NegativeEntry { .. }
                | Error::Overflow { .. }
                | Error::LogOfZero
                | Error::NonPositiveValue { .. }
                | Error::ExtinctTrajectory { .. }
                | Error::NonPrimitiveMeanMatrix
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
