use dimwit_lp::LpError;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("shape mismatch: expected {expected} entries, got {actual}")]
    ShapeMismatch { expected: usize, actual: usize },
    #[error("negative probability {value} at {location}")]
    NegativeProbability { value: f64, location: String },
    #[error("distribution at {location} sums to {sum}, not 1")]
    NotNormalized { sum: f64, location: String },
    #[error("expectation values need a binary outcome, scenario has {0} outcomes")]
    NonBinaryOutcome(usize),
    #[error("behaviors belong to different scenarios")]
    ScenarioMismatch,
    #[error("bad mixture weights: {0}")]
    BadWeights(String),
    #[error("invalid experiment configuration: {0}")]
    InvalidConfig(String),
    #[error("operation not available in {0} mode")]
    ModeUnsupported(&'static str),
    #[error("{count} strategies exceed the enumeration cap of {cap}")]
    TooManyStrategies { count: u128, cap: u128 },
    #[error("scenario too small: {0}")]
    ScenarioTooSmall(String),
    #[error("bad input distribution: {0}")]
    BadInputDistribution(String),
    #[error("value {value} outside {range}")]
    OutOfRange { value: f64, range: &'static str },
    #[error("linear program failed: {0}")]
    SolverFailure(String),
}

impl From<LpError> for Error {
    fn from(e: LpError) -> Self {
        Error::SolverFailure(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
