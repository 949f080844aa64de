use dimwit_core::Error as CoreError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("scenario or mode error: {0}")]
    Scenario(String),
    #[error("solver failure: {0}")]
    Solver(String),
    #[error("{0} verification check(s) failed")]
    VerifyFailed(usize),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::VerifyFailed(_) => 1,
            CliError::Config(_) => 2,
            CliError::Scenario(_) => 3,
            CliError::Solver(_) => 4,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        let msg = e.to_string();
        match e {
            CoreError::ModeUnsupported(_)
            | CoreError::ScenarioTooSmall(_)
            | CoreError::ScenarioMismatch
            | CoreError::TooManyStrategies { .. } => CliError::Scenario(msg),
            CoreError::SolverFailure(_) => CliError::Solver(msg),
            _ => CliError::Config(msg),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Config(e.to_string())
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
