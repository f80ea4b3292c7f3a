use rsma_core::RsmaError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::Infeasible(_) => 3,
            Self::Internal(_) => 4,
        }
    }
}

impl From<RsmaError> for CliError {
    fn from(e: RsmaError) -> Self {
        match e {
            RsmaError::Infeasible(m) => Self::Infeasible(m),
            RsmaError::Domain(m) => Self::Config(m),
            other => Self::Internal(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Internal(e.to_string())
    }
}
