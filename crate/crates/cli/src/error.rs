use finsec::{FsmError, RfsmError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Numeric(String),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Validation(_) => 2,
            Self::Numeric(_) => 3,
            Self::Io(_) => 1,
        }
    }
}

impl From<FsmError> for CliError {
    fn from(e: FsmError) -> Self {
        match e {
            FsmError::SingularSection { .. } | FsmError::Linalg(_) => Self::Numeric(e.to_string()),
            _ => Self::Validation(e.to_string()),
        }
    }
}

impl From<RfsmError> for CliError {
    fn from(e: RfsmError) -> Self {
        match e {
            RfsmError::HypothesisViolated { .. }
            | RfsmError::NoFeasibleN { .. }
            | RfsmError::NoFeasibleM { .. }
            | RfsmError::SingularGram { .. }
            | RfsmError::Linalg(_) => Self::Numeric(e.to_string()),
            _ => Self::Validation(e.to_string()),
        }
    }
}

impl From<finsec::OperatorError> for CliError {
    fn from(e: finsec::OperatorError) -> Self {
        Self::Validation(e.to_string())
    }
}

impl From<finsec::CatalogError> for CliError {
    fn from(e: finsec::CatalogError) -> Self {
        match e {
            finsec::CatalogError::Fsm(e) => e.into(),
            finsec::CatalogError::Rfsm(e) => e.into(),
            other => Self::Validation(other.to_string()),
        }
    }
}
