use std::process::ExitCode;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("schema error: {0}")]
    Schema(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("search budget exhausted: {0}")]
    BudgetExhausted(String),

    #[error("{failed} of {total} acceptance lines failed")]
    AcceptanceFailed { failed: usize, total: usize },

    #[error("output error: {0}")]
    Output(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::Schema(_) => 2,
            CliError::Numerical(_) | CliError::AcceptanceFailed { .. } => 3,
            CliError::BudgetExhausted(_) => 4,
            CliError::Output(_) => 1,
        })
    }
}

/// Inputs the operation rejects are scenario problems; everything else is a
/// numerical failure.
impl From<lyap_core::Error> for CliError {
    fn from(e: lyap_core::Error) -> Self {
        match e {
            lyap_core::Error::InvalidInput(_) | lyap_core::Error::FamilyMismatch(_) => CliError::Schema(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Output(e.to_string())
    }
}
