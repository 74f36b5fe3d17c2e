use std::path::PathBuf;

use thiserror::Error;

/// Failures of a command, each mapped to a stable exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("condition not satisfied: {0}")]
    Unsatisfied(String),
    #[error("golden mismatch: {0}")]
    Golden(String),
    #[error("property failure: {0}")]
    Property(String),
    #[error("cannot write {path}: {source}")]
    Output { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) | CliError::Output { .. } => 3,
            CliError::Unsatisfied(_) => 4,
            CliError::Golden(_) => 5,
            CliError::Property(_) => 6,
        }
    }
}

impl From<consensus_core::Error> for CliError {
    fn from(e: consensus_core::Error) -> Self {
        use consensus_core::Error as E;
        match e {
            E::Config(m) | E::Domain(m) => CliError::Config(m),
            E::Precondition(m) | E::Numerical(m) | E::Overflow(m) => CliError::Numerical(m),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
