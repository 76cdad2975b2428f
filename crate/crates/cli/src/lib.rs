//! Reproducible experiments on top of the `qgabor` library.
//!
//! Every subcommand takes a resolved [`RunConfig`]; reports and summaries
//! embed it so a run can be repeated from its output alone.

pub mod commands;
pub mod config;
pub mod report;
pub mod verify;

pub use config::{Format, RunConfig, Tolerances};
pub use report::{Check, Report};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("{0}")]
    Format(String),

    #[error("{0}")]
    ChecksFailed(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Library(#[from] qgabor::Error),
}

impl CliError {
    /// 1 check failure, 2 usage, 3 IO or format.
    pub fn exit_code(&self) -> i32 {
        use qgabor::Error as E;
        match self {
            CliError::ChecksFailed(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Format(_) | CliError::Io(_) => 3,
            CliError::Library(e) => match e {
                E::InvalidParameter(_) | E::NyquistViolation { .. } | E::UnknownSignal(_) | E::InvalidGrid(_) => 2,
                _ => 3,
            },
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Format(e.to_string())
    }
}
