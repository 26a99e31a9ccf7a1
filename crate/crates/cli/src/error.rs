use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{file}: {reason}")]
    Schema { file: PathBuf, reason: String },
    #[error("{failed} of {total} sweep runs failed: {details}")]
    PartialSweep {
        failed: usize,
        total: usize,
        details: String,
    },
    #[error("runtime error: {0}")]
    Runtime(String),
}

impl CliError {
    /// 1 for bad configuration or input files, 2 for a sweep with failed runs, 3 for
    /// everything that broke while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Schema { .. } => 1,
            CliError::PartialSweep { .. } => 2,
            CliError::Runtime(_) => 3,
        }
    }
}

impl From<cogradar::Error> for CliError {
    fn from(e: cogradar::Error) -> Self {
        match e {
            cogradar::Error::InvalidConfig { .. } | cogradar::Error::OutOfValidityRange { .. } => {
                CliError::Config(e.to_string())
            }
            other => CliError::Runtime(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Attaches a path to an I/O failure.
pub fn io_at(path: &std::path::Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |e| CliError::Runtime(format!("{}: {e}", path.display()))
}
