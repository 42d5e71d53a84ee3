use std::fmt;
use std::path::Path;

use flowgate_core::bat::{BatError, FitnessError};
use flowgate_core::dataset::DatasetError;
use flowgate_core::metrics::MetricsError;
use flowgate_core::wrf::WrfError;

/// What went wrong, in terms of the process exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Bad configuration, arguments or missing inputs. Exit code 2.
    Config,
    /// Failure while reading data or running a stage. Exit code 3.
    Runtime,
}

#[derive(Debug)]
pub struct CliError {
    pub kind: ErrorKind,
    pub message: String,
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        Self {
            kind: ErrorKind::Config,
            message: message.into(),
        }
    }

    pub fn runtime(message: impl Into<String>) -> Self {
        Self {
            kind: ErrorKind::Runtime,
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.kind {
            ErrorKind::Config => 2,
            ErrorKind::Runtime => 3,
        }
    }

    pub fn context(self, what: impl fmt::Display) -> Self {
        Self {
            message: format!("{what}: {}", self.message),
            ..self
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

pub type Result<T> = std::result::Result<T, CliError>;

/// Fails with a config error naming `path` unless it exists.
pub fn require_path(path: &Path, what: &str) -> Result<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(CliError::config(format!(
            "{what} not found: {}",
            path.display()
        )))
    }
}

pub fn io(path: &Path, err: std::io::Error) -> CliError {
    CliError::runtime(format!("{}: {err}", path.display()))
}

impl From<DatasetError> for CliError {
    fn from(e: DatasetError) -> Self {
        match e {
            DatasetError::TargetExceedsAvailable { .. } => CliError::config(e.to_string()),
            other => CliError::runtime(other.to_string()),
        }
    }
}

impl From<BatError> for CliError {
    fn from(e: BatError) -> Self {
        match e {
            BatError::InvalidConfig(_) => CliError::config(e.to_string()),
            other => CliError::runtime(other.to_string()),
        }
    }
}

impl From<FitnessError> for CliError {
    fn from(e: FitnessError) -> Self {
        CliError::runtime(e.to_string())
    }
}

impl From<WrfError> for CliError {
    fn from(e: WrfError) -> Self {
        match e {
            WrfError::InvalidConfig(_) | WrfError::InvalidProfile(_) => {
                CliError::config(e.to_string())
            }
            other => CliError::runtime(other.to_string()),
        }
    }
}

impl From<MetricsError> for CliError {
    fn from(e: MetricsError) -> Self {
        match e {
            MetricsError::CostFormat { .. } => CliError::config(e.to_string()),
            other => CliError::runtime(other.to_string()),
        }
    }
}
