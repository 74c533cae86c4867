//! Experiment harness for deep chaos synchronization: configuration, result
//! files, plots, reference oracles and the experiments behind the CLI.

pub mod config;
pub mod experiments;
pub mod oracle;
pub mod plot;
pub mod selftest;
pub mod table;
pub mod weights;

use std::fmt;
use std::path::PathBuf;

pub use config::{ConfigError, ExperimentConfig, MapKind};
pub use table::{ResultTable, TableError};

#[derive(Debug)]
pub enum HarnessError {
    Config(ConfigError),
    Table(TableError),
    Core(dcs_core::Error),
    Io { path: PathBuf, source: std::io::Error },
    /// Self-test checks that failed, by name.
    Checks(Vec<String>),
}

impl fmt::Display for HarnessError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HarnessError::Config(e) => write!(f, "{e}"),
            HarnessError::Table(e) => write!(f, "{e}"),
            HarnessError::Core(e) => write!(f, "{e}"),
            HarnessError::Io { path, source } => write!(f, "{}: {source}", path.display()),
            HarnessError::Checks(names) => write!(f, "failed checks: {}", names.join(", ")),
        }
    }
}

// Display already inlines the inner error.
impl std::error::Error for HarnessError {}

impl From<ConfigError> for HarnessError {
    fn from(e: ConfigError) -> Self {
        HarnessError::Config(e)
    }
}

impl From<TableError> for HarnessError {
    fn from(e: TableError) -> Self {
        HarnessError::Table(e)
    }
}

impl From<dcs_core::Error> for HarnessError {
    fn from(e: dcs_core::Error) -> Self {
        HarnessError::Core(e)
    }
}

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;
