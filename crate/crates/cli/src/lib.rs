//! Scenario runner for the contransfer engines.

pub mod config;
pub mod output;
pub mod scenario;

use std::path::{Path, PathBuf};

use thiserror::Error;

pub use config::{parse_config, ConfigError, RawConfig, RunConfig, Scenario};
pub use output::emit_csv;
pub use scenario::{run_scenario, RunOutput};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(#[from] ConfigError),

    #[error("engine error: {0}")]
    Engine(#[from] contransfer::Error),

    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Engine(_) => 3,
            CliError::Io { .. } => 4,
        }
    }
}
