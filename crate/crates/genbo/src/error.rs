use std::io;
use std::path::PathBuf;

use crate::config::ConfigError;
use crate::results::CsvError;

/// Everything a subcommand can fail with, mapped onto exit codes.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(#[from] ConfigError),
    #[error("{} already exists; pass --force to overwrite", .0.display())]
    OutputExists(PathBuf),
    #[error("GENBO_SEED_OFFSET must be a nonnegative integer, found `{0}`")]
    SeedOffset(String),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{}: {source}", path.display())]
    BadCsv { path: PathBuf, source: CsvError },
    #[error("{failed} of {total} runs failed (first: {first}); partial results were written")]
    RunsFailed { failed: usize, total: usize, first: String },
    #[error("could not start the worker pool: {0}")]
    Pool(String),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// 2 for bad input or usage, 1 for failures while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::OutputExists(_) | CliError::SeedOffset(_) | CliError::BadCsv { .. } => 2,
            CliError::Io { .. } | CliError::RunsFailed { .. } | CliError::Pool(_) => 1,
        }
    }
}
