//! Experiment runner for `genbo-core`: config files, multi-seed execution,
//! CSV/JSON results, SVG regret plots and gradient self-checks.

pub mod config;
pub mod error;
pub mod plot;
pub mod results;
pub mod run;
pub mod selfcheck;

pub use config::{load_config, parse_config, ConfigError, MethodSpec, RunPlan};
pub use error::CliError;
pub use results::{CsvRow, Summary, CSV_HEADER};
pub use run::{cmd_run, RunOptions};
