use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use genbo::run::{cmd_run, seed_offset_from_env, RunOptions};
use genbo::{plot, selfcheck, CliError};

#[derive(Parser)]
#[command(name = "genbo", version, about = "Generative Bayesian optimization over discrete sequences")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every (method, seed) cell of a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Worker threads (default: one per core).
        #[arg(long)]
        parallelism: Option<usize>,
        /// Overwrite existing results in the output directory.
        #[arg(long)]
        force: bool,
    },
    /// Plot mean regret per round with a ±1 std band.
    Plot {
        #[arg(long)]
        csv: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Finite-difference gradient and normalization checks.
    Selfcheck,
}

fn run(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Run {
            config,
            out,
            parallelism,
            force,
        } => {
            let opts = RunOptions {
                parallelism,
                force,
                seed_offset: seed_offset_from_env()?,
            };
            let summary = cmd_run(&config, &out, &opts)?;
            for m in &summary.methods {
                println!(
                    "{:<32} final regret {:.4} ± {:.4} over {} seeds",
                    m.method,
                    m.final_regret_mean,
                    m.final_regret_std,
                    m.seeds.len()
                );
            }
            Ok(0)
        }
        Command::Plot { csv, out } => plot::cmd_plot(&csv, &out).map(|_| 0),
        Command::Selfcheck => {
            let mut stdout = std::io::stdout().lock();
            selfcheck::selfcheck(&mut stdout).map_err(|e| CliError::io("stdout", e))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
