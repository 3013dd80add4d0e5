//! The `run` subcommand: every (method, seed) cell of a config, fanned out
//! over a worker pool and written back in a fixed order.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use genbo_core::engine::{run_experiment, RunFailure};
use genbo_core::{EhrlichFunction, MeanFieldParams, RunResult, Task};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{load_config, RunPlan};
use crate::error::CliError;
use crate::results::{summarize, write_rows, CsvRow, Summary};

pub const SEED_OFFSET_VAR: &str = "GENBO_SEED_OFFSET";

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Worker threads; `None` uses one per core.
    pub parallelism: Option<usize>,
    pub force: bool,
    pub seed_offset: u64,
}

/// Parses `GENBO_SEED_OFFSET`, defaulting to 0 when unset.
pub fn seed_offset_from_env() -> Result<u64, CliError> {
    match std::env::var(SEED_OFFSET_VAR) {
        Err(_) => Ok(0),
        Ok(v) => v.trim().parse().map_err(|_| CliError::SeedOffset(v)),
    }
}

/// Outcome of one (method, seed) cell.
#[derive(Debug)]
pub struct Cell {
    pub method: String,
    pub seed: u64,
    pub wall_time_s: f64,
    pub outcome: Result<RunResult, RunFailure>,
}

impl Cell {
    pub fn rows(&self) -> Vec<CsvRow> {
        let records = match &self.outcome {
            Ok(r) => &r.records,
            Err(f) => &f.records,
        };
        records.iter().map(|r| CsvRow::new(&self.method, self.seed, r)).collect()
    }
}

/// Runs every cell of `plan`, returned in (method, seed) order.
pub fn execute(plan: &RunPlan, parallelism: Option<usize>) -> Result<Vec<Cell>, CliError> {
    let jobs: Vec<(usize, u64)> = (0..plan.methods.len())
        .flat_map(|m| plan.seeds.iter().map(move |&s| (m, s)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Pool(e.to_string()))?;
    Ok(pool.install(|| {
        jobs.par_iter()
            .map(|&(m, seed)| {
                let spec = &plan.methods[m];
                let start = Instant::now();
                let outcome = run_experiment(&spec.config, seed);
                Cell {
                    method: spec.label.clone(),
                    seed,
                    wall_time_s: start.elapsed().as_secs_f64(),
                    outcome,
                }
            })
            .collect()
    }))
}

#[derive(Serialize)]
struct Checkpoint<'a> {
    method: &'a str,
    seed: u64,
    wall_time_s: f64,
    rounds: usize,
    best_y: f64,
    best_tokens: &'a [u8],
    /// Rendered with the task vocabulary when it has one.
    best_sequence: Option<String>,
    params: Option<&'a MeanFieldParams>,
}

fn checkpoint_json(cell: &Cell, result: &RunResult) -> Result<String, serde_json::Error> {
    let best = result.dataset.best_index().map(|i| &result.dataset.records()[i]);
    let best_tokens = best.map(|r| r.sequence.tokens()).unwrap_or(&[]);
    let best_sequence = match (result.config.blackbox.task(), best) {
        (Task::EditDistance(t), Some(r)) => t.vocab().render(&r.sequence).ok(),
        _ => None,
    };
    serde_json::to_string_pretty(&Checkpoint {
        method: &cell.method,
        seed: cell.seed,
        wall_time_s: cell.wall_time_s,
        rounds: result.records.len(),
        best_y: result.dataset.best_y().unwrap_or(f64::NAN),
        best_tokens,
        best_sequence,
        params: result.params.as_ref(),
    })
}

pub fn write_ehrlich(path: &Path, f: &EhrlichFunction) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(f).map_err(|e| CliError::io(path, e.into()))?;
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

/// Writes `results.csv`, checkpoints and, when every run finished,
/// `summary.json`. Returns the summary.
pub fn write_outputs(plan: &RunPlan, cells: &[Cell], out_dir: &Path, wall_time_s: f64) -> Result<Summary, CliError> {
    let csv_path = out_dir.join("results.csv");
    let rows: Vec<CsvRow> = cells.iter().flat_map(Cell::rows).collect();
    let file = fs::File::create(&csv_path).map_err(|e| CliError::io(&csv_path, e))?;
    write_rows(file, &rows).map_err(|e| CliError::io(&csv_path, e.into()))?;

    if let Task::Ehrlich(f) = plan.blackbox().task() {
        write_ehrlich(&out_dir.join("ehrlich.json"), f)?;
    }
    let ckpt_dir = out_dir.join("checkpoints");
    fs::create_dir_all(&ckpt_dir).map_err(|e| CliError::io(&ckpt_dir, e))?;
    for cell in cells {
        if let Ok(result) = &cell.outcome {
            let path = ckpt_dir.join(format!("{}_seed{}.json", cell.method, cell.seed));
            let text = checkpoint_json(cell, result).map_err(|e| CliError::io(&path, e.into()))?;
            fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
        }
    }

    let failures: Vec<&Cell> = cells.iter().filter(|c| c.outcome.is_err()).collect();
    if let Some(first) = failures.first() {
        let err = first.outcome.as_ref().err().map(ToString::to_string).unwrap_or_default();
        return Err(CliError::RunsFailed {
            failed: failures.len(),
            total: cells.len(),
            first: format!("{} seed {}: {err}", first.method, first.seed),
        });
    }

    let summary = Summary {
        rounds: plan.methods[0].config.rounds,
        methods: summarize(&rows),
        wall_time_s,
    };
    let path = out_dir.join("summary.json");
    let text = serde_json::to_string_pretty(&summary).map_err(|e| CliError::io(&path, e.into()))?;
    fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
    Ok(summary)
}

pub fn cmd_run(config_path: &Path, out_dir: &Path, opts: &RunOptions) -> Result<Summary, CliError> {
    let mut plan = load_config(config_path)?;
    plan.shift_seeds(opts.seed_offset);
    let csv_path: PathBuf = out_dir.join("results.csv");
    if csv_path.exists() && !opts.force {
        return Err(CliError::OutputExists(csv_path));
    }
    fs::create_dir_all(out_dir).map_err(|e| CliError::io(out_dir, e))?;
    let start = Instant::now();
    let cells = execute(&plan, opts.parallelism)?;
    write_outputs(&plan, &cells, out_dir, start.elapsed().as_secs_f64())
}
