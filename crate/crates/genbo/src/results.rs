//! The per-round CSV schema and the per-method summary.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use genbo_core::RoundRecord;
use serde::{Deserialize, Serialize};

pub const CSV_HEADER: [&str; 9] = [
    "method",
    "seed",
    "round",
    "n_evals",
    "threshold",
    "best_y",
    "simple_regret",
    "batch_mean_u",
    "final_loss",
];

/// One row per (method, seed, round). `final_loss` is empty for rounds
/// without a fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub method: String,
    pub seed: u64,
    pub round: u32,
    pub n_evals: usize,
    pub threshold: f64,
    pub best_y: f64,
    pub simple_regret: f64,
    pub batch_mean_u: f64,
    pub final_loss: Option<f64>,
}

impl CsvRow {
    pub fn new(method: &str, seed: u64, r: &RoundRecord) -> Self {
        Self {
            method: method.to_string(),
            seed,
            round: r.round,
            n_evals: r.n_evals,
            threshold: r.threshold,
            best_y: r.best_y,
            simple_regret: r.simple_regret,
            batch_mean_u: r.batch_mean_u,
            final_loss: r.final_loss,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CsvError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("unexpected header `{found}`; expected `{}`", CSV_HEADER.join(","))]
    Header { found: String },
    #[error("no data rows")]
    Empty,
}

pub fn write_rows(out: impl Write, rows: &[CsvRow]) -> Result<(), csv::Error> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(CSV_HEADER)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads rows, insisting on the exact header and at least one row.
pub fn read_rows(input: impl Read) -> Result<Vec<CsvRow>, CsvError> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers()?.clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(CsvError::Header {
            found: header.iter().collect::<Vec<_>>().join(","),
        });
    }
    let rows = r.deserialize().collect::<Result<Vec<CsvRow>, _>>()?;
    if rows.is_empty() {
        return Err(CsvError::Empty);
    }
    Ok(rows)
}

/// Mean and population standard deviation.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: String,
    pub seeds: Vec<u64>,
    /// Regret after the last round, in seed order.
    pub final_regret: Vec<f64>,
    pub final_regret_mean: f64,
    pub final_regret_std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub rounds: u32,
    pub methods: Vec<MethodSummary>,
    pub wall_time_s: f64,
}

/// Final-round regret per method, from the rows of complete runs. Methods
/// keep their first-appearance order.
pub fn summarize(rows: &[CsvRow]) -> Vec<MethodSummary> {
    let mut order: Vec<&str> = Vec::new();
    let mut last: BTreeMap<(&str, u64), &CsvRow> = BTreeMap::new();
    for row in rows {
        if !order.contains(&row.method.as_str()) {
            order.push(&row.method);
        }
        let slot = last.entry((row.method.as_str(), row.seed)).or_insert(row);
        if row.round > slot.round {
            *slot = row;
        }
    }
    order
        .into_iter()
        .map(|method| {
            let mut seeds = Vec::new();
            let mut final_regret = Vec::new();
            for row in rows.iter().filter(|r| r.method == method) {
                if !seeds.contains(&row.seed) {
                    seeds.push(row.seed);
                    final_regret.push(last[&(method, row.seed)].simple_regret);
                }
            }
            let (mean, std) = mean_std(&final_regret);
            MethodSummary {
                method: method.to_string(),
                seeds,
                final_regret,
                final_regret_mean: mean,
                final_regret_std: std,
            }
        })
        .collect()
}
