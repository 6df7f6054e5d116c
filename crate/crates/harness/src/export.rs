//! Output files. Column order is fixed by the row structs:
//!
//! - `per_replicate.csv`: level, replicate, method, status, reason, er, j_star,
//!   k_hll, k_hd, k_hr, escalations, mse_gap, kkt_ratio
//! - `summary.csv`: level, method, n_ok, n_failed, mean_er, median_er, mean_k,
//!   median_k
//! - `plot_long.csv`: level, method, replicate, er (successful rows only)
//! - `timings.csv`: level, replicate, runtime_ms
//!
//! Everything except `timings.csv` is a deterministic function of the
//! configuration.

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::config::Method;
use crate::experiment::{RunResult, SummaryRow};
use crate::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotRow {
    pub level: String,
    pub method: Method,
    pub replicate: usize,
    pub er: f64,
}

fn io_err(path: &Path, e: impl ToString) -> HarnessError {
    HarnessError::Io(path.to_path_buf(), e.to_string())
}

fn write_csv<R: Serialize>(path: &Path, rows: &[R]) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    for r in rows {
        w.serialize(r).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

fn write_json<R: Serialize>(path: &Path, rows: &[R]) -> Result<(), HarnessError> {
    let mut text = serde_json::to_string_pretty(rows).map_err(|e| io_err(path, e))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| io_err(path, e))
}

pub fn plot_rows(result: &RunResult) -> Vec<PlotRow> {
    result
        .per_replicate
        .iter()
        .filter_map(|r| {
            r.er.map(|er| PlotRow {
                level: r.level.clone(),
                method: r.method,
                replicate: r.replicate,
                er,
            })
        })
        .collect()
}

/// Writes the requested formats into `dir`, creating it if needed. Returns
/// the written paths.
pub fn export(result: &RunResult, dir: &Path, formats: &[Format]) -> Result<Vec<PathBuf>, HarnessError> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let mut written = Vec::new();
    for f in formats {
        match f {
            Format::Csv => {
                let path = dir.join("per_replicate.csv");
                write_csv(&path, &result.per_replicate)?;
                written.push(path);
                let path = dir.join("summary.csv");
                write_csv(&path, &result.summary)?;
                written.push(path);
                let path = dir.join("plot_long.csv");
                write_csv(&path, &plot_rows(result))?;
                written.push(path);
                let path = dir.join("timings.csv");
                write_csv(&path, &result.timings)?;
                written.push(path);
            }
            Format::Json => {
                let path = dir.join("per_replicate.json");
                write_json(&path, &result.per_replicate)?;
                written.push(path);
                let path = dir.join("summary.json");
                write_json(&path, &result.summary)?;
                written.push(path);
            }
        }
    }
    Ok(written)
}

fn read_csv<R: DeserializeOwned>(path: &Path) -> Result<Vec<R>, HarnessError> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| io_err(path, e))?;
    rdr.deserialize()
        .enumerate()
        .map(|(i, r)| {
            r.map_err(|e| HarnessError::Parse {
                path: path.to_path_buf(),
                row: i + 1,
                column: "-".into(),
                message: e.to_string(),
            })
        })
        .collect()
}

pub fn read_summary_csv(path: &Path) -> Result<Vec<SummaryRow>, HarnessError> {
    read_csv(path)
}

pub fn read_summary_json(path: &Path) -> Result<Vec<SummaryRow>, HarnessError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    serde_json::from_str(&text).map_err(|e| HarnessError::Parse {
        path: path.to_path_buf(),
        row: e.line(),
        column: e.column().to_string(),
        message: e.to_string(),
    })
}

pub fn read_per_replicate_csv(path: &Path) -> Result<Vec<crate::experiment::ReplicateRow>, HarnessError> {
    read_csv(path)
}

pub const PER_REPLICATE_SCHEMA: &str = include_str!("../schema/per_replicate.schema.json");
pub const SUMMARY_SCHEMA: &str = include_str!("../schema/summary.schema.json");
