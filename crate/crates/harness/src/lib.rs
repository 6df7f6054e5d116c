//! Experiment runner: simulation studies, dataset evaluation and exports.

use std::path::PathBuf;

use fllr_core::FllrError;

pub mod config;
pub mod dataset;
pub mod experiment;
pub mod export;
pub mod selftest;

pub use config::{ExperimentConfig, Method};
pub use experiment::{run_dataset, run_simulation, RunResult};

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error(transparent)]
    Core(#[from] FllrError),
    #[error("{}: {}", .0.display(), .1)]
    Io(PathBuf, String),
    #[error("{}: row {row}, column {column}: {message}", path.display())]
    Parse {
        path: PathBuf,
        row: usize,
        column: String,
        message: String,
    },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{failed} of {total} replicates failed (more than 10%)")]
    TooManyFailures {
        failed: usize,
        total: usize,
        result: Box<RunResult>,
    },
}
