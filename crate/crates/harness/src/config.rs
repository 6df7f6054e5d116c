use std::path::{Path, PathBuf};

use fllr_core::localkernel::KernelSpec;
use fllr_core::tuning::{MethodPlan, TuningGrid};
use serde::{Deserialize, Serialize};

use crate::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    #[value(name = "fllr")]
    Fllr,
    #[value(name = "fllr_r")]
    FllrR,
    #[value(name = "nw")]
    Nw,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Fllr, Method::FllrR, Method::Nw];

    pub fn name(self) -> &'static str {
        match self {
            Method::Fllr => "fllr",
            Method::FllrR => "fllr_r",
            Method::Nw => "nw",
        }
    }

    pub fn parse(s: &str) -> Option<Method> {
        Method::ALL.into_iter().find(|m| m.name() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum KernelChoice {
    #[default]
    Box,
    Triangle,
}

impl KernelChoice {
    pub fn spec(self) -> KernelSpec {
        match self {
            KernelChoice::Box => KernelSpec::BOX,
            KernelChoice::Triangle => KernelSpec::TRIANGLE,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum BasisChoice {
    /// Estimated functional principal components of the training curves.
    #[default]
    Fpca,
    /// Trigonometric basis on the grid interval.
    Fourier,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ResponseTransform {
    #[default]
    None,
    /// Responses in the file are logs; exponentiate after reading.
    Exp,
}

/// Everything that determines a run. Every field has a default, so a
/// config file only lists what it changes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub methods: Vec<Method>,
    pub replicates: usize,
    pub a_levels: Vec<f64>,
    pub n_train: usize,
    pub n_test: usize,
    pub n_basis: usize,
    pub grid_points: usize,
    pub sigma_t: f64,
    pub sigma_e: f64,
    pub split_ratio: f64,
    pub j_candidates: Vec<usize>,
    pub k_candidates: Option<Vec<usize>>,
    pub k_count: usize,
    pub max_neighbor_frac: f64,
    pub bootstrap: usize,
    pub kernel: KernelChoice,
    pub basis: BasisChoice,
    /// Bandwidth candidates of the per-curve presmoother.
    pub presmooth_candidates: usize,
    pub response_transform: ResponseTransform,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            methods: Method::ALL.to_vec(),
            replicates: 50,
            a_levels: vec![0.3, 0.5, 0.7],
            n_train: 100,
            n_test: 50,
            n_basis: 201,
            grid_points: 51,
            sigma_t: 0.2,
            sigma_e: 0.5,
            split_ratio: 2.0 / 3.0,
            j_candidates: (1..=15).collect(),
            k_candidates: None,
            k_count: 10,
            max_neighbor_frac: 0.7,
            bootstrap: 50,
            kernel: KernelChoice::Box,
            basis: BasisChoice::Fpca,
            presmooth_candidates: 20,
            response_transform: ResponseTransform::None,
            seed: 20240601,
            out: None,
            threads: None,
        }
    }
}

impl ExperimentConfig {
    /// CI profile: fewer replicates and basis sizes.
    pub fn fast() -> Self {
        Self {
            replicates: 20,
            j_candidates: (1..=8).collect(),
            ..Self::default()
        }
    }

    pub fn from_toml_file(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Io(path.to_path_buf(), e.to_string()))?;
        toml::from_str(&text).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: &str| Err(HarnessError::Config(m.to_string()));
        if self.methods.is_empty() {
            return bad("at least one method is required");
        }
        if self.replicates == 0 {
            return bad("replicates must be at least 1");
        }
        if self.a_levels.iter().any(|a| !(0.0..=1.0).contains(a)) {
            return bad("a levels must lie in [0, 1]");
        }
        if !(self.split_ratio > 0.0 && self.split_ratio < 1.0) {
            return bad("split ratio must lie in (0, 1)");
        }
        if self.j_candidates.is_empty() || self.j_candidates.contains(&0) {
            return bad("J candidates must be positive");
        }
        if self.bootstrap == 0 {
            return bad("bootstrap replicates must be at least 1");
        }
        Ok(())
    }

    pub fn plan(&self) -> MethodPlan {
        MethodPlan {
            fllr: self.methods.contains(&Method::Fllr),
            fllr_r: self.methods.contains(&Method::FllrR),
            nw: self.methods.contains(&Method::Nw),
        }
    }

    pub fn tuning_grid(&self, seed: u64) -> TuningGrid {
        TuningGrid {
            j_candidates: self.j_candidates.clone(),
            k_candidates: self.k_candidates.clone(),
            max_neighbor_fraction: self.max_neighbor_frac,
            bootstrap_reps: self.bootstrap,
            k_count: self.k_count,
            seed,
        }
    }

    pub fn j_max(&self) -> usize {
        self.j_candidates.iter().copied().max().unwrap_or(1)
    }
}
