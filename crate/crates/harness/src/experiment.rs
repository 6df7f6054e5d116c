use std::path::Path;
use std::time::Instant;

use fllr_core::funcspace::{
    estimate_fpca_basis, fourier_basis, presmooth, raw_projections, BasisSystem, CurveSet, SmoothingBandwidth,
};
use fllr_core::localkernel::distances_to;
use fllr_core::rng::{derive_seed, stream};
use fllr_core::simgen::{error_ratio, generate, SimulationConfig};
use fllr_core::tuning::{select_all, TuningData, TuningReport};
use fllr_core::FllrError;
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{BasisChoice, ExperimentConfig, Method};
use crate::dataset::{read_dataset, Dataset};
use crate::HarnessError;

/// Stream tags under the master seed.
const TAG_DATA: u64 = 0;
const TAG_TUNING: u64 = 1;
const TAG_SPLIT: u64 = 2;

/// One method's test-set result on one split.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodOutcome {
    pub method: Method,
    pub er: f64,
    pub predictions: Vec<f64>,
    pub j_star: Option<usize>,
    pub k_hll: Option<usize>,
    pub k_hd: Option<usize>,
    pub k_hr: Option<usize>,
    /// Largest `est_mse(b*) − est_mse(unpenalized)` over the test points.
    pub mse_gap: Option<f64>,
    /// Largest KKT residual relative to its scale over the test points.
    pub kkt_ratio: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct SplitOutcome {
    pub outcomes: Vec<MethodOutcome>,
    pub report: TuningReport<f64>,
    pub escalations: usize,
}

fn basis_for(train: &CurveSet<f64>, config: &ExperimentConfig) -> Result<BasisSystem<f64>, FllrError> {
    match config.basis {
        BasisChoice::Fpca => estimate_fpca_basis(train, config.j_max()),
        BasisChoice::Fourier => fourier_basis(train.grid().clone(), config.j_max()),
    }
}

/// Presmooth, estimate the basis, tune on the training curves, then predict
/// the test curves with each requested method.
pub fn evaluate_split(
    train_raw: &CurveSet<f64>,
    test_raw: &CurveSet<f64>,
    config: &ExperimentConfig,
    tuning_seed: u64,
) -> Result<SplitOutcome, FllrError> {
    let rule = SmoothingBandwidth::LeaveOneOut {
        candidates: config.presmooth_candidates,
    };
    let train = presmooth(train_raw, &rule)?.curves;
    let test = presmooth(test_raw, &rule)?.curves;
    let y_test = test
        .responses()
        .ok_or_else(|| FllrError::InvalidArgument("test curves carry no responses".into()))?
        .to_vec();
    let basis = basis_for(&train, config)?;
    let data = TuningData::new(&train, &basis, config.kernel.spec())?;
    let grid = config.tuning_grid(tuning_seed).resolve(train.len())?;
    let report = select_all(&data, &grid, config.plan())?;

    let centers = raw_projections(&test, &basis)?;
    let distances: Vec<Vec<f64>> = test
        .curves()
        .iter()
        .map(|c| distances_to(&train, c))
        .collect::<Result<_, _>>()?;

    struct Point {
        fllr: Option<f64>,
        ridge: Option<(f64, f64, f64)>,
        nw: Option<f64>,
        escalations: usize,
    }
    let points: Vec<Point> = (0..test.len())
        .into_par_iter()
        .map(|t| -> Result<Point, FllrError> {
            let center = centers.row(t);
            let mut esc = 0;
            let fllr = match &report.fllr {
                Some(c) => {
                    let (fit, e) = data.query_problem(center, distances[t].clone(), c.j)?.fllr(c.k)?;
                    esc += usize::from(e);
                    Some(fit.m_hat)
                }
                None => None,
            };
            let ridge = match &report.fllr_r {
                Some(c) => {
                    let p = data.query_problem(center, distances[t].clone(), c.j_star)?;
                    let (r, e) = p.ridge(c.k_hd, c.k_hr, c.sigma_e)?;
                    esc += usize::from(e);
                    let ratio = if r.kkt_scale > 0.0 { r.kkt_residual / r.kkt_scale } else { 0.0 };
                    Some((r.fit.m_hat, r.fit.est_mse - r.unpenalized_mse, ratio))
                }
                None => None,
            };
            let nw = match &report.nw {
                Some(c) => {
                    let (m, e) = data.query_problem(center, distances[t].clone(), 0)?.nw(c.k)?;
                    esc += usize::from(e);
                    Some(m)
                }
                None => None,
            };
            Ok(Point {
                fllr,
                ridge,
                nw,
                escalations: esc,
            })
        })
        .collect::<Result<_, _>>()?;

    let mut outcomes = Vec::new();
    for method in Method::ALL.into_iter().filter(|m| config.methods.contains(m)) {
        let outcome = match method {
            Method::Fllr => {
                let c = report.fllr.as_ref().expect("planned");
                let preds: Vec<f64> = points.iter().map(|p| p.fllr.expect("planned")).collect();
                MethodOutcome {
                    method,
                    er: error_ratio(&y_test, &preds)?,
                    predictions: preds,
                    j_star: Some(c.j),
                    k_hll: Some(c.k),
                    k_hd: None,
                    k_hr: Some(c.k),
                    mse_gap: None,
                    kkt_ratio: None,
                }
            }
            Method::FllrR => {
                let c = report.fllr_r.as_ref().expect("planned");
                let preds: Vec<f64> = points.iter().map(|p| p.ridge.expect("planned").0).collect();
                let gap = points.iter().map(|p| p.ridge.expect("planned").1).fold(f64::NEG_INFINITY, f64::max);
                let kkt = points.iter().map(|p| p.ridge.expect("planned").2).fold(0.0, f64::max);
                MethodOutcome {
                    method,
                    er: error_ratio(&y_test, &preds)?,
                    predictions: preds,
                    j_star: Some(c.j_star),
                    k_hll: Some(c.k_hll),
                    k_hd: Some(c.k_hd),
                    k_hr: Some(c.k_hr),
                    mse_gap: Some(gap),
                    kkt_ratio: Some(kkt),
                }
            }
            Method::Nw => {
                let c = report.nw.as_ref().expect("planned");
                let preds: Vec<f64> = points.iter().map(|p| p.nw.expect("planned")).collect();
                MethodOutcome {
                    method,
                    er: error_ratio(&y_test, &preds)?,
                    predictions: preds,
                    j_star: None,
                    k_hll: None,
                    k_hd: None,
                    k_hr: Some(c.k),
                    mse_gap: None,
                    kkt_ratio: None,
                }
            }
        };
        outcomes.push(outcome);
    }
    let escalations = report.escalations + points.iter().map(|p| p.escalations).sum::<usize>();
    Ok(SplitOutcome {
        outcomes,
        report,
        escalations,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateRow {
    pub level: String,
    pub replicate: usize,
    pub method: Method,
    pub status: String,
    pub reason: Option<String>,
    pub er: Option<f64>,
    pub j_star: Option<usize>,
    pub k_hll: Option<usize>,
    pub k_hd: Option<usize>,
    pub k_hr: Option<usize>,
    pub escalations: usize,
    pub mse_gap: Option<f64>,
    pub kkt_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRow {
    pub level: String,
    pub replicate: usize,
    pub runtime_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub level: String,
    pub method: Method,
    pub n_ok: usize,
    pub n_failed: usize,
    pub mean_er: Option<f64>,
    pub median_er: Option<f64>,
    pub mean_k: Option<f64>,
    pub median_k: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub per_replicate: Vec<ReplicateRow>,
    pub summary: Vec<SummaryRow>,
    pub timings: Vec<TimingRow>,
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[m] } else { (v[m - 1] + v[m]) / 2.0 })
}

fn mean(values: &[f64]) -> Option<f64> {
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}

/// Summary rows recomputed from replicate rows, grouped by level (first
/// appearance order) and method. `k` is the regression neighbor count.
pub fn summarize(rows: &[ReplicateRow]) -> Vec<SummaryRow> {
    let mut levels: Vec<&str> = Vec::new();
    for r in rows {
        if !levels.contains(&r.level.as_str()) {
            levels.push(&r.level);
        }
    }
    let mut out = Vec::new();
    for level in levels {
        for method in Method::ALL {
            let group: Vec<&ReplicateRow> = rows.iter().filter(|r| r.level == level && r.method == method).collect();
            if group.is_empty() {
                continue;
            }
            let ok: Vec<&&ReplicateRow> = group.iter().filter(|r| r.status == "ok").collect();
            let ers: Vec<f64> = ok.iter().filter_map(|r| r.er).collect();
            let ks: Vec<f64> = ok.iter().filter_map(|r| r.k_hr.map(|k| k as f64)).collect();
            out.push(SummaryRow {
                level: level.to_string(),
                method,
                n_ok: ok.len(),
                n_failed: group.len() - ok.len(),
                mean_er: mean(&ers),
                median_er: median(&ers),
                mean_k: mean(&ks),
                median_k: median(&ks),
            });
        }
    }
    out
}

fn rows_for(level: &str, replicate: usize, methods: &[Method], outcome: &Result<SplitOutcome, FllrError>) -> Vec<ReplicateRow> {
    let ordered = Method::ALL.into_iter().filter(|m| methods.contains(m));
    match outcome {
        Ok(split) => split
            .outcomes
            .iter()
            .map(|o| ReplicateRow {
                level: level.to_string(),
                replicate,
                method: o.method,
                status: "ok".into(),
                reason: None,
                er: Some(o.er),
                j_star: o.j_star,
                k_hll: o.k_hll,
                k_hd: o.k_hd,
                k_hr: o.k_hr,
                escalations: split.escalations,
                mse_gap: o.mse_gap,
                kkt_ratio: o.kkt_ratio,
            })
            .collect(),
        Err(e) => ordered
            .map(|method| ReplicateRow {
                level: level.to_string(),
                replicate,
                method,
                status: "failed".into(),
                reason: Some(e.to_string()),
                er: None,
                j_star: None,
                k_hll: None,
                k_hd: None,
                k_hr: None,
                escalations: 0,
                mse_gap: None,
                kkt_ratio: None,
            })
            .collect(),
    }
}

fn finish(jobs: Vec<(String, usize, Result<SplitOutcome, FllrError>, u64)>, methods: &[Method]) -> Result<RunResult, HarnessError> {
    let total = jobs.len();
    let mut per_replicate = Vec::new();
    let mut timings = Vec::new();
    let mut failed = 0;
    for (level, r, outcome, ms) in &jobs {
        if let Err(e) = outcome {
            log::warn!("level {level} replicate {r} failed: {e}");
            failed += 1;
        }
        per_replicate.extend(rows_for(level, *r, methods, outcome));
        timings.push(TimingRow {
            level: level.clone(),
            replicate: *r,
            runtime_ms: *ms,
        });
    }
    let result = RunResult {
        summary: summarize(&per_replicate),
        per_replicate,
        timings,
    };
    if failed * 10 > total {
        return Err(HarnessError::TooManyFailures {
            failed,
            total,
            result: Box::new(result),
        });
    }
    Ok(result)
}

pub fn level_label(a: f64) -> String {
    format!("{a}")
}

/// Simulation settings of replicate `r` at level `a`. The data seed depends
/// on the replicate only, so all levels share the same scores and noise.
pub fn simulation_config(config: &ExperimentConfig, a: f64, replicate: usize) -> SimulationConfig {
    SimulationConfig {
        n_train: config.n_train,
        n_test: config.n_test,
        n_basis: config.n_basis,
        grid_points: config.grid_points,
        sigma_t: config.sigma_t,
        sigma_e: config.sigma_e,
        a,
        seed: derive_seed(config.seed, &[TAG_DATA, replicate as u64]),
    }
}

pub fn tuning_seed(config: &ExperimentConfig, replicate: usize) -> u64 {
    derive_seed(config.seed, &[TAG_TUNING, replicate as u64])
}

pub fn run_simulation(config: &ExperimentConfig) -> Result<RunResult, HarnessError> {
    config.validate()?;
    if config.a_levels.is_empty() {
        return Err(HarnessError::Config("no a levels given".into()));
    }
    let jobs: Vec<(f64, usize)> = config
        .a_levels
        .iter()
        .flat_map(|&a| (0..config.replicates).map(move |r| (a, r)))
        .collect();
    let done = jobs
        .par_iter()
        .map(|&(a, r)| {
            let start = Instant::now();
            let outcome = generate::<f64>(&simulation_config(config, a, r)).and_then(|sample| {
                let (train, test) = sample.split();
                evaluate_split(&train, &test, config, tuning_seed(config, r))
            });
            let ms = start.elapsed().as_millis() as u64;
            log::info!("a = {a} replicate {r} done in {ms} ms");
            (level_label(a), r, outcome, ms)
        })
        .collect();
    finish(done, &config.methods)
}

/// Train/test indices of replicate `r`: the file's split column if present,
/// otherwise a seeded random split at `split_ratio`.
pub fn split_indices(dataset: &Dataset, config: &ExperimentConfig, replicate: usize) -> (Vec<usize>, Vec<usize>) {
    if let Some(split) = &dataset.split {
        let train = (0..split.len()).filter(|&i| split[i]).collect();
        let test = (0..split.len()).filter(|&i| !split[i]).collect();
        return (train, test);
    }
    let n = dataset.curves.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut stream(config.seed, &[TAG_SPLIT, replicate as u64]));
    let n_train = ((n as f64) * config.split_ratio).round() as usize;
    let n_train = n_train.clamp(1, n.saturating_sub(2).max(1));
    let mut train = idx[..n_train].to_vec();
    let mut test = idx[n_train..].to_vec();
    train.sort_unstable();
    test.sort_unstable();
    (train, test)
}

pub fn run_dataset(config: &ExperimentConfig, data: &Path, grid_header: &Path) -> Result<RunResult, HarnessError> {
    config.validate()?;
    let dataset = read_dataset(data, grid_header, config.response_transform)?;
    run_loaded_dataset(config, &dataset, &dataset_label(data))
}

pub fn dataset_label(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "dataset".into())
}

pub fn run_loaded_dataset(config: &ExperimentConfig, dataset: &Dataset, label: &str) -> Result<RunResult, HarnessError> {
    let y = dataset.curves.responses().expect("datasets carry responses");
    if y.iter().all(|&v| v == y[0]) {
        return Err(FllrError::ConstantResponse.into());
    }
    let replicates = if dataset.split.is_some() {
        if config.replicates > 1 {
            log::warn!("dataset has a fixed split column; running a single replicate");
        }
        1
    } else {
        config.replicates
    };
    let done = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let start = Instant::now();
            let (train, test) = split_indices(dataset, config, r);
            let outcome = evaluate_split(
                &dataset.curves.subset(&train),
                &dataset.curves.subset(&test),
                config,
                tuning_seed(config, r),
            );
            (label.to_string(), r, outcome, start.elapsed().as_millis() as u64)
        })
        .collect();
    finish(done, &config.methods)
}
