//! Global tuning by nested leave-one-out cross-validation: neighbor count for
//! the local linear fit, wild-bootstrap choice of the derivative bandwidth,
//! and neighbor count and basis size for the penalized fit.

use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;

use crate::error::{FllrError, Result};
use crate::estimators::{fllr_fit, nw_fit, LocalFit};
use crate::funcspace::{l2_distance_values, raw_projections, BasisSystem, CurveSet, ScoreMatrix};
use crate::linalg::Matrix;
use crate::localkernel::{local_weights_from_distances, KernelSpec};
use crate::ridgepen::{fit_ridge, RidgePrediction};
use crate::rng;
use crate::scalar::Real;

/// Larger Mammen support point, `(√5 + 1)/2`.
pub const MAMMEN_HIGH: f64 = 1.618_033_988_749_895;
/// Smaller Mammen support point, `−(√5 − 1)/2`.
pub const MAMMEN_LOW: f64 = -0.618_033_988_749_894_9;
/// Probability of the smaller point, `(√5 + 1)/(2√5)`.
pub const MAMMEN_P_LOW: f64 = 0.723_606_797_749_979;

/// Two-point multipliers with mean 0 and second and third moments 1.
pub fn mammen_draws<T: Real>(count: usize, seed: u64) -> Vec<T> {
    let mut r = rng::stream(seed, &[]);
    (0..count)
        .map(|_| {
            if r.random::<f64>() < MAMMEN_P_LOW {
                T::lit(MAMMEN_LOW)
            } else {
                T::lit(MAMMEN_HIGH)
            }
        })
        .collect()
}

/// Seed of bootstrap replicate `b` (0-based).
pub fn bootstrap_seed(master: u64, b: usize) -> u64 {
    rng::derive_seed(master, &[b as u64])
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuningGrid {
    pub j_candidates: Vec<usize>,
    /// Explicit neighbor counts; `None` selects the default log-spaced grid.
    pub k_candidates: Option<Vec<usize>>,
    pub max_neighbor_fraction: f64,
    pub bootstrap_reps: usize,
    /// Size of the default neighbor grids.
    pub k_count: usize,
    pub seed: u64,
}

impl Default for TuningGrid {
    fn default() -> Self {
        Self {
            j_candidates: (1..=15).collect(),
            k_candidates: None,
            max_neighbor_fraction: 0.7,
            bootstrap_reps: 50,
            k_count: 10,
            seed: 0,
        }
    }
}

/// `count` log-spaced integers from `lo` to `hi`, deduplicated.
pub fn log_spaced(lo: usize, hi: usize, count: usize) -> Vec<usize> {
    if hi <= lo || count <= 1 {
        return vec![lo.min(hi).max(hi.min(lo))];
    }
    let ratio = (hi as f64 / lo as f64).ln() / (count - 1) as f64;
    let mut out: Vec<usize> = (0..count)
        .map(|i| ((lo as f64) * (ratio * i as f64).exp()).round() as usize)
        .map(|k| k.clamp(lo, hi))
        .collect();
    out.dedup();
    out
}

/// Tuning grid checked against a training size.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedGrid {
    pub j_candidates: Vec<usize>,
    pub k_candidates: Vec<usize>,
    pub nw_k_candidates: Vec<usize>,
    pub bootstrap_reps: usize,
    pub seed: u64,
}

impl TuningGrid {
    /// Largest admissible neighbor count, `⌊fraction (n − 1)⌋`.
    pub fn k_cap(&self, n: usize) -> usize {
        (self.max_neighbor_fraction * (n.saturating_sub(1)) as f64 + 1e-9).floor() as usize
    }

    pub fn resolve(&self, n: usize) -> Result<ResolvedGrid> {
        if !(self.max_neighbor_fraction > 0.0 && self.max_neighbor_fraction <= 1.0) {
            return Err(FllrError::InvalidArgument(format!(
                "max_neighbor_fraction must lie in (0, 1], got {}",
                self.max_neighbor_fraction
            )));
        }
        let mut js = self.j_candidates.clone();
        js.sort_unstable();
        js.dedup();
        if js.is_empty() || js[0] == 0 {
            return Err(FllrError::InvalidArgument("J candidates must be positive and nonempty".into()));
        }
        if self.bootstrap_reps == 0 {
            return Err(FllrError::InvalidArgument("at least one bootstrap replicate is needed".into()));
        }
        let cap = self.k_cap(n);
        let lo = js[js.len() - 1] + 2;
        if cap < lo {
            return Err(FllrError::InvalidArgument(format!(
                "neighbor cap {cap} is below max(J) + 2 = {lo} for n = {n}"
            )));
        }
        let ks = match &self.k_candidates {
            Some(ks) => {
                let mut ks = ks.clone();
                ks.sort_unstable();
                ks.dedup();
                if let Some(bad) = ks.iter().find(|&&k| k < lo || k > cap) {
                    return Err(FllrError::InvalidArgument(format!(
                        "neighbor count {bad} outside [{lo}, {cap}]"
                    )));
                }
                if ks.is_empty() {
                    return Err(FllrError::InvalidArgument("empty neighbor grid".into()));
                }
                ks
            }
            None => log_spaced(lo, cap, self.k_count),
        };
        let nw = match &self.k_candidates {
            Some(ks) => {
                let mut ks = ks.clone();
                ks.sort_unstable();
                ks.dedup();
                ks
            }
            None => log_spaced(1, cap, self.k_count),
        };
        Ok(ResolvedGrid {
            j_candidates: js,
            k_candidates: ks,
            nw_k_candidates: nw,
            bootstrap_reps: self.bootstrap_reps,
            seed: self.seed,
        })
    }
}

fn recoverable(e: &FllrError) -> bool {
    matches!(
        e,
        FllrError::TooFewActive { .. }
            | FllrError::SingularFit { .. }
            | FllrError::NoConvergence { .. }
            | FllrError::ZeroWeights
    )
}

/// Retries `f` with `k + 1, k + 2, …` up to `max_k` on recoverable failures.
/// Returns the result and whether escalation was needed.
fn escalate<R>(k: usize, max_k: usize, mut f: impl FnMut(usize) -> Result<R>) -> Result<(R, bool)> {
    let mut kk = k;
    loop {
        match f(kk) {
            Ok(r) => return Ok((r, kk != k)),
            Err(e) if recoverable(&e) && kk < max_k => kk += 1,
            Err(e) => return Err(e),
        }
    }
}

/// Training scores centered at one query, with distances and responses.
#[derive(Debug, Clone)]
pub struct LocalProblem<T> {
    pub scores: ScoreMatrix<T>,
    pub distances: Vec<T>,
    pub y: Vec<T>,
    pub kernel: KernelSpec,
}

impl<T: Real> LocalProblem<T> {
    fn max_k(&self) -> usize {
        self.distances.len()
    }

    pub fn fllr(&self, k: usize) -> Result<(LocalFit<T>, bool)> {
        escalate(k, self.max_k(), |k| {
            let w = local_weights_from_distances(&self.distances, k, self.kernel)?;
            fllr_fit(&self.scores, &self.y, &w)
        })
    }

    pub fn nw(&self, k: usize) -> Result<(T, bool)> {
        escalate(k, self.max_k(), |k| {
            let w = local_weights_from_distances(&self.distances, k, self.kernel)?;
            nw_fit(&self.y, &w)
        })
    }

    /// Penalized fit at `k_r` neighbors with the plug-in derivative from the
    /// unpenalized fit at `k_d`.
    pub fn ridge(&self, k_d: usize, k_r: usize, sigma_e: T) -> Result<(RidgePrediction<T>, bool)> {
        let (plugin, esc_d) = self.fllr(k_d)?;
        self.ridge_with_plugin(&plugin.beta, k_r, sigma_e).map(|(r, e)| (r, e || esc_d))
    }

    pub fn ridge_with_plugin(&self, beta: &[T], k_r: usize, sigma_e: T) -> Result<(RidgePrediction<T>, bool)> {
        escalate(k_r, self.max_k(), |k| {
            let w = local_weights_from_distances(&self.distances, k, self.kernel)?;
            fit_ridge(&self.scores, &w, &self.y, beta, sigma_e)
        })
    }

    pub fn with_responses(&self, y: Vec<T>) -> Self {
        Self {
            scores: self.scores.clone(),
            distances: self.distances.clone(),
            y,
            kernel: self.kernel,
        }
    }
}

/// Projections and pairwise distances of the training curves, computed once
/// and shared by every fold of every tuning step.
#[derive(Debug, Clone)]
pub struct TuningData<T> {
    pub y: Vec<T>,
    /// `⟨X_i, φ_j⟩`, `n × J_max`.
    pub raw: Matrix<T>,
    /// `‖X_i − X_l‖`, `n × n`.
    pub distances: Matrix<T>,
    pub kernel: KernelSpec,
}

impl<T: Real> TuningData<T> {
    /// `train` must carry responses.
    pub fn new(train: &CurveSet<T>, basis: &BasisSystem<T>, kernel: KernelSpec) -> Result<Self> {
        let y = train
            .responses()
            .ok_or_else(|| FllrError::InvalidArgument("training curves carry no responses".into()))?
            .to_vec();
        let raw = raw_projections(train, basis)?;
        let n = train.len();
        let grid = train.grid();
        let curves = train.curves();
        let rows: Vec<Vec<T>> = (0..n)
            .into_par_iter()
            .map(|i| {
                (0..n)
                    .map(|l| l2_distance_values(grid, curves[i].values(), curves[l].values()))
                    .collect()
            })
            .collect();
        Ok(Self {
            y,
            raw,
            distances: Matrix::from_row_major(n, n, rows.concat()),
            kernel,
        })
    }

    pub fn from_parts(y: Vec<T>, raw: Matrix<T>, distances: Matrix<T>, kernel: KernelSpec) -> Result<Self> {
        let n = y.len();
        if raw.rows() != n || distances.rows() != n || distances.cols() != n {
            return Err(FllrError::Shape("tuning data dimensions disagree".into()));
        }
        Ok(Self {
            y,
            raw,
            distances,
            kernel,
        })
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn j_max(&self) -> usize {
        self.raw.cols()
    }

    /// Problem at training curve `i` with `i` left out, first `j` scores.
    pub fn loo_problem(&self, i: usize, j: usize, y: &[T]) -> LocalProblem<T> {
        let n = self.n();
        let idx: Vec<usize> = (0..n).filter(|&l| l != i).collect();
        let center = self.raw.row(i);
        let scores = Matrix::from_fn(idx.len(), j, |r, c| self.raw[(idx[r], c)] - center[c]);
        LocalProblem {
            scores: ScoreMatrix::from_matrix(scores),
            distances: idx.iter().map(|&l| self.distances[(i, l)]).collect(),
            y: idx.iter().map(|&l| y[l]).collect(),
            kernel: self.kernel,
        }
    }

    /// Problem at a new curve with projections `center` and distances to the
    /// training curves, using the whole training set.
    pub fn query_problem(&self, center: &[T], distances: Vec<T>, j: usize) -> Result<LocalProblem<T>> {
        if distances.len() != self.n() || center.len() < j || j > self.j_max() {
            return Err(FllrError::Shape("query does not match training data".into()));
        }
        let scores = Matrix::from_fn(self.n(), j, |r, c| self.raw[(r, c)] - center[c]);
        Ok(LocalProblem {
            scores: ScoreMatrix::from_matrix(scores),
            distances,
            y: self.y.clone(),
            kernel: self.kernel,
        })
    }
}

/// Leave-one-out fits of the unpenalized local linear estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct LooResult<T> {
    /// Mean squared leave-one-out residual.
    pub score: T,
    pub residuals: Vec<T>,
    pub fitted: Vec<T>,
    pub derivatives: Vec<Vec<T>>,
    pub escalations: usize,
}

fn loocv_with_responses<T: Real>(data: &TuningData<T>, y: &[T], j: usize, k: usize) -> Result<LooResult<T>> {
    let fits: Vec<(LocalFit<T>, bool)> = (0..data.n())
        .into_par_iter()
        .map(|i| data.loo_problem(i, j, y).fllr(k))
        .collect::<Result<_>>()?;
    let fitted: Vec<T> = fits.iter().map(|(f, _)| f.m_hat).collect();
    let residuals: Vec<T> = y.iter().zip(&fitted).map(|(&v, &m)| v - m).collect();
    let score = residuals.iter().map(|&r| r * r).sum::<T>() / T::from_count(residuals.len());
    Ok(LooResult {
        score,
        residuals,
        fitted,
        escalations: fits.iter().filter(|(_, e)| *e).count(),
        derivatives: fits.into_iter().map(|(f, _)| f.beta).collect(),
    })
}

/// Leave-one-out cross-validation of the local linear fit with `j` scores and
/// `k` neighbors.
pub fn loocv_fllr<T: Real>(data: &TuningData<T>, j: usize, k: usize) -> Result<LooResult<T>> {
    if j == 0 || j > data.j_max() {
        return Err(FllrError::InvalidArgument(format!("J = {j} outside 1..={}", data.j_max())));
    }
    loocv_with_responses(data, &data.y, j, k)
}

/// Sample standard deviation (divisor `n − 1`) of leave-one-out residuals.
pub fn residual_sd<T: Real>(residuals: &[T]) -> T {
    let n = T::from_count(residuals.len());
    let mean = residuals.iter().copied().sum::<T>() / n;
    (residuals.iter().map(|&r| (r - mean) * (r - mean)).sum::<T>() / (n - T::one())).sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct HdSelection<T> {
    pub k_hd: usize,
    /// Bootstrap derivative-stability criterion per candidate.
    pub curve: BTreeMap<usize, T>,
    pub escalations: usize,
}

/// Derivative-bandwidth selection with explicit multipliers (`multipliers[b][i]`).
///
/// The bootstrap-averaged derivative is linear in the responses, so it is
/// computed as one fit on `mean_b Y^b`.
pub fn select_hd_with_multipliers<T: Real>(
    data: &TuningData<T>,
    j: usize,
    base: &LooResult<T>,
    candidates: &[usize],
    multipliers: &[Vec<T>],
) -> Result<HdSelection<T>> {
    let n = data.n();
    if multipliers.is_empty() || multipliers.iter().any(|m| m.len() != n) {
        return Err(FllrError::Shape("bootstrap multipliers do not match the sample".into()));
    }
    if candidates.is_empty() {
        return Err(FllrError::InvalidArgument("no derivative bandwidth candidates".into()));
    }
    let reps = T::from_count(multipliers.len());
    let y_bar: Vec<T> = (0..n)
        .map(|i| {
            let v_bar = multipliers.iter().map(|m| m[i]).sum::<T>() / reps;
            base.fitted[i] + base.residuals[i] * v_bar
        })
        .collect();
    let mut curve = BTreeMap::new();
    let mut escalations = 0;
    for &k in candidates {
        let boot = loocv_with_responses(data, &y_bar, j, k)?;
        escalations += boot.escalations;
        let crit = base
            .derivatives
            .iter()
            .zip(&boot.derivatives)
            .map(|(a, b)| a.iter().zip(b).map(|(&x, &y)| (x - y) * (x - y)).sum::<T>())
            .sum::<T>()
            / T::from_count(n);
        curve.insert(k, crit);
    }
    Ok(HdSelection {
        k_hd: argmin(&curve).expect("nonempty"),
        curve,
        escalations,
    })
}

/// Wild-bootstrap choice of the derivative neighbor count, with Mammen
/// multipliers drawn from `bootstrap_seed(seed, b)`.
pub fn select_hd<T: Real>(
    data: &TuningData<T>,
    j: usize,
    base: &LooResult<T>,
    candidates: &[usize],
    reps: usize,
    seed: u64,
) -> Result<HdSelection<T>> {
    let multipliers: Vec<Vec<T>> = (0..reps).map(|b| mammen_draws(data.n(), bootstrap_seed(seed, b))).collect();
    select_hd_with_multipliers(data, j, base, candidates, &multipliers)
}

/// First key attaining the smallest value.
pub fn argmin<K: Copy + Ord, T: Real>(curve: &BTreeMap<K, T>) -> Option<K> {
    let mut best: Option<(K, T)> = None;
    for (&k, &v) in curve {
        match best {
            Some((_, bv)) if !(v < bv) => {}
            _ if v.is_nan() => {}
            _ => best = Some((k, v)),
        }
    }
    best.map(|(k, _)| k)
}

/// Leave-one-out penalized fits: per-fold plug-in derivatives are the
/// leave-one-out derivatives in `plugin`.
#[derive(Debug, Clone, PartialEq)]
pub struct RidgeLoo<T> {
    pub score: T,
    pub fitted: Vec<T>,
    pub escalations: usize,
}

pub fn loocv_ridge<T: Real>(data: &TuningData<T>, j: usize, plugin: &LooResult<T>, k: usize, sigma_e: T) -> Result<RidgeLoo<T>> {
    let fits: Vec<(RidgePrediction<T>, bool)> = (0..data.n())
        .into_par_iter()
        .map(|i| data.loo_problem(i, j, &data.y).ridge_with_plugin(&plugin.derivatives[i], k, sigma_e))
        .collect::<Result<_>>()?;
    let fitted: Vec<T> = fits.iter().map(|(f, _)| f.fit.m_hat).collect();
    let score = data
        .y
        .iter()
        .zip(&fitted)
        .map(|(&v, &m)| (v - m) * (v - m))
        .sum::<T>()
        / T::from_count(data.n());
    Ok(RidgeLoo {
        score,
        fitted,
        escalations: fits.iter().filter(|(_, e)| *e).count(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MethodPlan {
    pub fllr: bool,
    pub fllr_r: bool,
    pub nw: bool,
}

impl Default for MethodPlan {
    fn default() -> Self {
        Self {
            fllr: true,
            fllr_r: true,
            nw: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FllrChoice<T> {
    pub j: usize,
    pub k: usize,
    pub score: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RidgeChoice<T> {
    pub j_star: usize,
    pub k_hll: usize,
    pub k_hd: usize,
    pub k_hr: usize,
    pub sigma_e: T,
    pub score: T,
    /// Bootstrap criterion at `J*`.
    pub bootstrap_curve: BTreeMap<usize, T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NwChoice<T> {
    pub k: usize,
    pub score: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuningReport<T> {
    pub fllr: Option<FllrChoice<T>>,
    pub fllr_r: Option<RidgeChoice<T>>,
    pub nw: Option<NwChoice<T>>,
    /// Unpenalized leave-one-out scores per `(J, k)`.
    pub fllr_curve: BTreeMap<(usize, usize), T>,
    /// Penalized leave-one-out scores per `(J, k)`.
    pub cv_curve: BTreeMap<(usize, usize), T>,
    pub nw_curve: BTreeMap<usize, T>,
    /// Fits that needed more neighbors than requested.
    pub escalations: usize,
}

struct PerJ<T> {
    j: usize,
    k_hll: usize,
    curve: Vec<(usize, T)>,
    ridge: Option<(usize, usize, T, Vec<(usize, T)>, BTreeMap<usize, T>)>,
    escalations: usize,
}

fn tune_j<T: Real>(data: &TuningData<T>, grid: &ResolvedGrid, j: usize, ridge: bool) -> Result<PerJ<T>> {
    let mut escalations = 0;
    let mut loos = Vec::with_capacity(grid.k_candidates.len());
    let mut curve = Vec::with_capacity(grid.k_candidates.len());
    for &k in &grid.k_candidates {
        let loo = loocv_fllr(data, j, k)?;
        escalations += loo.escalations;
        curve.push((k, loo.score));
        loos.push(loo);
    }
    let map: BTreeMap<usize, T> = curve.iter().copied().collect();
    let k_hll = argmin(&map).expect("nonempty grid");
    let mut ridge_part = None;
    if ridge {
        let pos = |k: usize| grid.k_candidates.iter().position(|&c| c == k).expect("candidate");
        let base = &loos[pos(k_hll)];
        let sigma_e = residual_sd(&base.residuals);
        let hd = select_hd(data, j, base, &grid.k_candidates, grid.bootstrap_reps, grid.seed)?;
        escalations += hd.escalations;
        let plugin = &loos[pos(hd.k_hd)];
        let mut rcurve = Vec::with_capacity(grid.k_candidates.len());
        for &k in &grid.k_candidates {
            let r = loocv_ridge(data, j, plugin, k, sigma_e)?;
            escalations += r.escalations;
            rcurve.push((k, r.score));
        }
        ridge_part = Some((hd.k_hd, k_hll, sigma_e, rcurve, hd.curve));
    }
    Ok(PerJ {
        j,
        k_hll,
        curve,
        ridge: ridge_part,
        escalations,
    })
}

/// Runs the tuning steps needed for the requested methods. Ties go to the
/// smallest `J`, then the smallest `k`.
pub fn select_all<T: Real>(data: &TuningData<T>, grid: &ResolvedGrid, plan: MethodPlan) -> Result<TuningReport<T>> {
    if let Some(&j) = grid.j_candidates.iter().find(|&&j| j > data.j_max()) {
        return Err(FllrError::RankExceeded {
            requested: j,
            rank: data.j_max(),
        });
    }
    let mut fllr_curve = BTreeMap::new();
    let mut cv_curve = BTreeMap::new();
    let mut nw_curve = BTreeMap::new();
    let mut escalations = 0;
    let mut fllr = None;
    let mut fllr_r = None;

    if plan.fllr || plan.fllr_r {
        let per_j: Vec<PerJ<T>> = grid
            .j_candidates
            .par_iter()
            .map(|&j| tune_j(data, grid, j, plan.fllr_r))
            .collect::<Result<_>>()?;
        for pj in &per_j {
            escalations += pj.escalations;
            for &(k, s) in &pj.curve {
                fllr_curve.insert((pj.j, k), s);
            }
            if let Some((_, _, _, rcurve, _)) = &pj.ridge {
                for &(k, s) in rcurve {
                    cv_curve.insert((pj.j, k), s);
                }
            }
        }
        if plan.fllr {
            let (j, k) = argmin(&fllr_curve).expect("nonempty grid");
            fllr = Some(FllrChoice {
                j,
                k,
                score: fllr_curve[&(j, k)],
            });
        }
        if plan.fllr_r {
            let (j, k) = argmin(&cv_curve).expect("nonempty grid");
            let pj = per_j.iter().find(|p| p.j == j).expect("tuned J");
            let (k_hd, k_hll, sigma_e, _, boot) = pj.ridge.clone().expect("ridge tuned");
            debug_assert_eq!(pj.k_hll, k_hll);
            fllr_r = Some(RidgeChoice {
                j_star: j,
                k_hll,
                k_hd,
                k_hr: k,
                sigma_e,
                score: cv_curve[&(j, k)],
                bootstrap_curve: boot,
            });
        }
    }

    let mut nw = None;
    if plan.nw {
        let ks = &grid.nw_k_candidates;
        let scores: Vec<(T, usize)> = ks
            .par_iter()
            .map(|&k| {
                let fits: Vec<(T, bool)> = (0..data.n())
                    .map(|i| data.loo_problem(i, 0, &data.y).nw(k))
                    .collect::<Result<_>>()?;
                let sse = fits
                    .iter()
                    .zip(&data.y)
                    .map(|((m, _), &v)| (v - *m) * (v - *m))
                    .sum::<T>();
                Ok((sse / T::from_count(data.n()), fits.iter().filter(|(_, e)| *e).count()))
            })
            .collect::<Result<_>>()?;
        for (&k, &(s, e)) in ks.iter().zip(&scores) {
            nw_curve.insert(k, s);
            escalations += e;
        }
        let k = argmin(&nw_curve).expect("nonempty grid");
        nw = Some(NwChoice { k, score: nw_curve[&k] });
    }

    Ok(TuningReport {
        fllr,
        fllr_r,
        nw,
        fllr_curve,
        cv_curve,
        nw_curve,
        escalations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mammen_support_and_determinism() {
        let d: Vec<f64> = mammen_draws(1000, 5);
        assert!(d.iter().all(|&v| (v - MAMMEN_LOW).abs() < 1e-10 || (v - MAMMEN_HIGH).abs() < 1e-10));
        assert_eq!(d, mammen_draws::<f64>(1000, 5));
        let s5 = 5f64.sqrt();
        assert!((MAMMEN_HIGH - (s5 + 1.0) / 2.0).abs() < 1e-15);
        assert!((MAMMEN_LOW + (s5 - 1.0) / 2.0).abs() < 1e-15);
        assert!((MAMMEN_P_LOW - (s5 + 1.0) / (2.0 * s5)).abs() < 1e-15);
    }

    #[test]
    fn default_grid_respects_bounds() {
        let g = TuningGrid::default().resolve(100).unwrap();
        assert_eq!(g.k_candidates[0], 17);
        assert_eq!(*g.k_candidates.last().unwrap(), 69);
        assert!(g.k_candidates.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(g.nw_k_candidates[0], 1);
        let tiny = TuningGrid::default().resolve(10);
        assert!(tiny.is_err());
        let bad = TuningGrid {
            k_candidates: Some(vec![3, 80]),
            j_candidates: vec![1],
            ..Default::default()
        };
        assert!(bad.resolve(100).is_err());
    }

    #[test]
    fn argmin_takes_first_tie() {
        let m: BTreeMap<usize, f64> = [(3, 1.0), (5, 0.5), (9, 0.5)].into_iter().collect();
        assert_eq!(argmin(&m), Some(5));
    }

    #[test]
    fn residual_sd_matches_formula() {
        let r = [1.0, 2.0, 4.0];
        let mean = 7.0 / 3.0;
        let v = r.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / 2.0;
        assert!((residual_sd(&r) - v.sqrt()).abs() < 1e-15);
    }
}
