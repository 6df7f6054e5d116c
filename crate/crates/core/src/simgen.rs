//! Simulated functional regression data: curves expanded in a trigonometric
//! basis with uniform scores, a regression function sliding between linear
//! and nonlinear, observation noise on the grid, and closed-form derivatives.

use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{FllrError, Result};
use crate::funcspace::{fourier_value, CurveSet, Grid};
use crate::linalg::Matrix;
use crate::rng;
use crate::scalar::Real;

/// Number of basis directions in the linear part of the regression function.
pub const LINEAR_TERMS: usize = 30;
/// Number of basis directions in the nonlinear part.
pub const NONLINEAR_TERMS: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    pub n_train: usize,
    pub n_test: usize,
    pub n_basis: usize,
    pub grid_points: usize,
    pub sigma_t: f64,
    pub sigma_e: f64,
    /// Mixing weight between the linear (`a = 0`) and nonlinear (`a = 1`) parts.
    pub a: f64,
    pub seed: u64,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            n_train: 100,
            n_test: 50,
            n_basis: 201,
            grid_points: 51,
            sigma_t: 0.2,
            sigma_e: 0.5,
            a: 0.5,
            seed: 0,
        }
    }
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.a) {
            return Err(FllrError::InvalidArgument(format!("a must lie in [0, 1], got {}", self.a)));
        }
        if !(self.sigma_t >= 0.0 && self.sigma_e >= 0.0) {
            return Err(FllrError::InvalidArgument("noise levels must be nonnegative".into()));
        }
        if self.n_train + self.n_test == 0 || self.n_basis == 0 {
            return Err(FllrError::InvalidArgument("empty simulation".into()));
        }
        if self.grid_points < 3 {
            return Err(FllrError::InvalidGrid(format!("{} grid points", self.grid_points)));
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n_train + self.n_test
    }
}

/// `θ_j = 1/j`, 1-based.
pub fn theta(j: usize) -> f64 {
    1.0 / j as f64
}

#[derive(Debug, Clone)]
pub struct SimulatedSample<T> {
    pub config: SimulationConfig,
    pub curves_true: CurveSet<T>,
    /// Noisy curves, carrying the responses `Y`.
    pub curves_observed: CurveSet<T>,
    /// `U_ij`, `n × n_basis`.
    pub scores_u: Matrix<T>,
    pub y: Vec<T>,
    pub m_true: Vec<T>,
}

impl<T: Real> SimulatedSample<T> {
    /// Observed training curves (the first `n_train`) and test curves.
    pub fn split(&self) -> (CurveSet<T>, CurveSet<T>) {
        let n_train = self.config.n_train;
        let train: Vec<usize> = (0..n_train).collect();
        let test: Vec<usize> = (n_train..self.config.n()).collect();
        (self.curves_observed.subset(&train), self.curves_observed.subset(&test))
    }
}

/// Regression function in terms of the curve scores `s_j = √θ_j U_j`:
/// `(1 − a) Σ_{j≤30} s_j + a Σ_{j≤20} exp(−s_j²)`.
pub fn regression_function(s: &[f64], a: f64) -> f64 {
    let lin: f64 = s.iter().take(LINEAR_TERMS).sum();
    let nonlin: f64 = s.iter().take(NONLINEAR_TERMS).map(|x| (-x * x).exp()).sum();
    (1.0 - a) * lin + a * nonlin
}

/// Uniform on `[−√3, √3]`: zero mean, unit variance.
pub fn draw_scores(config: &SimulationConfig) -> Matrix<f64> {
    let mut r = rng::stream(config.seed, &[0]);
    let half = 3f64.sqrt();
    Matrix::from_fn(config.n(), config.n_basis, |_, _| r.random_range(-half..=half))
}

pub fn generate<T: Real>(config: &SimulationConfig) -> Result<SimulatedSample<T>> {
    config.validate()?;
    generate_from_scores(config, &draw_scores(config))
}

/// Generates a sample from given `U_ij`. Observation and regression noise use
/// their own substreams, so they do not depend on how `U` was obtained.
pub fn generate_from_scores<T: Real>(config: &SimulationConfig, u: &Matrix<f64>) -> Result<SimulatedSample<T>> {
    config.validate()?;
    let n = config.n();
    if u.rows() != n || u.cols() != config.n_basis {
        return Err(FllrError::Shape(format!(
            "score matrix is {}x{}, expected {n}x{}",
            u.rows(),
            u.cols(),
            config.n_basis
        )));
    }
    let p = config.grid_points;
    let grid64 = Grid::<f64>::equispaced(0.0, 1.0, p)?;
    let t = grid64.points();
    let phi = Matrix::from_fn(config.n_basis, p, |j, k| fourier_value(j + 1, t[k], 0.0, 1.0));
    let sqrt_theta: Vec<f64> = (1..=config.n_basis).map(|j| theta(j).sqrt()).collect();

    let mut obs_rng = rng::stream(config.seed, &[1]);
    let mut eps_rng = rng::stream(config.seed, &[2]);
    let xi = Normal::new(0.0, config.sigma_t).map_err(|e| FllrError::InvalidArgument(e.to_string()))?;
    let eps = Normal::new(0.0, config.sigma_e).map_err(|e| FllrError::InvalidArgument(e.to_string()))?;

    let mut rows_true = Vec::with_capacity(n);
    let mut rows_obs = Vec::with_capacity(n);
    let mut m_true = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let s: Vec<f64> = u.row(i).iter().zip(&sqrt_theta).map(|(&uij, &st)| uij * st).collect();
        let x: Vec<f64> = (0..p)
            .map(|k| s.iter().enumerate().map(|(j, &sj)| sj * phi[(j, k)]).sum())
            .collect();
        let noisy: Vec<f64> = x.iter().map(|&v| v + xi.sample(&mut obs_rng)).collect();
        let m = regression_function(&s, config.a);
        m_true.push(m);
        y.push(m + eps.sample(&mut eps_rng));
        rows_true.push(x);
        rows_obs.push(noisy);
    }

    let conv = |v: Vec<f64>| -> Vec<T> { v.into_iter().map(T::lit).collect() };
    let grid = Arc::new(Grid::new(conv(t.to_vec()))?);
    let y_t = conv(y);
    Ok(SimulatedSample {
        config: config.clone(),
        curves_true: CurveSet::from_rows(grid.clone(), rows_true.into_iter().map(conv).collect(), None)?,
        curves_observed: CurveSet::from_rows(grid, rows_obs.into_iter().map(conv).collect(), Some(y_t.clone()))?,
        scores_u: Matrix::from_fn(n, config.n_basis, |i, j| T::lit(u[(i, j)])),
        y: y_t,
        m_true: conv(m_true),
    })
}

/// Derivative of the regression function at curve `i` along the first
/// `j_count` generating basis functions:
/// `(1 − a) − 2a √θ_j U_ij exp(−θ_j U_ij²)` for `j ≤ 20`, `1 − a` for
/// `20 < j ≤ 30`, zero beyond.
pub fn true_derivative_scores<T: Real>(sample: &SimulatedSample<T>, i: usize, a: f64, j_count: usize) -> Result<Vec<T>> {
    if j_count > sample.config.n_basis {
        return Err(FllrError::InvalidArgument(format!(
            "{j_count} derivative scores requested from {} basis functions",
            sample.config.n_basis
        )));
    }
    if i >= sample.scores_u.rows() {
        return Err(FllrError::InvalidArgument(format!("curve index {i} out of range")));
    }
    Ok((1..=j_count)
        .map(|j| {
            let s = theta(j).sqrt() * sample.scores_u[(i, j - 1)].to_f64().unwrap_or(f64::NAN);
            let v = if j <= NONLINEAR_TERMS {
                (1.0 - a) - 2.0 * a * s * (-s * s).exp()
            } else if j <= LINEAR_TERMS {
                1.0 - a
            } else {
                0.0
            };
            T::lit(v)
        })
        .collect())
}

/// `Σ(Y − Ŷ)² / Σ(Y − Ȳ)²`.
pub fn error_ratio<T: Real>(y: &[T], predictions: &[T]) -> Result<T> {
    if y.len() != predictions.len() || y.len() < 2 {
        return Err(FllrError::Shape(format!(
            "{} responses, {} predictions",
            y.len(),
            predictions.len()
        )));
    }
    let mean = y.iter().copied().sum::<T>() / T::from_count(y.len());
    let tss: T = y.iter().map(|&v| (v - mean) * (v - mean)).sum();
    if !(tss > T::zero()) {
        return Err(FllrError::ConstantResponse);
    }
    let rss: T = y.iter().zip(predictions).map(|(&v, &p)| (v - p) * (v - p)).sum();
    Ok(rss / tss)
}
