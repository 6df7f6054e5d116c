#![allow(dead_code)]

use fllr_core::funcspace::ScoreMatrix;
use fllr_core::linalg::Matrix;
use fllr_core::localkernel::{local_weights_from_distances, KernelSpec, LocalWeights};
use fllr_core::rng::stream;
use nalgebra::{DMatrix, DVector};
use rand::Rng;

pub struct Instance {
    pub scores: ScoreMatrix<f64>,
    pub weights: LocalWeights<f64>,
    pub y: Vec<f64>,
    pub beta: Vec<f64>,
    pub sigma: f64,
}

pub fn instance(seed: u64, n_range: (usize, usize), j_range: (usize, usize)) -> Instance {
    let mut r = stream(seed, &[]);
    let n = r.random_range(n_range.0..=n_range.1);
    let j = r.random_range(j_range.0..=j_range.1);
    let scores = Matrix::from_fn(n, j, |_, _| r.random_range(-1.0..1.0));
    let dist: Vec<f64> = (0..n).map(|_| r.random_range(0.01..1.0)).collect();
    let k = r.random_range((j + 2).min(n)..=n);
    let kernel = if r.random_bool(0.5) { KernelSpec::BOX } else { KernelSpec::TRIANGLE };
    Instance {
        scores: ScoreMatrix::from_matrix(scores),
        weights: local_weights_from_distances(&dist, k, kernel).unwrap(),
        y: (0..n).map(|_| r.random_range(-2.0..2.0)).collect(),
        beta: (0..j).map(|_| r.random_range(-2.0..2.0)).collect(),
        sigma: r.random_range(0.1..1.0),
    }
}

pub fn to_dense(m: &Matrix<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(m.rows(), m.cols(), |r, c| m[(r, c)])
}

pub fn design(scores: &ScoreMatrix<f64>) -> DMatrix<f64> {
    let j = scores.dim();
    DMatrix::from_fn(scores.n(), j + 1, |i, c| if c == 0 { 1.0 } else { scores.row(i)[c - 1] })
}

pub fn delta(w: &LocalWeights<f64>) -> DMatrix<f64> {
    DMatrix::from_diagonal(&DVector::from_column_slice(&w.deltas))
}

/// `n⁻¹ C_xᵀ Δ C_x`.
pub fn normal_matrix(inst: &Instance) -> DMatrix<f64> {
    let cx = design(&inst.scores);
    cx.transpose() * delta(&inst.weights) * &cx / inst.scores.n() as f64
}

/// `e₁ᵀ (n⁻¹C_xᵀΔC_x + H)⁻¹ n⁻¹C_xᵀΔY` with `H* = V diag(λ) Vᵀ`.
pub fn dense_prediction(inst: &Instance, v: &DMatrix<f64>, lambda: &[f64]) -> Option<f64> {
    let j = inst.scores.dim();
    let n = inst.scores.n() as f64;
    let cx = design(&inst.scores);
    let mut h = DMatrix::zeros(j + 1, j + 1);
    let lam = DMatrix::from_diagonal(&DVector::from_column_slice(lambda));
    h.view_mut((1, 1), (j, j)).copy_from(&(v * lam * v.transpose()));
    let inv = (normal_matrix(inst) + h).try_inverse()?;
    let rhs = cx.transpose() * delta(&inst.weights) * DVector::from_column_slice(&inst.y) / n;
    Some((inv * rhs)[0])
}

/// Truncated bias and exact variance at `H = 0` by explicit inversion.
pub fn dense_bias_variance(inst: &Instance) -> Option<(f64, f64)> {
    let j = inst.scores.dim();
    let n = inst.scores.n() as f64;
    let cx = design(&inst.scores);
    let d = delta(&inst.weights);
    let inv = normal_matrix(inst).try_inverse()?;
    let c = cx.columns(1, j).into_owned();
    let beta = DVector::from_column_slice(&inst.beta);
    let bias = (inv.row(0) * cx.transpose() * &d * c * beta)[0] / n;
    let e1 = inv.column(0).into_owned();
    let var = inst.sigma * inst.sigma / (n * n) * (e1.transpose() * cx.transpose() * &d * &d * &cx * &e1)[0];
    Some((bias, var))
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

/// Weighted least squares by dense normal equations over the active points.
pub fn naive_wls(scores: &[Vec<f64>], y: &[f64], w: &[f64]) -> Option<(f64, Vec<f64>)> {
    let j = scores.first().map_or(0, |r| r.len());
    let mut a = DMatrix::zeros(j + 1, j + 1);
    let mut b = DVector::zeros(j + 1);
    for ((row, &yi), &wi) in scores.iter().zip(y).zip(w) {
        let x = DVector::from_iterator(j + 1, std::iter::once(1.0).chain(row.iter().copied()));
        a += wi * &x * x.transpose();
        b += wi * yi * &x;
    }
    let coef = a.try_inverse()? * b;
    Some((coef[0], coef.iter().skip(1).copied().collect()))
}

/// Box-kernel weights at the `k` nearest distances, written out directly.
pub fn naive_box_weights(dist: &[f64], k: usize) -> Vec<f64> {
    let mut sorted = dist.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let h = sorted[k - 1] * (1.0 + 1e-12);
    dist.iter().map(|&d| if d <= h { 1.0 } else { 0.0 }).collect()
}
