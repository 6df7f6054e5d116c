//! Quick oracle comparisons against dense linear algebra, run by
//! `fllr selftest`.

use fllr_core::funcspace::ScoreMatrix;
use fllr_core::linalg::Matrix;
use fllr_core::localkernel::{local_weights_from_distances, KernelSpec, LocalWeights};
use fllr_core::ridgepen::{
    assemble_qp, estimated_bias, estimated_variance, mse_components, predict_ridge, solve_bvls, weighted_score_eigen,
};
use fllr_core::rng::stream;
use nalgebra::{DMatrix, DVector};
use rand::Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub instances: usize,
    pub worst: f64,
    pub tolerance: f64,
    pub passed: bool,
}

struct Instance {
    scores: ScoreMatrix<f64>,
    weights: LocalWeights<f64>,
    y: Vec<f64>,
    beta: Vec<f64>,
    sigma: f64,
}

fn instance(seed: u64, index: u64) -> Instance {
    let mut r = stream(seed, &[index]);
    let n = r.random_range(10..=30);
    let j = r.random_range(1..=5);
    let scores = Matrix::from_fn(n, j, |_, _| r.random_range(-1.0..1.0));
    let dist: Vec<f64> = (0..n).map(|_| r.random_range(0.01..1.0)).collect();
    let k = r.random_range(j + 2..=n);
    let kernel = if r.random_bool(0.5) { KernelSpec::BOX } else { KernelSpec::TRIANGLE };
    let weights = local_weights_from_distances(&dist, k, kernel).expect("valid k");
    Instance {
        scores: ScoreMatrix::from_matrix(scores),
        weights,
        y: (0..n).map(|_| r.random_range(-2.0..2.0)).collect(),
        beta: (0..j).map(|_| r.random_range(-2.0..2.0)).collect(),
        sigma: r.random_range(0.1..1.0),
    }
}

/// `n⁻¹ C_xᵀ Δ C_x`, `n⁻¹ C_xᵀ Δ²  C_x` and the design `C_x`.
fn dense(inst: &Instance) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
    let n = inst.scores.n();
    let j = inst.scores.dim();
    let cx = DMatrix::from_fn(n, j + 1, |i, c| if c == 0 { 1.0 } else { inst.scores.row(i)[c - 1] });
    let d = DMatrix::from_diagonal(&DVector::from_column_slice(&inst.weights.deltas));
    let m = cx.transpose() * &d * &cx / n as f64;
    let m2 = cx.transpose() * &d * &d * &cx;
    (cx, m, m2)
}

fn rel(a: f64, b: f64, scale: f64) -> f64 {
    (a - b).abs() / scale.max(a.abs()).max(b.abs()).max(f64::MIN_POSITIVE)
}

/// Runs every check on `instances` random problems.
pub fn run(instances: usize, seed: u64) -> Vec<CheckResult> {
    let mut pred = 0.0f64;
    let mut bias = 0.0f64;
    let mut var = 0.0f64;
    let mut psd = 0.0f64;
    let mut reduction = 0.0f64;
    let mut qp = f64::NEG_INFINITY;
    let mut used = 0;
    for idx in 0..instances as u64 {
        let inst = instance(seed, idx);
        let (cx, m, m2) = dense(&inst);
        let Some(m_inv) = m.clone().try_inverse() else { continue };
        used += 1;
        let n = inst.scores.n() as f64;
        let j = inst.scores.dim();
        let eig = weighted_score_eigen(&inst.scores, &inst.weights).expect("eigen");
        let w = DMatrix::from_fn(j, j, |r, c| eig.w[(r, c)]);
        psd = psd.max(-w.symmetric_eigen().eigenvalues.min());
        if eig.gamma_tilde.iter().any(|&g| g == 0.0) {
            continue;
        }
        let comp = mse_components(&inst.scores, &inst.weights, &eig, &inst.beta, inst.sigma).expect("components");
        let d = DMatrix::from_diagonal(&DVector::from_column_slice(&inst.weights.deltas));
        let rhs = cx.transpose() * &d * DVector::from_column_slice(&inst.y) / n;

        // finite penalty at a random feasible b
        let mut r = stream(seed, &[idx, 1]);
        let upper = eig.upper();
        let b: Vec<f64> = upper.iter().map(|&u| u * r.random_range(0.05..1.0)).collect();
        let v = DMatrix::from_fn(j, j, |r, c| eig.v[(r, c)]);
        let lam = DMatrix::from_diagonal(&DVector::from_iterator(
            j,
            b.iter().zip(&eig.gamma_tilde).map(|(&bj, &g)| 1.0 / bj - g),
        ));
        let mut h = DMatrix::zeros(j + 1, j + 1);
        h.view_mut((1, 1), (j, j)).copy_from(&(&v * lam * v.transpose()));
        if let Some(inv) = (&m + &h).try_inverse() {
            let oracle = (inv * &rhs)[0];
            let fit = predict_ridge(&inst.scores, &inst.weights, &inst.y, &eig, &comp, &b).expect("fit");
            pred = pred.max(rel(fit.m_hat, oracle, 0.0));
        }

        // unpenalized reductions
        let ub = eig.unpenalized_b();
        let beta = DVector::from_column_slice(&inst.beta);
        let c = cx.columns(1, j).into_owned();
        let e1 = m_inv.column(0).into_owned();
        let bias_oracle = (m_inv.row(0) * cx.transpose() * &d * &c * &beta)[0] / n;
        let scale = (comp.a * comp.d2).abs()
            + comp.d1.iter().zip(&comp.d3).zip(&ub).map(|((x, y), b)| (x * y * b).abs()).sum::<f64>();
        bias = bias.max(rel(estimated_bias(&comp, &ub), bias_oracle, scale));
        let var_oracle = inst.sigma * inst.sigma / (n * n) * (e1.transpose() * &m2 * &e1)[0];
        var = var.max(rel(estimated_variance(&comp, &eig, &inst.scores, &inst.weights, &ub), var_oracle, 0.0));
        let fit = predict_ridge(&inst.scores, &inst.weights, &inst.y, &eig, &comp, &ub).expect("fit");
        reduction = reduction.max(rel(fit.m_hat, (m_inv * &rhs)[0], 0.0));

        // solver optimality against the two feasible corners and the midpoint
        if let Ok(problem) = assemble_qp(&comp, &eig, &inst.scores, &inst.weights) {
            if let Ok(sol) = solve_bvls(&problem) {
                let best = problem.objective(&sol.x);
                let mid: Vec<f64> = upper.iter().map(|u| u / 2.0).collect();
                for cand in [vec![0.0; j], upper.clone(), mid] {
                    let o = problem.objective(&cand);
                    qp = qp.max((best - o) / o.abs().max(f64::MIN_POSITIVE));
                }
            }
        }
    }
    vec![
        CheckResult {
            name: "penalized prediction vs dense inversion",
            instances: used,
            worst: pred,
            tolerance: 1e-8,
            passed: pred <= 1e-8,
        },
        CheckResult {
            name: "estimated bias vs dense formula",
            instances: used,
            worst: bias,
            tolerance: 1e-8,
            passed: bias <= 1e-8,
        },
        CheckResult {
            name: "estimated variance vs dense formula",
            instances: used,
            worst: var,
            tolerance: 1e-8,
            passed: var <= 1e-8,
        },
        CheckResult {
            name: "unpenalized point reproduces local linear fit",
            instances: used,
            worst: reduction,
            tolerance: 1e-8,
            passed: reduction <= 1e-8,
        },
        CheckResult {
            name: "weighted covariance is PSD",
            instances: used,
            worst: psd,
            tolerance: 1e-12,
            passed: psd <= 1e-12,
        },
        CheckResult {
            name: "box solver beats corners and midpoint",
            instances: used,
            worst: qp,
            tolerance: 1e-10,
            passed: qp <= 1e-10,
        },
    ]
}

#[cfg(test)]
mod tests {
    #[test]
    fn selftest_passes() {
        for c in super::run(60, 3) {
            assert!(c.passed, "{c:?}");
        }
    }
}
