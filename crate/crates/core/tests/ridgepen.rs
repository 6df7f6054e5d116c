mod common;

use common::{dense_bias_variance, dense_prediction, instance, rel, to_dense, Instance};
use fllr_core::funcspace::ScoreMatrix;
use fllr_core::linalg::Matrix;
use fllr_core::localkernel::{local_weights_from_distances, KernelSpec};
use fllr_core::ridgepen::{
    assemble_qp, estimated_bias, estimated_variance, fit_ridge, mse_components, predict_ridge, solve_bvls,
    weighted_score_eigen, RidgeProblem, WeightedScoreEigen,
};
use fllr_core::rng::stream;
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::Rng;

fn random_b(eig: &WeightedScoreEigen<f64>, seed: u64) -> Vec<f64> {
    let mut r = stream(seed, &[99]);
    eig.upper().iter().map(|&u| u * r.random_range(0.05..1.0)).collect()
}

fn live(eig: &WeightedScoreEigen<f64>) -> bool {
    eig.gamma_tilde.iter().all(|&g| g > 0.0)
}

#[test]
fn finite_penalty_matches_dense_inversion() {
    let mut checked = 0;
    for seed in 0..200 {
        let inst = instance(seed, (10, 30), (1, 5));
        let eig = weighted_score_eigen(&inst.scores, &inst.weights).unwrap();
        if !live(&eig) {
            continue;
        }
        let comp = mse_components(&inst.scores, &inst.weights, &eig, &inst.beta, inst.sigma).unwrap();
        let b = random_b(&eig, seed);
        let lambda: Vec<f64> = b.iter().zip(&eig.gamma_tilde).map(|(&bj, &g)| 1.0 / bj - g).collect();
        let Some(oracle) = dense_prediction(&inst, &to_dense(&eig.v), &lambda) else { continue };
        let fit = predict_ridge(&inst.scores, &inst.weights, &inst.y, &eig, &comp, &b).unwrap();
        assert!(rel(fit.m_hat, oracle) < 1e-8, "seed {seed}: {} vs {oracle}", fit.m_hat);
        assert!(fit.lambda.iter().all(|&l| l >= 0.0));
        assert!((fit.est_mse - fit.est_bias * fit.est_bias - fit.est_var).abs() <= 1e-12 * fit.est_mse.max(1.0));
        checked += 1;
    }
    assert!(checked > 150, "only {checked} nonsingular instances");
}

#[test]
fn unpenalized_bias_and_variance_match_dense_formulas() {
    for seed in 0..200 {
        let inst = instance(seed, (10, 30), (1, 5));
        let eig = weighted_score_eigen(&inst.scores, &inst.weights).unwrap();
        let Some((bias, var)) = dense_bias_variance(&inst) else { continue };
        if !live(&eig) {
            continue;
        }
        let comp = mse_components(&inst.scores, &inst.weights, &eig, &inst.beta, inst.sigma).unwrap();
        let ub = eig.unpenalized_b();
        // The truncated bias vanishes at λ = 0, so compare against the size of
        // the terms that cancel.
        let scale = (comp.a * comp.d2).abs()
            + comp.d1.iter().zip(&comp.d3).zip(&ub).map(|((x, y), b)| (x * y * b).abs()).sum::<f64>();
        assert!((estimated_bias(&comp, &ub) - bias).abs() <= 1e-8 * scale.max(1e-300), "seed {seed}");
        assert!(bias.abs() <= 1e-8 * scale.max(1e-300));
        let v = estimated_variance(&comp, &eig, &inst.scores, &inst.weights, &ub);
        assert!(rel(v, var) < 1e-8, "seed {seed}: {v} vs {var}");
    }
}

#[test]
fn unpenalized_point_reproduces_local_linear_fit() {
    for seed in 0..100 {
        let inst = instance(seed, (10, 30), (1, 5));
        let eig = weighted_score_eigen(&inst.scores, &inst.weights).unwrap();
        let Ok(fllr) = fllr_core::estimators::fllr_fit(&inst.scores, &inst.y, &inst.weights) else { continue };
        if !live(&eig) {
            continue;
        }
        let comp = mse_components(&inst.scores, &inst.weights, &eig, &inst.beta, inst.sigma).unwrap();
        let fit = predict_ridge(&inst.scores, &inst.weights, &inst.y, &eig, &comp, &eig.unpenalized_b()).unwrap();
        assert!(rel(fit.m_hat, fllr.m_hat) < 1e-8, "seed {seed}");
    }
}

#[test]
fn eigenvalues_match_dense_oracle() {
    for seed in 0..20 {
        let inst = instance(1000 + seed, (15, 15), (4, 4));
        let eig = weighted_score_eigen(&inst.scores, &inst.weights).unwrap();
        let c = to_dense(inst.scores.matrix());
        let d = &inst.weights.deltas;
        let total: f64 = d.iter().sum();
        let mu = c.transpose() * nalgebra::DVector::from_column_slice(d) / total;
        let mut w = DMatrix::zeros(4, 4);
        for i in 0..15 {
            let x = c.row(i).transpose() - &mu;
            w += d[i] * &x * x.transpose() / total;
        }
        let mut oracle: Vec<f64> = w.symmetric_eigen().eigenvalues.iter().map(|g| g / eig.a).collect();
        oracle.sort_by(|a, b| b.partial_cmp(a).unwrap());
        for (g, o) in eig.gamma_tilde.iter().zip(&oracle) {
            assert!((g - o).abs() <= 1e-9 * (1.0 + o.abs()));
        }
        assert!(oracle.iter().all(|&o| o >= -1e-12));
        let v = to_dense(&eig.v);
        assert!((v.transpose() * &v - DMatrix::identity(4, 4)).abs().max() <= 1e-10);
    }
}

#[test]
fn d3_matches_direct_product() {
    for seed in 0..20 {
        let inst = instance(2000 + seed, (10, 10), (3, 3));
        let eig = weighted_score_eigen(&inst.scores, &inst.weights).unwrap();
        let comp = mse_components(&inst.scores, &inst.weights, &eig, &inst.beta, inst.sigma).unwrap();
        let c = to_dense(inst.scores.matrix());
        let g = c.transpose() * common::delta(&inst.weights) * &c / 10.0;
        let direct = to_dense(&eig.v).transpose() * g * nalgebra::DVector::from_column_slice(&inst.beta);
        for (x, y) in comp.d3.iter().zip(direct.iter()) {
            assert!((x - y).abs() <= 1e-10 * (1.0 + y.abs()));
        }
    }
}

#[test]
fn infinite_penalty_variance_and_prediction() {
    let inst = instance(7, (12, 12), (2, 2));
    let eig = weighted_score_eigen(&inst.scores, &inst.weights).unwrap();
    let comp = mse_components(&inst.scores, &inst.weights, &eig, &inst.beta, inst.sigma).unwrap();
    let zero = vec![0.0; 2];
    let n = 12.0;
    let sum_sq: f64 = inst.weights.deltas.iter().map(|d| d * d).sum();
    let expect = inst.sigma * inst.sigma / (n * n) * comp.a * comp.a * sum_sq;
    assert!(rel(estimated_variance(&comp, &eig, &inst.scores, &inst.weights, &zero), expect) < 1e-12);
    let fit = predict_ridge(&inst.scores, &inst.weights, &inst.y, &eig, &comp, &zero).unwrap();
    let num: f64 = inst.weights.deltas.iter().zip(&inst.y).map(|(d, y)| d * y).sum();
    let den: f64 = inst.weights.deltas.iter().sum();
    assert!(rel(fit.m_hat, num / den) < 1e-12);
    assert!(fit.lambda.iter().all(|l| l.is_infinite()));
}

#[test]
fn centered_scores_make_the_problem_constant() {
    let s: ScoreMatrix<f64> = ScoreMatrix::from_matrix(Matrix::from_rows(&[
        vec![-1.0, 0.5],
        vec![1.0, -0.5],
        vec![-0.3, -0.8],
        vec![0.3, 0.8],
    ]));
    let w = local_weights_from_distances(&[0.2; 4], 4, KernelSpec::BOX).unwrap();
    let eig = weighted_score_eigen(&s, &w).unwrap();
    let comp = mse_components(&s, &w, &eig, &[1.0, -2.0], 0.5).unwrap();
    assert!(comp.d1.iter().all(|x| x.abs() < 1e-15));
    assert!(comp.d2.abs() < 1e-15);
    let p = assemble_qp(&comp, &eig, &s, &w).unwrap();
    assert!(p.a1.iter().all(|x| x.abs() < 1e-15));
    assert!(p.a2.max_abs() < 1e-15);
    let o0 = p.objective(&[0.0, 0.0]);
    assert!((p.objective(&eig.upper()) - o0).abs() < 1e-15);
}

fn grid_points(upper: &[f64], per_axis: usize) -> Vec<Vec<f64>> {
    let mut pts = vec![vec![]];
    for &u in upper {
        pts = pts
            .into_iter()
            .flat_map(|p| {
                (0..per_axis).map(move |s| {
                    let mut q = p.clone();
                    q.push(u * s as f64 / (per_axis - 1) as f64);
                    q
                })
            })
            .collect();
    }
    pts
}

fn problem(inst: &Instance) -> Option<(RidgeProblem<f64>, WeightedScoreEigen<f64>)> {
    let eig = weighted_score_eigen(&inst.scores, &inst.weights).ok()?;
    if !live(&eig) {
        return None;
    }
    let comp = mse_components(&inst.scores, &inst.weights, &eig, &inst.beta, inst.sigma).ok()?;
    Some((assemble_qp(&comp, &eig, &inst.scores, &inst.weights).ok()?, eig))
}

#[test]
fn solver_beats_exhaustive_grid() {
    let mut solved = 0;
    for seed in 0..200 {
        let inst = instance(3000 + seed, (10, 30), (1, 3));
        let Some((p, _)) = problem(&inst) else { continue };
        let sol = solve_bvls(&p).unwrap();
        let best = p.objective(&sol.x);
        for b in grid_points(&p.upper, 21) {
            let o = p.objective(&b);
            assert!(best <= o + 1e-12 * o.abs().max(1e-300), "seed {seed}: {best} > {o}");
        }
        assert!(sol.kkt_residual <= 1e-8 * sol.scale);
        assert!(sol.x.iter().zip(&p.upper).all(|(&x, &u)| (0.0..=u).contains(&x)));
        solved += 1;
    }
    assert!(solved > 150);
}

#[test]
fn one_dimensional_objective_matches_quadratic() {
    for seed in 0..20 {
        let inst = instance(4000 + seed, (10, 20), (1, 1));
        let Some((p, _)) = problem(&inst) else { continue };
        let (a, s) = p.stacked();
        let (mut c2, mut c1, mut c0) = (0.0, 0.0, 0.0);
        for r in 0..a.rows() {
            c2 += a[(r, 0)] * a[(r, 0)];
            c1 -= 2.0 * a[(r, 0)] * s[r];
            c0 += s[r] * s[r];
        }
        let u = p.upper[0];
        let mut grid_min = f64::INFINITY;
        for k in 0..1000 {
            let b = u * k as f64 / 999.0;
            let o = p.objective(&[b]);
            let q = c2 * b * b + c1 * b + c0;
            assert!((o - q).abs() <= 1e-10 * q.abs().max(1e-300));
            grid_min = grid_min.min(o);
        }
        let clamp = if c2 > 0.0 { (-c1 / (2.0 * c2)).clamp(0.0, u) } else if c1 < 0.0 { u } else { 0.0 };
        let sol = solve_bvls(&p).unwrap();
        assert!((sol.x[0] - clamp).abs() <= 1e-9 * u.max(1.0));
        assert!(p.objective(&sol.x) <= grid_min * (1.0 + 1e-12));
    }
}

fn seed_strategy() -> impl Strategy<Value = u64> {
    any::<u64>()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn weighted_covariance_is_psd(seed in seed_strategy()) {
        let inst = instance(seed, (3, 30), (1, 6));
        let eig = weighted_score_eigen(&inst.scores, &inst.weights).unwrap();
        let min = to_dense(&eig.w).symmetric_eigen().eigenvalues.min();
        prop_assert!(min >= -1e-12);
        prop_assert!(eig.gamma_tilde.iter().all(|&g| g >= 0.0));
    }

    #[test]
    fn block_inversion_equals_dense(seed in seed_strategy()) {
        let inst = instance(seed, (10, 30), (1, 5));
        let eig = weighted_score_eigen(&inst.scores, &inst.weights).unwrap();
        prop_assume!(live(&eig));
        let comp = mse_components(&inst.scores, &inst.weights, &eig, &inst.beta, inst.sigma).unwrap();
        let b = random_b(&eig, seed);
        let lambda: Vec<f64> = b.iter().zip(&eig.gamma_tilde).map(|(&bj, &g)| 1.0 / bj - g).collect();
        let oracle = dense_prediction(&inst, &to_dense(&eig.v), &lambda);
        prop_assume!(oracle.is_some());
        let fit = predict_ridge(&inst.scores, &inst.weights, &inst.y, &eig, &comp, &b).unwrap();
        prop_assert!(rel(fit.m_hat, oracle.unwrap()) < 1e-8);
    }

    #[test]
    fn solver_is_optimal_against_candidates(seed in seed_strategy()) {
        let inst = instance(seed, (10, 30), (1, 5));
        let p = problem(&inst);
        prop_assume!(p.is_some());
        let (p, _) = p.unwrap();
        let sol = solve_bvls(&p).unwrap();
        let best = p.objective(&sol.x);
        let mut r = stream(seed, &[5]);
        let mut cands = vec![vec![0.0; p.dim()], p.upper.clone(), p.upper.iter().map(|u| u / 2.0).collect()];
        for _ in 0..20 {
            cands.push(p.upper.iter().map(|&u| u * r.random_range(0.0..=1.0)).collect());
        }
        for c in cands {
            let o = p.objective(&c);
            prop_assert!(best <= o + 1e-12 * o.abs().max(1e-300));
        }
    }

    #[test]
    fn solver_meets_kkt_conditions(seed in seed_strategy()) {
        let inst = instance(seed, (10, 40), (1, 8));
        let p = problem(&inst);
        prop_assume!(p.is_some());
        let (p, _) = p.unwrap();
        let sol = solve_bvls(&p).unwrap();
        prop_assert!(sol.kkt_residual <= 1e-8 * sol.scale, "{} vs scale {}", sol.kkt_residual, sol.scale);
        prop_assert!(sol.x.iter().zip(&p.upper).all(|(&x, &u)| (0.0..=u).contains(&x)));
    }

    #[test]
    fn tuned_mse_never_exceeds_unpenalized(seed in seed_strategy()) {
        let inst = instance(seed, (10, 30), (1, 5));
        let pred = fit_ridge(&inst.scores, &inst.weights, &inst.y, &inst.beta, inst.sigma);
        prop_assume!(pred.is_ok());
        let pred = pred.unwrap();
        prop_assert!(pred.fit.est_mse <= pred.unpenalized_mse + 1e-12);
    }

    #[test]
    fn eigenbasis_permutation_leaves_fit_unchanged(seed in seed_strategy()) {
        let inst = instance(seed, (10, 30), (2, 5));
        let eig = weighted_score_eigen(&inst.scores, &inst.weights).unwrap();
        prop_assume!(live(&eig));
        let j = eig.dim();
        let perm: Vec<usize> = (0..j).rev().collect();
        let permuted = WeightedScoreEigen {
            v: Matrix::from_fn(j, j, |r, c| eig.v[(r, perm[c])]),
            gamma_tilde: perm.iter().map(|&p| eig.gamma_tilde[p]).collect(),
            mu_star: perm.iter().map(|&p| eig.mu_star[p]).collect(),
            ..eig.clone()
        };
        let b = random_b(&eig, seed);
        let pb: Vec<f64> = perm.iter().map(|&p| b[p]).collect();
        let comp = mse_components(&inst.scores, &inst.weights, &eig, &inst.beta, inst.sigma).unwrap();
        let pcomp = mse_components(&inst.scores, &inst.weights, &permuted, &inst.beta, inst.sigma).unwrap();
        let f = predict_ridge(&inst.scores, &inst.weights, &inst.y, &eig, &comp, &b).unwrap();
        let g = predict_ridge(&inst.scores, &inst.weights, &inst.y, &permuted, &pcomp, &pb).unwrap();
        prop_assert!((f.m_hat - g.m_hat).abs() <= 1e-10 * (1.0 + f.m_hat.abs()));
        prop_assert!((f.est_mse - g.est_mse).abs() <= 1e-10 * (1.0 + f.est_mse.abs()));
        let p = assemble_qp(&comp, &eig, &inst.scores, &inst.weights).unwrap();
        let q = assemble_qp(&pcomp, &permuted, &inst.scores, &inst.weights).unwrap();
        let (sp, sq) = (solve_bvls(&p).unwrap(), solve_bvls(&q).unwrap());
        let (op, oq) = (p.objective(&sp.x), q.objective(&sq.x));
        prop_assert!((op - oq).abs() <= 1e-10 * (op.abs() + oq.abs()).max(1e-300), "{op} vs {oq}");
    }
}
