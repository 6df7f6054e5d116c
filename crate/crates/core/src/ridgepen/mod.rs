//! Data-adaptive ridge penalty for the local linear fit.
//!
//! The penalty `H = V Λ Vᵀ` shares its eigenvectors with the weighted score
//! covariance at the query point. Writing `b_j = 1/(γ̃_j + λ_j)`, the
//! estimated MSE of the penalized fit is a linear least-squares objective in
//! `b`, minimized over the box `0 ≤ b ≤ 1/γ̃`. Everything here works in
//! `b`; `λ` is only reported.

pub mod bvls;

use crate::error::{FllrError, Result};
use crate::funcspace::ScoreMatrix;
use crate::linalg::{dot, symmetric_eigen, Matrix};
use crate::localkernel::LocalWeights;
use crate::scalar::Real;

pub use bvls::{bvls, BvlsSolution};

/// Relative cutoff below which an eigenvalue of `M̃` is treated as zero.
pub const EIGEN_CLAMP: f64 = 1e-12;
/// Upper bound on `b_j` standing in for `1/0`.
pub const UPPER_SENTINEL: f64 = 1e12;

#[derive(Debug, Clone, PartialEq)]
pub struct WeightedScoreEigen<T> {
    /// `Σ Δ_i (c_i − μ̂)(c_i − μ̂)ᵀ / Σ Δ_i`.
    pub w: Matrix<T>,
    /// Eigenvectors of `M̃ = a⁻¹ W` as columns.
    pub v: Matrix<T>,
    /// Eigenvalues of `M̃`, descending, clamped at zero.
    pub gamma_tilde: Vec<T>,
    /// `Σ Δ_i c_i / Σ Δ_i`.
    pub mu_hat: Vec<T>,
    /// `Vᵀ μ̂`.
    pub mu_star: Vec<T>,
    /// `n / Σ Δ_i`.
    pub a: T,
}

impl<T: Real> WeightedScoreEigen<T> {
    pub fn dim(&self) -> usize {
        self.gamma_tilde.len()
    }

    /// `1/γ̃_j`, or the sentinel for clamped eigenvalues.
    pub fn upper(&self) -> Vec<T> {
        self.gamma_tilde
            .iter()
            .map(|&g| if g > T::zero() { g.recip().min(T::lit(UPPER_SENTINEL)) } else { T::lit(UPPER_SENTINEL) })
            .collect()
    }

    /// The unpenalized point `λ = 0`, except that directions with a clamped
    /// eigenvalue carry no information and stay at `b_j = 0`.
    pub fn unpenalized_b(&self) -> Vec<T> {
        self.gamma_tilde
            .iter()
            .zip(self.upper())
            .map(|(&g, u)| if g > T::zero() { u } else { T::zero() })
            .collect()
    }
}

fn check_shapes<T: Real>(scores: &ScoreMatrix<T>, weights: &LocalWeights<T>) -> Result<()> {
    if scores.n() != weights.n() {
        return Err(FllrError::Shape(format!(
            "{} score rows for {} weights",
            scores.n(),
            weights.n()
        )));
    }
    Ok(())
}

/// Weighted covariance of the scores around the query and its eigenbasis.
/// Eigenvector signs are fixed so the largest-magnitude entry is positive.
pub fn weighted_score_eigen<T: Real>(scores: &ScoreMatrix<T>, weights: &LocalWeights<T>) -> Result<WeightedScoreEigen<T>> {
    check_shapes(scores, weights)?;
    let j = scores.dim();
    if j == 0 {
        return Err(FllrError::InvalidArgument("at least one score is needed".into()));
    }
    if weights.active.len() < 2 {
        return Err(FllrError::TooFewActive {
            required: 2,
            found: weights.active.len(),
        });
    }
    let total: T = weights.active.iter().map(|&i| weights.deltas[i]).sum();
    let mut mu_hat = vec![T::zero(); j];
    for &i in &weights.active {
        for (m, &c) in mu_hat.iter_mut().zip(scores.row(i)) {
            *m = *m + weights.deltas[i] * c;
        }
    }
    mu_hat.iter_mut().for_each(|m| *m = *m / total);

    // centered accumulation keeps W PSD up to rounding
    let mut w = Matrix::zeros(j, j);
    let mut dev = vec![T::zero(); j];
    for &i in &weights.active {
        for ((d, &c), &m) in dev.iter_mut().zip(scores.row(i)).zip(&mu_hat) {
            *d = c - m;
        }
        let di = weights.deltas[i];
        for r in 0..j {
            let s = di * dev[r];
            for c in r..j {
                w[(r, c)] = w[(r, c)] + s * dev[c];
            }
        }
    }
    for r in 0..j {
        for c in r..j {
            let val = w[(r, c)] / total;
            w[(r, c)] = val;
            w[(c, r)] = val;
        }
    }

    let a = weights.normalization();
    let m_tilde: Matrix<T> = Matrix::from_fn(j, j, |r, c| w[(r, c)] / a);
    let eig = symmetric_eigen(&m_tilde);
    let top = eig.values[0].max(T::zero());
    // below rounding level of the second moment the eigenvalue is noise
    let second_moment = (0..j).map(|k| w[(k, k)]).sum::<T>() + dot(&mu_hat, &mu_hat);
    let cutoff = (top * T::lit(EIGEN_CLAMP)).max(T::epsilon() * T::lit(64.0) * second_moment / a);
    let gamma_tilde: Vec<T> = eig
        .values
        .iter()
        .map(|&g| if g < cutoff || g <= T::zero() { T::zero() } else { g })
        .collect();

    let mut v = eig.vectors;
    for c in 0..j {
        let mut pivot = 0;
        for r in 1..j {
            if v[(r, c)].abs() > v[(pivot, c)].abs() {
                pivot = r;
            }
        }
        if v[(pivot, c)] < T::zero() {
            for r in 0..j {
                v[(r, c)] = -v[(r, c)];
            }
        }
    }
    let mu_star = v.tr_mul_vec(&mu_hat);
    Ok(WeightedScoreEigen {
        w,
        v,
        gamma_tilde,
        mu_hat,
        mu_star,
        a,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MseComponents<T> {
    /// `Vᵀ(n⁻¹ CᵀΔ1)`.
    pub d1: Vec<T>,
    /// `n⁻¹ 1ᵀΔCβ̂ᴾ`.
    pub d2: T,
    /// `Vᵀ(n⁻¹ CᵀΔC)β̂ᴾ`.
    pub d3: Vec<T>,
    pub sigma_e: T,
    pub a: T,
    pub m_prime_plugin: Vec<T>,
}

fn close<T: Real>(x: T, y: T, scale: T) -> bool {
    (x - y).abs() <= T::lit(1e-10).max(T::epsilon() * T::lit(1e4)) * (T::one() + scale)
}

/// Statistics entering the estimated bias and variance, from the plug-in
/// derivative `β̂ᴾ` and noise level `σ̂_e`.
pub fn mse_components<T: Real>(
    scores: &ScoreMatrix<T>,
    weights: &LocalWeights<T>,
    eigen: &WeightedScoreEigen<T>,
    beta_plugin: &[T],
    sigma_e: T,
) -> Result<MseComponents<T>> {
    check_shapes(scores, weights)?;
    let j = scores.dim();
    if beta_plugin.len() != j || eigen.dim() != j {
        return Err(FllrError::Shape(format!(
            "{j} scores, {} plug-in derivatives, {} eigenvalues",
            beta_plugin.len(),
            eigen.dim()
        )));
    }
    if !(sigma_e >= T::zero()) || !sigma_e.is_finite() {
        return Err(FllrError::InvalidArgument(format!("sigma_e must be nonnegative, got {sigma_e}")));
    }
    if beta_plugin.iter().any(|b| !b.is_finite()) {
        return Err(FllrError::NonFinite("plug-in derivative"));
    }
    let n = T::from_count(scores.n());
    let mut u = vec![T::zero(); j];
    let mut g_beta = vec![T::zero(); j];
    for &i in &weights.active {
        let d = weights.deltas[i];
        let c = scores.row(i);
        let cb = dot(c, beta_plugin);
        for ((uk, gk), &ck) in u.iter_mut().zip(g_beta.iter_mut()).zip(c) {
            *uk = *uk + d * ck;
            *gk = *gk + d * ck * cb;
        }
    }
    u.iter_mut().for_each(|x| *x = *x / n);
    g_beta.iter_mut().for_each(|x| *x = *x / n);
    let d1 = eigen.v.tr_mul_vec(&u);
    let d2 = dot(&u, beta_plugin);
    let d3 = eigen.v.tr_mul_vec(&g_beta);
    let a = eigen.a;

    if cfg!(debug_assertions) {
        let mu_star = eigen.v.tr_mul_vec(&eigen.mu_hat);
        let mb = dot(&eigen.mu_hat, beta_plugin);
        let mut inner = eigen.w.mul_vec(beta_plugin);
        inner.iter_mut().zip(&eigen.mu_hat).for_each(|(x, &m)| *x = *x + m * mb);
        let d3_alt = eigen.v.tr_mul_vec(&inner);
        let scale = eigen.w.max_abs() + dot(&eigen.mu_hat, &eigen.mu_hat);
        let bscale = beta_plugin.iter().fold(T::zero(), |m, b| m.max(b.abs()));
        for k in 0..j {
            debug_assert!(close(d1[k], mu_star[k] / a, eigen.mu_hat.iter().fold(T::zero(), |m, x| m.max(x.abs()))));
            debug_assert!(close(d3[k], d3_alt[k] / a, scale * bscale));
        }
        debug_assert!(close(d2, mb / a, bscale));
    }

    Ok(MseComponents {
        d1,
        d2,
        d3,
        sigma_e,
        a,
        m_prime_plugin: beta_plugin.to_vec(),
    })
}

/// `a d₂ + a² d₂ d₁ᵀ diag(b) d₁ − a d₁ᵀ diag(b) d₃`.
pub fn estimated_bias<T: Real>(comp: &MseComponents<T>, b: &[T]) -> T {
    let a = comp.a;
    let (q11, q13) = comp
        .d1
        .iter()
        .zip(&comp.d3)
        .zip(b)
        .fold((T::zero(), T::zero()), |(p, q), ((&d1, &d3), &bj)| (p + bj * d1 * d1, q + bj * d1 * d3));
    a * comp.d2 + a * a * comp.d2 * q11 - a * q13
}

/// `‖σ_e Δ n⁻¹ [a1 + (a² 1 d₁ᵀ − a C V) diag(b) d₁]‖²`.
pub fn estimated_variance<T: Real>(
    comp: &MseComponents<T>,
    eigen: &WeightedScoreEigen<T>,
    scores: &ScoreMatrix<T>,
    weights: &LocalWeights<T>,
    b: &[T],
) -> T {
    let a = comp.a;
    let n = T::from_count(scores.n());
    let bd1: Vec<T> = b.iter().zip(&comp.d1).map(|(&bj, &d)| bj * d).collect();
    let q11 = dot(&bd1, &comp.d1);
    let w = eigen.v.mul_vec(&bd1);
    let base = a + a * a * q11;
    weights
        .active
        .iter()
        .map(|&i| {
            let e = comp.sigma_e * weights.deltas[i] / n * (base - a * dot(scores.row(i), &w));
            e * e
        })
        .sum()
}

/// Stacked least-squares form `‖A₁ b − S₁‖² + ‖A₂ b − S₂‖²` of the
/// estimated MSE, over `0 ≤ b ≤ upper`. `A₂` has one row per active point.
#[derive(Debug, Clone, PartialEq)]
pub struct RidgeProblem<T> {
    pub a1: Vec<T>,
    pub s1: T,
    pub a2: Matrix<T>,
    pub s2: Vec<T>,
    pub upper: Vec<T>,
}

impl<T: Real> RidgeProblem<T> {
    pub fn dim(&self) -> usize {
        self.a1.len()
    }

    pub fn stacked(&self) -> (Matrix<T>, Vec<T>) {
        let j = self.dim();
        let rows = self.a2.rows() + 1;
        let a = Matrix::from_fn(rows, j, |r, c| if r == 0 { self.a1[c] } else { self.a2[(r - 1, c)] });
        let mut s = Vec::with_capacity(rows);
        s.push(self.s1);
        s.extend_from_slice(&self.s2);
        (a, s)
    }

    pub fn objective(&self, b: &[T]) -> T {
        let r1 = dot(&self.a1, b) - self.s1;
        let r2: T = self
            .a2
            .mul_vec(b)
            .iter()
            .zip(&self.s2)
            .map(|(&p, &q)| (p - q) * (p - q))
            .sum();
        r1 * r1 + r2
    }

    pub fn kkt_residual(&self, b: &[T]) -> T {
        let (a, s) = self.stacked();
        bvls::kkt_residual(&a, &s, &vec![T::zero(); self.dim()], &self.upper, b)
    }

    pub fn scale(&self, b: &[T]) -> T {
        let (a, s) = self.stacked();
        bvls::kkt_scale(&a, &s, b)
    }
}

/// Builds the box-constrained problem whose objective equals
/// `estimated_bias² + estimated_variance` at every feasible `b`.
///
/// Columns of directions with a clamped eigenvalue are exactly zero in exact
/// arithmetic; they are zeroed explicitly so rounding noise cannot pull `b_j`
/// toward the sentinel.
pub fn assemble_qp<T: Real>(
    comp: &MseComponents<T>,
    eigen: &WeightedScoreEigen<T>,
    scores: &ScoreMatrix<T>,
    weights: &LocalWeights<T>,
) -> Result<RidgeProblem<T>> {
    check_shapes(scores, weights)?;
    let j = eigen.dim();
    if comp.d1.len() != j || scores.dim() != j {
        return Err(FllrError::Shape("components and eigenbasis disagree".into()));
    }
    let a = comp.a;
    let n = T::from_count(scores.n());
    let live: Vec<bool> = eigen.gamma_tilde.iter().map(|&g| g > T::zero()).collect();
    let a1: Vec<T> = (0..j)
        .map(|k| {
            if live[k] {
                (a * a * comp.d2 * comp.d1[k] - a * comp.d3[k]) * comp.d1[k]
            } else {
                T::zero()
            }
        })
        .collect();
    let s1 = -a * comp.d2;
    let active = &weights.active;
    let mut a2 = Matrix::zeros(active.len(), j);
    let mut s2 = Vec::with_capacity(active.len());
    for (r, &i) in active.iter().enumerate() {
        let f = comp.sigma_e * weights.deltas[i] / n;
        let cv = eigen.v.tr_mul_vec(scores.row(i));
        for k in (0..j).filter(|&k| live[k]) {
            a2[(r, k)] = f * (a * a * comp.d1[k] - a * cv[k]) * comp.d1[k];
        }
        s2.push(-f * a);
    }
    let problem = RidgeProblem {
        a1,
        s1,
        a2,
        s2,
        upper: eigen.upper(),
    };

    if cfg!(debug_assertions) {
        let ub = eigen.unpenalized_b();
        for frac in [0.0, 0.37, 0.81] {
            let b: Vec<T> = ub.iter().enumerate().map(|(k, &u)| u * T::lit((frac + 0.29 * k as f64) % 1.0)).collect();
            let bias = estimated_bias(comp, &b);
            let direct = bias * bias + estimated_variance(comp, eigen, scores, weights, &b);
            let obj = problem.objective(&b);
            debug_assert!(
                (obj - direct).abs() <= T::lit(1e-8).max(T::epsilon() * T::lit(1e5)) * (obj.abs() + direct.abs() + T::min_positive_value()),
                "objective {obj} vs direct {direct}"
            );
        }
    }
    Ok(problem)
}

/// Minimizes the stacked objective over the box. The outer iteration cap is
/// `10 J`.
pub fn solve_bvls<T: Real>(problem: &RidgeProblem<T>) -> Result<BvlsSolution<T>> {
    let (a, s) = problem.stacked();
    let j = problem.dim();
    bvls::bvls(&a, &s, &vec![T::zero(); j], &problem.upper, 10 * j.max(1))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RidgeFit<T> {
    pub m_hat: T,
    pub b: Vec<T>,
    /// `1/b_j − γ̃_j`; infinite where `b_j = 0`.
    pub lambda: Vec<T>,
    pub est_bias: T,
    pub est_var: T,
    pub est_mse: T,
}

/// Penalized prediction through the block inverse:
/// `m̂ = A₁₁ n⁻¹1ᵀΔY + A₁₂ n⁻¹CᵀΔY` with `A₁₁ = a + a² d₁ᵀ diag(b) d₁` and
/// `A₁₂ = −a d₁ᵀ diag(b) Vᵀ`.
pub fn predict_ridge<T: Real>(
    scores: &ScoreMatrix<T>,
    weights: &LocalWeights<T>,
    y: &[T],
    eigen: &WeightedScoreEigen<T>,
    comp: &MseComponents<T>,
    b: &[T],
) -> Result<RidgeFit<T>> {
    check_shapes(scores, weights)?;
    let j = eigen.dim();
    if y.len() != scores.n() || b.len() != j || comp.d1.len() != j {
        return Err(FllrError::Shape(format!(
            "{} responses, {} b values, {j} eigenvalues",
            y.len(),
            b.len()
        )));
    }
    let a = comp.a;
    let n = T::from_count(scores.n());
    let mut ybar = T::zero();
    let mut z = vec![T::zero(); j];
    for &i in &weights.active {
        let dy = weights.deltas[i] * y[i];
        ybar = ybar + dy;
        for (zk, &c) in z.iter_mut().zip(scores.row(i)) {
            *zk = *zk + c * dy;
        }
    }
    ybar = ybar / n;
    z.iter_mut().for_each(|x| *x = *x / n);
    let t = eigen.v.tr_mul_vec(&z);
    let (q11, q1t) = b
        .iter()
        .zip(&comp.d1)
        .zip(&t)
        .fold((T::zero(), T::zero()), |(p, q), ((&bj, &d), &tk)| (p + bj * d * d, q + bj * d * tk));
    let m_hat = (a + a * a * q11) * ybar - a * q1t;

    let lambda = b
        .iter()
        .zip(&eigen.gamma_tilde)
        .map(|(&bj, &g)| if bj > T::zero() { (bj.recip() - g).max(T::zero()) } else { T::infinity() })
        .collect();
    let est_bias = estimated_bias(comp, b);
    let est_var = estimated_variance(comp, eigen, scores, weights, b);
    Ok(RidgeFit {
        m_hat,
        b: b.to_vec(),
        lambda,
        est_bias,
        est_var,
        est_mse: est_bias * est_bias + est_var,
    })
}

/// Result of the full per-point pipeline with solver diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct RidgePrediction<T> {
    pub fit: RidgeFit<T>,
    /// Estimated MSE at the unpenalized point.
    pub unpenalized_mse: T,
    pub kkt_residual: T,
    /// Scale the KKT residual is measured against.
    pub kkt_scale: T,
    /// `max_j b_j`.
    pub kappa: T,
    pub iterations: usize,
}

/// Eigenbasis, MSE statistics, box-constrained tuning of `b`, prediction.
pub fn fit_ridge<T: Real>(
    scores: &ScoreMatrix<T>,
    weights: &LocalWeights<T>,
    y: &[T],
    beta_plugin: &[T],
    sigma_e: T,
) -> Result<RidgePrediction<T>> {
    let eigen = weighted_score_eigen(scores, weights)?;
    let comp = mse_components(scores, weights, &eigen, beta_plugin, sigma_e)?;
    let problem = assemble_qp(&comp, &eigen, scores, weights)?;
    let sol = solve_bvls(&problem)?;
    let fit = predict_ridge(scores, weights, y, &eigen, &comp, &sol.x)?;
    let ub = eigen.unpenalized_b();
    let ub_bias = estimated_bias(&comp, &ub);
    let unpenalized_mse = ub_bias * ub_bias + estimated_variance(&comp, &eigen, scores, weights, &ub);
    let kappa = sol.x.iter().fold(T::zero(), |m, &b| m.max(b));
    Ok(RidgePrediction {
        fit,
        unpenalized_mse,
        kkt_residual: sol.kkt_residual,
        kkt_scale: sol.scale,
        kappa,
        iterations: sol.iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::localkernel::{local_weights_from_distances, KernelSpec};

    fn weights(n: usize) -> LocalWeights<f64> {
        local_weights_from_distances(&vec![0.5; n], n, KernelSpec::BOX).unwrap()
    }

    #[test]
    fn two_point_hand_example() {
        let s = ScoreMatrix::from_matrix(Matrix::from_rows(&[vec![-1.0], vec![1.0]]));
        let e = weighted_score_eigen(&s, &weights(2)).unwrap();
        assert!(e.mu_hat[0].abs() < 1e-15);
        assert!((e.w[(0, 0)] - 1.0).abs() < 1e-15);
        assert!((e.gamma_tilde[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn identical_scores_give_zero_covariance() {
        let s = ScoreMatrix::from_matrix(Matrix::from_rows(&[vec![0.3, -0.2], vec![0.3, -0.2], vec![0.3, -0.2]]));
        let e = weighted_score_eigen(&s, &weights(3)).unwrap();
        assert!(e.gamma_tilde.iter().all(|&g| g == 0.0));
        assert!(e.upper().iter().all(|&u| u == UPPER_SENTINEL));
    }

    #[test]
    fn single_active_point_is_rejected() {
        let s = ScoreMatrix::from_matrix(Matrix::from_rows(&[vec![0.1], vec![0.2], vec![0.3]]));
        let w = local_weights_from_distances(&[0.1, 0.5, 0.9], 1, KernelSpec::BOX).unwrap();
        assert!(matches!(
            weighted_score_eigen(&s, &w),
            Err(FllrError::TooFewActive { required: 2, found: 1 })
        ));
    }

    fn toy() -> (ScoreMatrix<f64>, LocalWeights<f64>) {
        let s = ScoreMatrix::from_matrix(Matrix::from_rows(&[
            vec![0.2, -0.1],
            vec![-0.4, 0.3],
            vec![0.5, 0.6],
            vec![0.1, -0.7],
            vec![-0.3, 0.2],
        ]));
        let w = local_weights_from_distances(&[0.1, 0.2, 0.3, 0.4, 0.9], 4, KernelSpec::TRIANGLE).unwrap();
        (s, w)
    }

    #[test]
    fn zero_plugin_kills_d2_d3() {
        let (s, w) = toy();
        let e = weighted_score_eigen(&s, &w).unwrap();
        let c = mse_components(&s, &w, &e, &[0.0, 0.0], 0.5).unwrap();
        assert_eq!(c.d2, 0.0);
        assert!(c.d3.iter().all(|&x| x == 0.0));
        assert_eq!(estimated_bias(&c, &e.upper()), 0.0);
    }

    #[test]
    fn infinite_penalty_collapses() {
        let (s, w) = toy();
        let e = weighted_score_eigen(&s, &w).unwrap();
        let c = mse_components(&s, &w, &e, &[1.0, -2.0], 0.5).unwrap();
        let zero = [0.0, 0.0];
        assert!((estimated_bias(&c, &zero) - c.a * c.d2).abs() < 1e-15);
        let expected: f64 = w.deltas.iter().map(|d| d * d).sum::<f64>() * 0.25 / 25.0 * c.a * c.a;
        assert!((estimated_variance(&c, &e, &s, &w, &zero) - expected).abs() < 1e-15);
        let y = [1.0, 2.0, 3.0, 4.0, 50.0];
        let fit = predict_ridge(&s, &w, &y, &e, &c, &zero).unwrap();
        let mean = (0..5).map(|i| w.deltas[i] * y[i]).sum::<f64>() / w.deltas.iter().sum::<f64>();
        assert!((fit.m_hat - mean).abs() < 1e-13);
        assert!(fit.lambda.iter().all(|l| l.is_infinite()));
    }

    #[test]
    fn noiseless_variance_is_zero() {
        let (s, w) = toy();
        let e = weighted_score_eigen(&s, &w).unwrap();
        let c = mse_components(&s, &w, &e, &[1.0, -2.0], 0.0).unwrap();
        assert_eq!(estimated_variance(&c, &e, &s, &w, &e.upper()), 0.0);
    }

    #[test]
    fn objective_matches_bias_and_variance() {
        let (s, w) = toy();
        let e = weighted_score_eigen(&s, &w).unwrap();
        let c = mse_components(&s, &w, &e, &[1.0, -2.0], 0.5).unwrap();
        let p = assemble_qp(&c, &e, &s, &w).unwrap();
        let b = e.upper();
        let bias = estimated_bias(&c, &b);
        let direct = bias * bias + estimated_variance(&c, &e, &s, &w, &b);
        assert!((p.objective(&b) - direct).abs() < 1e-10 * (1.0 + direct));
    }

    #[test]
    fn pipeline_never_increases_estimated_mse() {
        let (s, w) = toy();
        let y = [0.3, -0.1, 0.9, 0.2, 0.0];
        let r = fit_ridge(&s, &w, &y, &[1.0, -2.0], 0.5).unwrap();
        assert!(r.fit.est_mse <= r.unpenalized_mse + 1e-12);
        assert!(r.kkt_residual <= 1e-8 * r.kkt_scale);
        for (&b, &u) in r.fit.b.iter().zip(&weighted_score_eigen(&s, &w).unwrap().upper()) {
            assert!((0.0..=u).contains(&b));
        }
    }
}
