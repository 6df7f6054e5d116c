//! Unpenalized baselines: functional local linear regression and the
//! functional Nadaraya–Watson estimator.

use crate::error::{FllrError, Result};
use crate::funcspace::{BasisSystem, Curve, ScoreMatrix};
use crate::linalg::{singular_values, Matrix, Qr};
use crate::localkernel::LocalWeights;
use crate::scalar::{tol_or_eps, Real};

/// Largest acceptable condition number of the weighted normal matrix.
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, PartialEq)]
pub struct LocalFit<T> {
    /// Intercept, the estimate of `m(x)`.
    pub m_hat: T,
    /// Derivative scores `m'_x(φ_j)`, `j = 1..J`.
    pub beta: Vec<T>,
    pub df_used: usize,
    /// Condition estimate of `n⁻¹ C_xᵀ Δ C_x`.
    pub condition: T,
}

/// Weighted local linear fit
/// `argmin Σ_i Δ_i (Y_i − m − c_iᵀβ)²` by Householder QR of the `√Δ`-scaled
/// design restricted to the active points.
pub fn fllr_fit<T: Real>(scores: &ScoreMatrix<T>, y: &[T], weights: &LocalWeights<T>) -> Result<LocalFit<T>> {
    let n = scores.n();
    let j = scores.dim();
    if y.len() != n || weights.n() != n {
        return Err(FllrError::Shape(format!(
            "{n} score rows, {} responses, {} weights",
            y.len(),
            weights.n()
        )));
    }
    let active = &weights.active;
    if active.len() < j + 2 {
        return Err(FllrError::TooFewActive {
            required: j + 2,
            found: active.len(),
        });
    }

    let mut design = Matrix::zeros(active.len(), j + 1);
    let mut rhs = Vec::with_capacity(active.len());
    for (r, &i) in active.iter().enumerate() {
        let s = weights.deltas[i].sqrt();
        let row = design.row_mut(r);
        row[0] = s;
        for (dst, &c) in row[1..].iter_mut().zip(scores.row(i)) {
            *dst = s * c;
        }
        rhs.push(s * y[i]);
    }

    let qr = Qr::new(&design);
    if !qr.dependent_columns(tol_or_eps::<T>(1e-13, 64.0)).is_empty() {
        return Err(FllrError::SingularFit {
            condition: f64::INFINITY,
        });
    }
    let sv = singular_values(&qr.r());
    let smin = sv[sv.len() - 1];
    let condition = if smin > T::zero() {
        let ratio = sv[0] / smin;
        ratio * ratio
    } else {
        T::infinity()
    };
    if !(condition <= T::lit(MAX_CONDITION)) {
        return Err(FllrError::SingularFit {
            condition: condition.to_f64().unwrap_or(f64::INFINITY),
        });
    }

    let coef = qr.solve_least_squares(&rhs);
    Ok(LocalFit {
        m_hat: coef[0],
        beta: coef[1..].to_vec(),
        df_used: active.len(),
        condition,
    })
}

/// Kernel-weighted mean of the responses over the active points.
pub fn nw_fit<T: Real>(y: &[T], weights: &LocalWeights<T>) -> Result<T> {
    if y.len() != weights.n() {
        return Err(FllrError::Shape(format!(
            "{} responses for {} weights",
            y.len(),
            weights.n()
        )));
    }
    if weights.active.is_empty() {
        return Err(FllrError::ZeroWeights);
    }
    let (num, den) = weights
        .active
        .iter()
        .fold((T::zero(), T::zero()), |(num, den), &i| {
            (num + weights.deltas[i] * y[i], den + weights.deltas[i])
        });
    Ok(num / den)
}

/// Derivative scores tied to the basis they are expressed in.
#[derive(Debug, Clone)]
pub struct DerivativeEstimate<'a, T> {
    pub scores: Vec<T>,
    pub basis: &'a BasisSystem<T>,
}

/// `Σ_j scores_j φ_j` evaluated on the grid.
pub fn reconstruct_derivative<T: Real>(est: &DerivativeEstimate<'_, T>) -> Result<Curve<T>> {
    if est.scores.len() > est.basis.len() {
        return Err(FllrError::Shape(format!(
            "{} scores for a {}-function basis",
            est.scores.len(),
            est.basis.len()
        )));
    }
    let grid = est.basis.grid().clone();
    let mut values = vec![T::zero(); grid.len()];
    for (&b, phi) in est.scores.iter().zip(est.basis.functions()) {
        for (v, &p) in values.iter_mut().zip(phi.values()) {
            *v = *v + b * p;
        }
    }
    Curve::new(grid, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::localkernel::{local_weights_from_distances, KernelSpec};

    fn toy_scores() -> ScoreMatrix<f64> {
        ScoreMatrix::from_matrix(Matrix::from_rows(&[
            vec![0.0],
            vec![0.5],
            vec![-0.3],
            vec![1.2],
            vec![-0.9],
        ]))
    }

    #[test]
    fn constant_response() {
        let s = toy_scores();
        let w = local_weights_from_distances(&[0.1, 0.2, 0.3, 0.4, 0.5], 5, KernelSpec::TRIANGLE).unwrap();
        let fit = fllr_fit(&s, &[7.0; 5], &w).unwrap();
        assert!((fit.m_hat - 7.0).abs() < 1e-12);
        assert!(fit.beta[0].abs() < 1e-12);
    }

    #[test]
    fn exact_linear_reproduction() {
        let s = toy_scores();
        let y: Vec<f64> = (0..5).map(|i| 2.0 + 5.0 * s.row(i)[0]).collect();
        let w = local_weights_from_distances(&[0.1, 0.2, 0.3, 0.4, 0.5], 5, KernelSpec::TRIANGLE).unwrap();
        let fit = fllr_fit(&s, &y, &w).unwrap();
        assert!((fit.m_hat - 2.0).abs() < 1e-10);
        assert!((fit.beta[0] - 5.0).abs() < 1e-10);
        assert_eq!(fit.df_used, 5);
    }

    #[test]
    fn too_few_active_points() {
        let s = toy_scores();
        let w = local_weights_from_distances(&[0.1, 0.2, 0.3, 0.4, 0.5], 2, KernelSpec::BOX).unwrap();
        assert!(matches!(
            fllr_fit(&s, &[1.0; 5], &w),
            Err(FllrError::TooFewActive { required: 3, found: 2 })
        ));
    }

    #[test]
    fn identical_scores_are_singular() {
        let s = ScoreMatrix::from_matrix(Matrix::from_rows(&[vec![0.4], vec![0.4], vec![0.4], vec![0.4]]));
        let w = local_weights_from_distances(&[0.1; 4], 4, KernelSpec::BOX).unwrap();
        assert!(matches!(fllr_fit(&s, &[1.0, 2.0, 3.0, 4.0], &w), Err(FllrError::SingularFit { .. })));
    }

    #[test]
    fn intercept_only_is_weighted_mean() {
        let s: ScoreMatrix<f64> = ScoreMatrix::from_matrix(Matrix::zeros(4, 0));
        let w = local_weights_from_distances(&[0.1; 4], 4, KernelSpec::BOX).unwrap();
        let y = [1.0, 2.0, 4.0, 9.0];
        let fit = fllr_fit(&s, &y, &w).unwrap();
        assert!((fit.m_hat - 4.0).abs() < 1e-12);
        assert!(fit.beta.is_empty());
    }

    #[test]
    fn nw_examples() {
        let w: LocalWeights<f64> = local_weights_from_distances(&[0.1, 0.1, 0.9], 2, KernelSpec::BOX).unwrap();
        assert!((nw_fit(&[1.0, 3.0, 100.0], &w).unwrap() - 2.0).abs() < 1e-15);
        assert!((nw_fit(&[4.0; 3], &w).unwrap() - 4.0).abs() < 1e-15);
        let tri = local_weights_from_distances(&[0.1, 0.25, 0.4], 3, KernelSpec::TRIANGLE).unwrap();
        let h = 0.4 * (1.0 + 1e-12);
        let k: Vec<f64> = [0.1, 0.25, 0.4].iter().map(|d| 2.0 * (1.0 - d / h)).collect();
        let y = [1.0, -2.0, 5.0];
        let expected = (k[0] * y[0] + k[1] * y[1] + k[2] * y[2]) / (k[0] + k[1] + k[2]);
        assert!((nw_fit(&y, &tri).unwrap() - expected).abs() < 1e-12);
    }
}
