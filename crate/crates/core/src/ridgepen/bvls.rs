//! Bounded-variable least squares, `min ‖A x − s‖` subject to `l ≤ x ≤ u`,
//! by the active-set method of Stark and Parker. Variables start at their
//! lower bounds; each outer iteration frees the lowest-index variable whose
//! gradient violates the Kuhn–Tucker conditions, and the inner loop steps
//! toward the free-variable least-squares solution until it is feasible.

use crate::error::{FllrError, Result};
use crate::linalg::{norm, Matrix, Qr};
use crate::scalar::{tol_or_eps, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Bound {
    Lower,
    Upper,
    Free,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BvlsSolution<T> {
    pub x: Vec<T>,
    /// Max Kuhn–Tucker violation at `x`, in gradient units.
    pub kkt_residual: T,
    /// Scale the residual is measured against: `‖A‖_F (‖A x‖ + ‖s‖)`.
    pub scale: T,
    pub iterations: usize,
}

/// Gradient of `½‖A x − s‖²`.
pub fn gradient<T: Real>(a: &Matrix<T>, s: &[T], x: &[T]) -> Vec<T> {
    let ax = a.mul_vec(x);
    let r: Vec<T> = ax.iter().zip(s).map(|(&p, &q)| p - q).collect();
    a.tr_mul_vec(&r)
}

pub fn kkt_scale<T: Real>(a: &Matrix<T>, s: &[T], x: &[T]) -> T {
    a.frobenius_norm() * (norm(&a.mul_vec(x)) + norm(s))
}

/// Kuhn–Tucker violation: interior components need a zero gradient, a
/// component at its lower (upper) bound needs a nonnegative (nonpositive) one.
pub fn kkt_residual<T: Real>(a: &Matrix<T>, s: &[T], lower: &[T], upper: &[T], x: &[T]) -> T {
    let g = gradient(a, s, x);
    g.iter()
        .zip(x)
        .zip(lower.iter().zip(upper))
        .fold(T::zero(), |acc, ((&gj, &xj), (&lj, &uj))| {
            let viol = if xj <= lj && xj >= uj {
                T::zero()
            } else if xj <= lj {
                (-gj).max(T::zero())
            } else if xj >= uj {
                gj.max(T::zero())
            } else {
                gj.abs()
            };
            acc.max(viol)
        })
}

/// Solves the box-constrained least-squares problem. `max_outer` caps the
/// number of variable-freeing iterations.
pub fn bvls<T: Real>(a: &Matrix<T>, s: &[T], lower: &[T], upper: &[T], max_outer: usize) -> Result<BvlsSolution<T>> {
    let n = a.cols();
    if s.len() != a.rows() || lower.len() != n || upper.len() != n {
        return Err(FllrError::Shape("bvls dimensions disagree".into()));
    }
    if lower.iter().zip(upper).any(|(l, u)| !(l <= u)) {
        return Err(FllrError::InvalidArgument("bvls lower bound above upper bound".into()));
    }
    if !a.is_finite() || s.iter().any(|v| !v.is_finite()) {
        return Err(FllrError::NonFinite("bvls inputs"));
    }

    let kkt_tol = tol_or_eps::<T>(1e-12, 1e3);
    let rank_tol = tol_or_eps::<T>(1e-12, 1e3);
    let mut x = lower.to_vec();
    let mut state = vec![Bound::Lower; n];
    for j in 0..n {
        if lower[j] == upper[j] {
            state[j] = Bound::Lower;
        }
    }
    let mut blocked = vec![false; n];
    let mut iterations = 0usize;

    loop {
        let g = gradient(a, s, &x);
        let tol = kkt_tol * kkt_scale(a, s, &x).max(T::min_positive_value());
        let candidate = (0..n).find(|&j| {
            !blocked[j]
                && lower[j] < upper[j]
                && match state[j] {
                    Bound::Lower => -g[j] > tol,
                    Bound::Upper => g[j] > tol,
                    Bound::Free => false,
                }
        });
        let Some(entering) = candidate else { break };
        if iterations >= max_outer {
            let residual = kkt_residual(a, s, lower, upper, &x);
            // close enough if the violation is at the accuracy the callers check
            let scale = kkt_scale(a, s, &x);
            if residual <= tol_or_eps::<T>(1e-8, 1e5) * scale {
                break;
            }
            return Err(FllrError::NoConvergence {
                iterations,
                residual: residual.to_f64().unwrap_or(f64::NAN),
                last_iterate: x.iter().map(|v| v.to_f64().unwrap_or(f64::NAN)).collect(),
            });
        }
        iterations += 1;
        state[entering] = Bound::Free;

        let mut bounced = false;
        // each pass pins at least one variable, so n + 1 passes suffice
        for _ in 0..=n {
            let free: Vec<usize> = (0..n).filter(|&j| state[j] == Bound::Free).collect();
            if free.is_empty() {
                break;
            }
            let mut rhs = s.to_vec();
            for j in (0..n).filter(|&j| state[j] != Bound::Free) {
                if x[j] != T::zero() {
                    for (r, ri) in rhs.iter_mut().enumerate() {
                        *ri = *ri - a[(r, j)] * x[j];
                    }
                }
            }
            // dependent free columns stay at their current value
            let sub = a.select_columns(&free);
            let qr = Qr::new(&sub);
            let dependent = qr.dependent_columns(rank_tol);
            let (cols, z) = if dependent.is_empty() {
                (free.clone(), qr.solve_least_squares(&rhs))
            } else {
                let indep: Vec<usize> = (0..free.len()).filter(|k| !dependent.contains(k)).collect();
                for &k in &dependent {
                    let j = free[k];
                    if x[j] != T::zero() {
                        for (r, ri) in rhs.iter_mut().enumerate() {
                            *ri = *ri - a[(r, j)] * x[j];
                        }
                    }
                }
                let cols: Vec<usize> = indep.iter().map(|&k| free[k]).collect();
                if cols.is_empty() {
                    break;
                }
                let z = Qr::new(&a.select_columns(&cols)).solve_least_squares(&rhs);
                (cols, z)
            };

            if cols
                .iter()
                .zip(&z)
                .all(|(&j, &zj)| zj > lower[j] && zj < upper[j])
            {
                for (&j, &zj) in cols.iter().zip(&z) {
                    x[j] = zj;
                }
                break;
            }

            // step towards z until the first free variable reaches a bound;
            // that variable is pinned explicitly so rounding cannot leave it
            // a hair inside the box
            let mut alpha = T::one();
            let mut blocking: Option<(usize, Bound)> = None;
            for (&j, &zj) in cols.iter().zip(&z) {
                let step = zj - x[j];
                let (ratio, side) = if zj <= lower[j] && step < T::zero() {
                    ((lower[j] - x[j]) / step, Bound::Lower)
                } else if zj >= upper[j] && step > T::zero() {
                    ((upper[j] - x[j]) / step, Bound::Upper)
                } else if zj <= lower[j] && step == T::zero() {
                    (T::zero(), Bound::Lower)
                } else if zj >= upper[j] && step == T::zero() {
                    (T::zero(), Bound::Upper)
                } else {
                    continue;
                };
                if blocking.is_none() || ratio < alpha {
                    alpha = ratio;
                    blocking = Some((j, side));
                }
            }
            let alpha = alpha.max(T::zero()).min(T::one());
            let mut pinned = Vec::new();
            for (&j, &zj) in cols.iter().zip(&z) {
                let xj = x[j] + alpha * (zj - x[j]);
                let forced = blocking.filter(|&(b, _)| b == j).map(|(_, side)| side);
                if forced == Some(Bound::Lower) || xj <= lower[j] {
                    x[j] = lower[j];
                    state[j] = Bound::Lower;
                    pinned.push(j);
                } else if forced == Some(Bound::Upper) || xj >= upper[j] {
                    x[j] = upper[j];
                    state[j] = Bound::Upper;
                    pinned.push(j);
                } else {
                    x[j] = xj;
                }
            }
            if alpha == T::zero() && pinned == [entering] {
                bounced = true;
                break;
            }
        }
        if bounced {
            blocked[entering] = true;
        } else {
            blocked.iter_mut().for_each(|b| *b = false);
        }
    }

    let kkt = kkt_residual(a, s, lower, upper, &x);
    let scale = kkt_scale(a, s, &x);
    Ok(BvlsSolution {
        x,
        kkt_residual: kkt,
        scale,
        iterations,
    })
}
