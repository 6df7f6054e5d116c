//! Type-I kernels, k-nearest-neighbor bandwidths and self-normalized local
//! weights `Δ_i` at a query curve.

use crate::error::{FllrError, Result};
use crate::funcspace::{l2_distance_values, Curve, CurveSet};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KernelKind {
    /// `K(u) = 1` on `[0, 1]`.
    #[default]
    Box,
    /// `K(u) = 2(1 − u)` on `[0, 1]`. Vanishes at `u = 1`, so the strict
    /// lower bound `c_K > 0` of a Type-I kernel does not hold there.
    Triangle,
}

/// Kernel supported on `[0, 1]`, integrating to one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct KernelSpec {
    pub kind: KernelKind,
}

impl KernelSpec {
    pub const BOX: Self = Self { kind: KernelKind::Box };
    pub const TRIANGLE: Self = Self {
        kind: KernelKind::Triangle,
    };

    pub fn eval<T: Real>(&self, u: T) -> T {
        if u < T::zero() || u > T::one() {
            return T::zero();
        }
        match self.kind {
            KernelKind::Box => T::one(),
            KernelKind::Triangle => T::lit(2.0) * (T::one() - u),
        }
    }

    /// Bound constants `(c_K, C_K)` with `c_K 1_[0,1] ≤ K ≤ C_K 1_[0,1]`.
    pub fn bounds(&self) -> (f64, f64) {
        match self.kind {
            KernelKind::Box => (1.0, 1.0),
            KernelKind::Triangle => (0.0, 2.0),
        }
    }
}

/// Neighbor count and the realized bandwidth it implies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandwidthSpec<T> {
    pub k_h: usize,
    pub realized_h: T,
}

/// Self-normalized kernel weights: `mean(deltas) = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalWeights<T> {
    pub deltas: Vec<T>,
    /// Indices with `Δ_i > 0`, ascending.
    pub active: Vec<usize>,
    pub bandwidth: BandwidthSpec<T>,
}

impl<T: Real> LocalWeights<T> {
    pub fn n(&self) -> usize {
        self.deltas.len()
    }

    pub fn active_count(&self) -> usize {
        self.active.len()
    }

    /// `a = (n⁻¹ ΣΔ_i)⁻¹`, one by construction up to rounding.
    pub fn normalization(&self) -> T {
        T::from_count(self.n()) / self.deltas.iter().copied().sum::<T>()
    }
}

fn inflation<T: Real>() -> T {
    T::one() + T::lit(1e-12).max(T::epsilon() * T::lit(4.0))
}

/// `k`-th smallest distance, inflated by `1 + 1e-12` so that ties at the
/// `k`-th distance are all inside the bandwidth.
pub fn knn_bandwidth_from_distances<T: Real>(distances: &[T], k: usize) -> Result<BandwidthSpec<T>> {
    let n = distances.len();
    if k == 0 || k > n {
        return Err(FllrError::NeighborCount { k, n });
    }
    if distances.iter().any(|d| !d.is_finite() || *d < T::zero()) {
        return Err(FllrError::NonFinite("distances"));
    }
    let mut sorted = distances.to_vec();
    let (_, kth, _) = sorted.select_nth_unstable_by(k - 1, |a, b| a.partial_cmp(b).expect("finite"));
    let realized_h = (*kth * inflation::<T>()).max(T::min_positive_value());
    Ok(BandwidthSpec { k_h: k, realized_h })
}

pub fn distances_to<T: Real>(train: &CurveSet<T>, center: &Curve<T>) -> Result<Vec<T>> {
    train.check_grid(center.grid())?;
    let grid = train.grid();
    Ok(train
        .curves()
        .iter()
        .map(|c| l2_distance_values(grid, c.values(), center.values()))
        .collect())
}

pub fn knn_bandwidth<T: Real>(train: &CurveSet<T>, center: &Curve<T>, k: usize) -> Result<BandwidthSpec<T>> {
    knn_bandwidth_from_distances(&distances_to(train, center)?, k)
}

/// Normalizes raw kernel values to mean one. Invariant to rescaling `raw`.
pub fn normalize_kernel_values<T: Real>(raw: &[T], bandwidth: BandwidthSpec<T>) -> Result<LocalWeights<T>> {
    let total: T = raw.iter().copied().sum();
    if !(total > T::zero()) || !total.is_finite() {
        return Err(FllrError::ZeroWeights);
    }
    let scale = T::from_count(raw.len()) / total;
    let deltas: Vec<T> = raw.iter().map(|&r| r * scale).collect();
    let active = deltas
        .iter()
        .enumerate()
        .filter(|(_, &d)| d > T::zero())
        .map(|(i, _)| i)
        .collect();
    Ok(LocalWeights {
        deltas,
        active,
        bandwidth,
    })
}

pub fn local_weights_from_distances<T: Real>(
    distances: &[T],
    k: usize,
    kernel: KernelSpec,
) -> Result<LocalWeights<T>> {
    let bw = knn_bandwidth_from_distances(distances, k)?;
    let raw: Vec<T> = distances.iter().map(|&d| kernel.eval(d / bw.realized_h)).collect();
    normalize_kernel_values(&raw, bw)
}

/// `Δ_i = K(‖X_i − x‖/h) / mean_l K(‖X_l − x‖/h)` with `h` the inflated
/// distance to the `k`-th nearest training curve.
pub fn local_weights<T: Real>(
    train: &CurveSet<T>,
    center: &Curve<T>,
    k: usize,
    kernel: KernelSpec,
) -> Result<LocalWeights<T>> {
    local_weights_from_distances(&distances_to(train, center)?, k, kernel)
}
