//! Discretized functional data: grids with trapezoid quadrature, curves,
//! curve sets, orthonormal basis systems and score projection, plus
//! local-linear presmoothing of noisy curves.

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{FllrError, Result};
use crate::linalg::{symmetric_eigen, Matrix};
use crate::scalar::{tol_or_eps, Real};

/// Ordered abscissae `t_1 < … < t_p` with trapezoid quadrature weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid<T> {
    points: Vec<T>,
    weights: Vec<T>,
}

impl<T: Real> Grid<T> {
    pub fn new(points: Vec<T>) -> Result<Self> {
        if points.len() < 3 {
            return Err(FllrError::InvalidGrid(format!(
                "need at least 3 points, got {}",
                points.len()
            )));
        }
        if points.iter().any(|t| !t.is_finite()) {
            return Err(FllrError::NonFinite("grid points"));
        }
        if points.windows(2).any(|w| w[1] <= w[0]) {
            return Err(FllrError::InvalidGrid("points must be strictly increasing".into()));
        }
        let p = points.len();
        let half = T::lit(0.5);
        let mut weights = vec![T::zero(); p];
        for k in 0..p - 1 {
            let h = (points[k + 1] - points[k]) * half;
            weights[k] = weights[k] + h;
            weights[k + 1] = weights[k + 1] + h;
        }
        Ok(Self { points, weights })
    }

    /// `count` equispaced points from `start` to `end` inclusive.
    pub fn equispaced(start: T, end: T, count: usize) -> Result<Self> {
        if count < 3 {
            return Err(FllrError::InvalidGrid(format!("need at least 3 points, got {count}")));
        }
        let step = (end - start) / T::from_count(count - 1);
        let points = (0..count)
            .map(|k| if k + 1 == count { end } else { start + step * T::from_count(k) })
            .collect();
        Self::new(points)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.points.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[T] {
        &self.points
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn start(&self) -> T {
        self.points[0]
    }

    pub fn end(&self) -> T {
        self.points[self.points.len() - 1]
    }

    pub fn length(&self) -> T {
        self.end() - self.start()
    }

    /// Quadrature of `Σ_k w_k f_k g_k`.
    pub fn integrate_product(&self, f: &[T], g: &[T]) -> T {
        self.weights
            .iter()
            .zip(f.iter().zip(g))
            .fold(T::zero(), |acc, (&w, (&a, &b))| acc + w * a * b)
    }

    pub fn integrate(&self, f: &[T]) -> T {
        self.weights.iter().zip(f).fold(T::zero(), |acc, (&w, &a)| acc + w * a)
    }
}

fn same_grid<T: Real>(a: &Arc<Grid<T>>, b: &Arc<Grid<T>>) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

/// A function sampled on a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct Curve<T> {
    grid: Arc<Grid<T>>,
    values: Vec<T>,
}

impl<T: Real> Curve<T> {
    pub fn new(grid: Arc<Grid<T>>, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(FllrError::Shape(format!(
                "curve has {} values on a {}-point grid",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(FllrError::NonFinite("curve values"));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: Arc<Grid<T>>, f: impl Fn(T) -> T) -> Result<Self> {
        let values = grid.points().iter().map(|&t| f(t)).collect();
        Self::new(grid, values)
    }

    pub fn zeros(grid: Arc<Grid<T>>) -> Self {
        let values = vec![T::zero(); grid.len()];
        Self { grid, values }
    }

    pub fn grid(&self) -> &Arc<Grid<T>> {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    fn check_grid(&self, other: &Self) -> Result<()> {
        if same_grid(&self.grid, &other.grid) {
            Ok(())
        } else {
            Err(FllrError::GridMismatch)
        }
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_grid(other)?;
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| a - b).collect();
        Ok(Self {
            grid: self.grid.clone(),
            values,
        })
    }
}

/// Quadrature inner product `⟨f, g⟩ = Σ_k w_k f(t_k) g(t_k)`.
pub fn inner_product<T: Real>(f: &Curve<T>, g: &Curve<T>) -> Result<T> {
    f.check_grid(g)?;
    Ok(f.grid.integrate_product(&f.values, &g.values))
}

/// L² distance `‖f − g‖` under the grid quadrature.
pub fn l2_distance<T: Real>(f: &Curve<T>, g: &Curve<T>) -> Result<T> {
    f.check_grid(g)?;
    Ok(l2_distance_values(&f.grid, &f.values, &g.values))
}

pub(crate) fn l2_distance_values<T: Real>(grid: &Grid<T>, f: &[T], g: &[T]) -> T {
    grid.weights()
        .iter()
        .zip(f.iter().zip(g))
        .fold(T::zero(), |acc, (&w, (&a, &b))| {
            let d = a - b;
            acc + w * d * d
        })
        .max(T::zero())
        .sqrt()
}

/// Curves on one shared grid, optionally paired with scalar responses.
#[derive(Debug, Clone)]
pub struct CurveSet<T> {
    grid: Arc<Grid<T>>,
    curves: Vec<Curve<T>>,
    responses: Option<Vec<T>>,
}

impl<T: Real> CurveSet<T> {
    pub fn new(grid: Arc<Grid<T>>, curves: Vec<Curve<T>>, responses: Option<Vec<T>>) -> Result<Self> {
        if curves.iter().any(|c| !same_grid(&grid, &c.grid)) {
            return Err(FllrError::GridMismatch);
        }
        if let Some(y) = &responses {
            if y.len() != curves.len() {
                return Err(FllrError::Shape(format!(
                    "{} responses for {} curves",
                    y.len(),
                    curves.len()
                )));
            }
            if y.iter().any(|v| !v.is_finite()) {
                return Err(FllrError::NonFinite("responses"));
            }
        }
        // all curves point at the set's grid object
        let curves = curves
            .into_iter()
            .map(|c| Curve {
                grid: grid.clone(),
                values: c.values,
            })
            .collect();
        Ok(Self {
            grid,
            curves,
            responses,
        })
    }

    /// Builds from raw value rows, one per curve.
    pub fn from_rows(grid: Arc<Grid<T>>, rows: Vec<Vec<T>>, responses: Option<Vec<T>>) -> Result<Self> {
        let curves = rows
            .into_iter()
            .map(|r| Curve::new(grid.clone(), r))
            .collect::<Result<Vec<_>>>()?;
        Self::new(grid, curves, responses)
    }

    pub fn grid(&self) -> &Arc<Grid<T>> {
        &self.grid
    }

    pub fn curves(&self) -> &[Curve<T>] {
        &self.curves
    }

    pub fn len(&self) -> usize {
        self.curves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.curves.is_empty()
    }

    pub fn responses(&self) -> Option<&[T]> {
        self.responses.as_deref()
    }

    pub fn with_responses(mut self, responses: Vec<T>) -> Result<Self> {
        if responses.len() != self.curves.len() {
            return Err(FllrError::Shape(format!(
                "{} responses for {} curves",
                responses.len(),
                self.curves.len()
            )));
        }
        self.responses = Some(responses);
        Ok(self)
    }

    /// Sub-sample by index, keeping responses aligned.
    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            grid: self.grid.clone(),
            curves: indices.iter().map(|&i| self.curves[i].clone()).collect(),
            responses: self
                .responses
                .as_ref()
                .map(|y| indices.iter().map(|&i| y[i]).collect()),
        }
    }

    pub fn check_grid(&self, grid: &Arc<Grid<T>>) -> Result<()> {
        if same_grid(&self.grid, grid) {
            Ok(())
        } else {
            Err(FllrError::GridMismatch)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisKind {
    Fourier,
    Fpca,
}

/// `J` functions orthonormal under the grid quadrature.
#[derive(Debug, Clone)]
pub struct BasisSystem<T> {
    grid: Arc<Grid<T>>,
    functions: Vec<Curve<T>>,
    kind: BasisKind,
}

impl<T: Real> BasisSystem<T> {
    /// Validates orthonormality (`|⟨φ_j, φ_k⟩ − δ_jk| ≤ 1e-8`).
    pub fn new(grid: Arc<Grid<T>>, functions: Vec<Curve<T>>, kind: BasisKind) -> Result<Self> {
        if functions.iter().any(|f| !same_grid(&grid, &f.grid)) {
            return Err(FllrError::GridMismatch);
        }
        let basis = Self {
            grid,
            functions,
            kind,
        };
        let dev = basis.orthonormality_error();
        if dev > tol_or_eps::<T>(1e-8, 1e3) {
            return Err(FllrError::NotOrthonormal(dev.to_f64().unwrap_or(f64::NAN)));
        }
        Ok(basis)
    }

    /// Max deviation of the quadrature Gram matrix from the identity.
    pub fn orthonormality_error(&self) -> T {
        let mut dev = T::zero();
        for (j, fj) in self.functions.iter().enumerate() {
            for (k, fk) in self.functions.iter().enumerate().skip(j) {
                let ip = self.grid.integrate_product(&fj.values, &fk.values);
                let target = if j == k { T::one() } else { T::zero() };
                dev = dev.max((ip - target).abs());
            }
        }
        dev
    }

    pub fn grid(&self) -> &Arc<Grid<T>> {
        &self.grid
    }

    pub fn functions(&self) -> &[Curve<T>] {
        &self.functions
    }

    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }

    pub fn kind(&self) -> BasisKind {
        self.kind
    }

    /// The first `j` functions.
    pub fn truncate(&self, j: usize) -> Self {
        Self {
            grid: self.grid.clone(),
            functions: self.functions[..j.min(self.functions.len())].to_vec(),
            kind: self.kind,
        }
    }
}

/// Value of the `j`-th (1-based) trigonometric basis function on `[start, start + length]`:
/// `φ_1 = 1/√L`, `φ_{2k} = √(2/L) cos(2πk s)`, `φ_{2k+1} = √(2/L) sin(2πk s)` with
/// `s = (t − start)/L`.
pub fn fourier_value<T: Real>(j: usize, t: T, start: T, length: T) -> T {
    assert!(j >= 1, "fourier index is 1-based");
    let s = (t - start) / length;
    if j == 1 {
        return T::one() / length.sqrt();
    }
    let k = T::from_count(j / 2);
    let arg = T::lit(2.0 * std::f64::consts::PI) * k * s;
    let amp = (T::lit(2.0) / length).sqrt();
    if j % 2 == 0 {
        amp * arg.cos()
    } else {
        amp * arg.sin()
    }
}

/// First `j` functions of the trigonometric basis on the grid's interval.
pub fn fourier_basis<T: Real>(grid: Arc<Grid<T>>, j: usize) -> Result<BasisSystem<T>> {
    let (start, length) = (grid.start(), grid.length());
    let functions = (1..=j)
        .map(|idx| Curve::from_fn(grid.clone(), |t| fourier_value(idx, t, start, length)))
        .collect::<Result<Vec<_>>>()?;
    BasisSystem::new(grid, functions, BasisKind::Fourier)
}

/// Leading `j` eigenfunctions of the sample covariance operator of `data`,
/// discretized with the grid quadrature. Curves are centered at their
/// pointwise mean. Each eigenfunction is signed so that its integral is
/// nonnegative (first nonzero value positive on ties).
pub fn estimate_fpca_basis<T: Real>(data: &CurveSet<T>, j: usize) -> Result<BasisSystem<T>> {
    let n = data.len();
    let grid = data.grid().clone();
    let p = grid.len();
    if j == 0 {
        return BasisSystem::new(grid, Vec::new(), BasisKind::Fpca);
    }
    if n < 2 {
        return Err(FllrError::RankExceeded { requested: j, rank: 0 });
    }
    if j > (n - 1).min(p) {
        return Err(FllrError::RankExceeded {
            requested: j,
            rank: (n - 1).min(p),
        });
    }

    let nf = T::from_count(n);
    let mean: Vec<T> = (0..p)
        .map(|k| data.curves().iter().map(|c| c.values[k]).sum::<T>() / nf)
        .collect();
    let sqrt_w: Vec<T> = grid.weights().iter().map(|w| w.sqrt()).collect();
    // rows: centered curves scaled by √w
    let centered: Vec<Vec<T>> = data
        .curves()
        .iter()
        .map(|c| {
            c.values
                .iter()
                .zip(&mean)
                .zip(&sqrt_w)
                .map(|((&v, &m), &s)| (v - m) * s)
                .collect()
        })
        .collect();
    let denom = T::from_count(n - 1);
    let mut cov = Matrix::zeros(p, p);
    for row in &centered {
        for a in 0..p {
            let ra = row[a];
            if ra == T::zero() {
                continue;
            }
            for b in a..p {
                cov[(a, b)] = cov[(a, b)] + ra * row[b];
            }
        }
    }
    for a in 0..p {
        for b in a..p {
            let v = cov[(a, b)] / denom;
            cov[(a, b)] = v;
            cov[(b, a)] = v;
        }
    }

    let eig = symmetric_eigen(&cov);
    let top = eig.values.first().copied().unwrap_or(T::zero());
    let cutoff = top * tol_or_eps::<T>(1e-10, 1e3);
    let rank = eig.values.iter().take_while(|&&v| top > T::zero() && v > cutoff).count();
    if j > rank {
        return Err(FllrError::RankExceeded { requested: j, rank });
    }

    let tie_tol = tol_or_eps::<T>(1e-10, 1e3);
    let functions = (0..j)
        .map(|c| {
            let mut phi: Vec<T> = (0..p).map(|k| eig.vectors[(k, c)] / sqrt_w[k]).collect();
            let integral = grid.integrate(&phi);
            let flip = if integral.abs() > tie_tol {
                integral < T::zero()
            } else {
                let maxabs = phi.iter().fold(T::zero(), |m, v| m.max(v.abs()));
                phi.iter()
                    .find(|v| v.abs() > tie_tol * maxabs)
                    .is_some_and(|&v| v < T::zero())
            };
            if flip {
                phi.iter_mut().for_each(|v| *v = -*v);
            }
            Curve::new(grid.clone(), phi)
        })
        .collect::<Result<Vec<_>>>()?;
    BasisSystem::new(grid, functions, BasisKind::Fpca)
}

/// Scores `c_ij = ⟨X_i − x, φ_j⟩`; optionally augmented with a leading
/// column of ones (`C_x = [1 C]`).
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMatrix<T> {
    scores: Matrix<T>,
    augmented: bool,
}

impl<T: Real> ScoreMatrix<T> {
    pub fn from_matrix(scores: Matrix<T>) -> Self {
        Self {
            scores,
            augmented: false,
        }
    }

    /// Centered scores from raw projections: row `i` is `raw_i − center`.
    pub fn from_raw(raw: &Matrix<T>, center: &[T]) -> Self {
        assert_eq!(raw.cols(), center.len(), "center length mismatch");
        Self::from_matrix(Matrix::from_fn(raw.rows(), raw.cols(), |i, j| raw[(i, j)] - center[j]))
    }

    pub fn matrix(&self) -> &Matrix<T> {
        &self.scores
    }

    pub fn is_augmented(&self) -> bool {
        self.augmented
    }

    pub fn n(&self) -> usize {
        self.scores.rows()
    }

    /// Number of basis scores `J` (excluding the intercept column).
    pub fn dim(&self) -> usize {
        self.scores.cols() - usize::from(self.augmented)
    }

    /// Scores of row `i` without the intercept column.
    pub fn row(&self, i: usize) -> &[T] {
        let r = self.scores.row(i);
        if self.augmented {
            &r[1..]
        } else {
            r
        }
    }

    pub fn augment(&self) -> Self {
        if self.augmented {
            return self.clone();
        }
        let (n, j) = (self.scores.rows(), self.scores.cols());
        Self {
            scores: Matrix::from_fn(n, j + 1, |r, c| if c == 0 { T::one() } else { self.scores[(r, c - 1)] }),
            augmented: true,
        }
    }

    /// Keeps only the first `j` score columns.
    pub fn truncate(&self, j: usize) -> Self {
        let off = usize::from(self.augmented);
        let cols: Vec<usize> = (0..off + j.min(self.dim())).collect();
        Self {
            scores: self.scores.select_columns(&cols),
            augmented: self.augmented,
        }
    }
}

/// Projections `⟨X_i, φ_j⟩` of every curve onto every basis function (`n × J`).
pub fn raw_projections<T: Real>(data: &CurveSet<T>, basis: &BasisSystem<T>) -> Result<Matrix<T>> {
    data.check_grid(basis.grid())?;
    let grid = data.grid();
    let rows: Vec<Vec<T>> = data
        .curves()
        .par_iter()
        .map(|c| {
            basis
                .functions()
                .iter()
                .map(|phi| grid.integrate_product(&c.values, &phi.values))
                .collect()
        })
        .collect();
    let j = basis.len();
    Ok(Matrix::from_row_major(data.len(), j, rows.concat()))
}

/// `scores[i][j] = ⟨X_i − center, φ_j⟩`.
pub fn project_scores<T: Real>(
    data: &CurveSet<T>,
    center: &Curve<T>,
    basis: &BasisSystem<T>,
) -> Result<ScoreMatrix<T>> {
    data.check_grid(basis.grid())?;
    data.check_grid(center.grid())?;
    let grid = data.grid();
    let rows: Vec<Vec<T>> = data
        .curves()
        .par_iter()
        .map(|c| {
            let diff: Vec<T> = c.values.iter().zip(&center.values).map(|(&a, &b)| a - b).collect();
            basis
                .functions()
                .iter()
                .map(|phi| grid.integrate_product(&diff, &phi.values))
                .collect()
        })
        .collect();
    Ok(ScoreMatrix::from_matrix(Matrix::from_row_major(
        data.len(),
        basis.len(),
        rows.concat(),
    )))
}

/// Bandwidth rule for the univariate local-linear presmoother.
#[derive(Debug, Clone, PartialEq)]
pub enum SmoothingBandwidth<T> {
    /// One fixed bandwidth for every curve.
    Fixed(T),
    /// Per-curve leave-one-out cross-validation over a geometric grid of
    /// `candidates` bandwidths spanning `[grid spacing, range / 2]`.
    LeaveOneOut { candidates: usize },
}

impl<T> Default for SmoothingBandwidth<T> {
    fn default() -> Self {
        SmoothingBandwidth::LeaveOneOut { candidates: 20 }
    }
}

#[derive(Debug, Clone)]
pub struct Presmoothed<T> {
    pub curves: CurveSet<T>,
    /// Bandwidth used for each curve.
    pub bandwidths: Vec<T>,
    pub warnings: Vec<String>,
}

#[inline]
fn epanechnikov<T: Real>(u: T) -> T {
    let a = u.abs();
    if a < T::one() {
        T::lit(0.75) * (T::one() - a * a)
    } else {
        T::zero()
    }
}

/// Local-linear fit at `t0`, skipping index `skip`. `None` when singular.
fn local_linear_at<T: Real>(t: &[T], y: &[T], t0: T, h: T, skip: Option<usize>) -> Option<T> {
    let (mut s0, mut s1, mut s2, mut r0, mut r1) = (T::zero(), T::zero(), T::zero(), T::zero(), T::zero());
    let mut support = 0usize;
    for (k, (&tk, &yk)) in t.iter().zip(y).enumerate() {
        if Some(k) == skip {
            continue;
        }
        let d = tk - t0;
        let w = epanechnikov(d / h);
        if w <= T::zero() {
            continue;
        }
        support += 1;
        s0 = s0 + w;
        s1 = s1 + w * d;
        s2 = s2 + w * d * d;
        r0 = r0 + w * yk;
        r1 = r1 + w * d * yk;
    }
    let det = s0 * s2 - s1 * s1;
    if support < 2 || det <= tol_or_eps::<T>(1e-12, 16.0) * s0 * s2 {
        return None;
    }
    Some((s2 * r0 - s1 * r1) / det)
}

fn smooth_curve<T: Real>(t: &[T], y: &[T], h: T) -> Option<Vec<T>> {
    t.iter().map(|&t0| local_linear_at(t, y, t0, h, None)).collect()
}

fn loo_score<T: Real>(t: &[T], y: &[T], h: T) -> Option<T> {
    let mut sse = T::zero();
    for (k, (&tk, &yk)) in t.iter().zip(y).enumerate() {
        let fit = local_linear_at(t, y, tk, h, Some(k))?;
        sse = sse + (yk - fit) * (yk - fit);
    }
    Some(sse / T::from_count(t.len()))
}

/// Smallest bandwidth for which every full-data local fit has two support points.
fn min_valid_bandwidth<T: Real>(t: &[T]) -> T {
    let p = t.len();
    let mut worst = T::zero();
    for k in 0..p {
        let left = if k > 0 { t[k] - t[k - 1] } else { T::infinity() };
        let right = if k + 1 < p { t[k + 1] - t[k] } else { T::infinity() };
        worst = worst.max(left.min(right));
    }
    worst * T::lit(1.000001)
}

/// Geometric bandwidth candidates from the mean grid spacing to half the range.
pub fn presmooth_candidates<T: Real>(grid: &Grid<T>, count: usize) -> Vec<T> {
    let lo = grid.length() / T::from_count(grid.len() - 1);
    let hi = grid.length() * T::lit(0.5);
    if count <= 1 {
        return vec![hi];
    }
    let ratio = (hi / lo).ln() / T::from_count(count - 1);
    (0..count)
        .map(|i| {
            if i + 1 == count {
                hi
            } else {
                lo * (ratio * T::from_count(i)).exp()
            }
        })
        .collect()
}

/// Univariate local-linear smoothing of each curve, evaluated at the grid
/// points. Bandwidths too small for a nonsingular fit are widened to the
/// nearest valid bandwidth, with a warning.
pub fn presmooth<T: Real>(raw: &CurveSet<T>, rule: &SmoothingBandwidth<T>) -> Result<Presmoothed<T>> {
    let grid = raw.grid().clone();
    let t = grid.points();
    let per_curve: Vec<(Vec<T>, T, Option<String>)> = match rule {
        SmoothingBandwidth::Fixed(h) => {
            if !(h.is_finite() && *h > T::zero()) {
                return Err(FllrError::InvalidArgument("smoothing bandwidth must be positive".into()));
            }
            raw.curves()
                .par_iter()
                .map(|c| match smooth_curve(t, &c.values, *h) {
                    Some(v) => (v, *h, None),
                    None => {
                        let wide = min_valid_bandwidth(t).max(*h);
                        let v = smooth_curve(t, &c.values, wide).expect("widened bandwidth is valid");
                        let msg = format!("bandwidth {h} yields a singular local fit; widened to {wide}");
                        (v, wide, Some(msg))
                    }
                })
                .collect()
        }
        SmoothingBandwidth::LeaveOneOut { candidates } => {
            let cands = presmooth_candidates(&grid, (*candidates).max(1));
            raw.curves()
                .par_iter()
                .map(|c| {
                    let mut best: Option<(T, T)> = None;
                    let mut skipped = 0usize;
                    for &h in &cands {
                        match loo_score(t, &c.values, h) {
                            Some(s) if best.is_none_or(|(_, bs)| s < bs) => best = Some((h, s)),
                            Some(_) => {}
                            None => skipped += 1,
                        }
                    }
                    let (h, note) = match best {
                        Some((h, _)) => (h, None),
                        None => {
                            let h = min_valid_bandwidth(t).max(cands[cands.len() - 1]);
                            (h, Some(format!("no cross-validated bandwidth valid; widened to {h}")))
                        }
                    };
                    let note = note.or_else(|| {
                        (skipped > 0).then(|| {
                            format!("{skipped} bandwidth candidates skipped as singular")
                        })
                    });
                    let v = smooth_curve(t, &c.values, h)
                        .or_else(|| smooth_curve(t, &c.values, min_valid_bandwidth(t).max(h)))
                        .expect("a valid bandwidth always exists");
                    (v, h, note)
                })
                .collect()
        }
    };

    let mut rows = Vec::with_capacity(per_curve.len());
    let mut bandwidths = Vec::with_capacity(per_curve.len());
    let mut warnings = Vec::new();
    for (i, (v, h, note)) in per_curve.into_iter().enumerate() {
        rows.push(v);
        bandwidths.push(h);
        if let Some(msg) = note {
            log::debug!("presmooth curve {i}: {msg}");
            warnings.push(format!("curve {i}: {msg}"));
        }
    }
    let curves = CurveSet::from_rows(grid, rows, raw.responses().map(<[T]>::to_vec))?;
    Ok(Presmoothed {
        curves,
        bandwidths,
        warnings,
    })
}
