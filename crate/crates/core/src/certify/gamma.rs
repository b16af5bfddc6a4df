//! Upper bounds on `γ(A) = min_Y ‖I − Yᵀ A‖_∞` for small real matrices.
//!
//! The problem splits over columns: `γ_i = min_y ‖e_i − Aᵀ y‖_∞`. Writing
//! `v = Aᵀ y`, each column is `min_v ‖e_i − v‖_∞` over the row space of `A`,
//! solved by Douglas-Rachford between the subspace projector and the prox
//! of the ∞-norm (the identity minus projection onto an ℓ1 ball). The
//! reported value is recomputed from the explicit `Y`, so it is always a
//! certified upper bound regardless of convergence.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::par::Execution;
use crate::transforms::MeasurementSystem;

/// Largest `n` accepted by [`gamma`].
pub const GAMMA_LIMIT: usize = 64;

/// Solver controls for the per-column problems.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GammaParams {
    pub max_iters: usize,
    /// Stop when successive iterates move less than this.
    pub tol: f64,
    /// Prox step.
    pub step: f64,
}

impl Default for GammaParams {
    fn default() -> Self {
        Self {
            max_iters: 20_000,
            tol: 1e-12,
            step: 0.1,
        }
    }
}

/// Attained `γ` with its certificate.
#[derive(Clone, Debug, PartialEq)]
pub struct GammaResult {
    /// `max_i γ_i`.
    pub value: f64,
    pub columns: Vec<f64>,
    /// `k x n`; column `i` is `y_i`.
    pub y: DMatrix<f64>,
    /// Every column met the stopping rule.
    pub converged: bool,
}

impl GammaResult {
    /// Largest sparsity `s` with `γ < 1/(2s)`; `None` when `γ = 0`, where
    /// every `s` qualifies.
    pub fn s_max(&self) -> Option<usize> {
        s_max(self.value)
    }
}

/// Largest `s` with `gamma < 1/(2s)`, `None` if unbounded.
pub fn s_max(gamma: f64) -> Option<usize> {
    if gamma <= 0.0 {
        return None;
    }
    let x = 1.0 / (2.0 * gamma);
    let s = if x.fract() == 0.0 { x - 1.0 } else { x.floor() };
    Some(s.max(0.0) as usize)
}

/// Euclidean projection onto `{u : ‖u‖₁ ≤ radius}` by sorting.
pub fn project_l1_ball(u: &[f64], radius: f64) -> Vec<f64> {
    let total: f64 = u.iter().map(|v| v.abs()).sum();
    if total <= radius {
        return u.to_vec();
    }
    let mut mags: Vec<f64> = u.iter().map(|v| v.abs()).collect();
    mags.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (k, &m) in mags.iter().enumerate() {
        cum += m;
        let candidate = (cum - radius) / (k + 1) as f64;
        if m > candidate {
            theta = candidate;
        } else {
            break;
        }
    }
    u.iter().map(|&v| v.signum() * (v.abs() - theta).max(0.0)).collect()
}

/// Realified masked operator of `system` as a `2m x n` matrix.
pub fn realified(system: &MeasurementSystem) -> Result<DMatrix<f64>> {
    let data = system.realified_matrix()?;
    Ok(DMatrix::from_row_slice(2 * system.m(), system.n(), &data))
}

/// Orthonormal basis of the row space and the pseudo-inverse pieces.
pub(crate) struct RowSpace {
    /// `n x r`
    pub v: DMatrix<f64>,
    /// `k x r`
    pub u: DMatrix<f64>,
    pub sigma: Vec<f64>,
}

impl RowSpace {
    pub fn new(a: &DMatrix<f64>) -> Result<Self> {
        let (k, n) = a.shape();
        if k == 0 {
            return Ok(Self {
                v: DMatrix::zeros(n, 0),
                u: DMatrix::zeros(0, 0),
                sigma: Vec::new(),
            });
        }
        let svd = a.clone().svd(true, true);
        let (u, vt) = match (svd.u, svd.v_t) {
            (Some(u), Some(vt)) => (u, vt),
            _ => return Err(Error::Numerical("singular value decomposition failed".into())),
        };
        let top = svd.singular_values.iter().cloned().fold(0.0, f64::max);
        let cut = top * 1e-10 * k.max(n) as f64;
        let keep: Vec<usize> = (0..svd.singular_values.len())
            .filter(|&j| svd.singular_values[j] > cut)
            .collect();
        let v = DMatrix::from_fn(n, keep.len(), |r, c| vt[(keep[c], r)]);
        let u = DMatrix::from_fn(k, keep.len(), |r, c| u[(r, keep[c])]);
        let sigma = keep.iter().map(|&j| svd.singular_values[j]).collect();
        Ok(Self { v, u, sigma })
    }

    pub fn project(&self, z: &DVector<f64>) -> DVector<f64> {
        if self.v.ncols() == 0 {
            return DVector::zeros(z.len());
        }
        &self.v * (self.v.transpose() * z)
    }

    /// `y` with `Aᵀ y = v` for `v` in the row space.
    pub fn coefficients(&self, v: &DVector<f64>) -> DVector<f64> {
        if self.v.ncols() == 0 {
            return DVector::zeros(self.u.nrows());
        }
        let mut c = self.v.transpose() * v;
        for (ci, s) in c.iter_mut().zip(&self.sigma) {
            *ci /= s;
        }
        &self.u * c
    }

    /// Minimum-norm solution of `A x = b`.
    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        if self.v.ncols() == 0 {
            return DVector::zeros(self.v.nrows());
        }
        let mut c = self.u.transpose() * b;
        for (ci, s) in c.iter_mut().zip(&self.sigma) {
            *ci /= s;
        }
        &self.v * c
    }
}

fn column_value(a: &DMatrix<f64>, y: &DVector<f64>, i: usize) -> f64 {
    let v = a.transpose() * y;
    v.iter()
        .enumerate()
        .map(|(j, &x)| ((if j == i { 1.0 } else { 0.0 }) - x).abs())
        .fold(0.0, f64::max)
}

fn solve_column(a: &DMatrix<f64>, space: &RowSpace, i: usize, params: &GammaParams) -> (f64, DVector<f64>, bool) {
    let n = a.ncols();
    let mut e = DVector::zeros(n);
    e[i] = 1.0;
    // prox of τ‖e − ·‖_∞ at x is e − (u − P_{B1(τ)}(u)) with u = e − x
    let prox = |x: &DVector<f64>| -> DVector<f64> {
        let u: Vec<f64> = (0..n).map(|j| e[j] - x[j]).collect();
        let b = project_l1_ball(&u, params.step);
        DVector::from_fn(n, |j, _| e[j] - (u[j] - b[j]))
    };
    let mut z = space.project(&e);
    let mut prev = z.clone();
    let mut best_y = space.coefficients(&prev);
    let mut best = column_value(a, &best_y, i);
    let mut converged = false;
    for it in 1..=params.max_iters {
        let p = space.project(&z);
        let q = prox(&(2.0 * &p - &z));
        z += &q - &p;
        let change = (&p - &prev).norm();
        prev = p;
        if it % 25 == 0 || change < params.tol {
            let y = space.coefficients(&prev);
            let v = column_value(a, &y, i);
            if v < best {
                best = v;
                best_y = y;
            }
        }
        if best == 0.0 || (it > 1 && change < params.tol) {
            converged = true;
            break;
        }
    }
    (best, best_y, converged)
}

/// Certified upper bound on `γ(a)` for a `k x n` real matrix, `n ≤ 64`.
pub fn gamma(a: &DMatrix<f64>, params: &GammaParams, exec: Execution) -> Result<GammaResult> {
    let (k, n) = a.shape();
    if n > GAMMA_LIMIT {
        return Err(Error::Capacity(format!("gamma for n = {n} (limit {GAMMA_LIMIT})")));
    }
    if n == 0 {
        return Err(Error::Dimension("empty matrix".into()));
    }
    if params.max_iters == 0 || !(params.step > 0.0) || !(params.tol > 0.0) {
        return Err(Error::Validation("gamma solver parameters must be positive".into()));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::Validation("matrix has non-finite entries".into()));
    }
    let space = RowSpace::new(a)?;
    let cols = exec.map(n, |i| solve_column(a, &space, i, params));
    let mut y = DMatrix::zeros(k, n);
    let mut columns = Vec::with_capacity(n);
    let mut converged = true;
    for (i, (v, yi, c)) in cols.into_iter().enumerate() {
        y.set_column(i, &yi);
        columns.push(v);
        converged &= c;
    }
    Ok(GammaResult {
        value: columns.iter().cloned().fold(0.0, f64::max),
        columns,
        y,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Stream;

    #[test]
    fn l1_ball_projection() {
        let u = [3.0, -1.0, 0.5];
        assert_eq!(project_l1_ball(&u, 10.0), u.to_vec());
        let p = project_l1_ball(&u, 2.0);
        assert!((p.iter().map(|v| v.abs()).sum::<f64>() - 2.0).abs() < 1e-12);
        assert!((p[0] - 2.0).abs() < 1e-12 && p[1] == 0.0 && p[2] == 0.0);
        let p = project_l1_ball(&[1.0, -1.0], 1.0);
        assert!((p[0] - 0.5).abs() < 1e-12 && (p[1] + 0.5).abs() < 1e-12);
    }

    #[test]
    fn orthonormal_square_matrix_has_zero_gamma() {
        let q = DMatrix::from_row_slice(2, 2, &[0.6, 0.8, -0.8, 0.6]);
        let r = gamma(&q, &GammaParams::default(), Execution::Sequential).unwrap();
        assert!(r.value < 1e-12);
        assert!(r.s_max().map_or(true, |s| s > 1_000_000));
    }

    #[test]
    fn single_row_matches_grid_search() {
        let a = DMatrix::from_row_slice(1, 2, &[1.0, 0.0]);
        let r = gamma(&a, &GammaParams::default(), Execution::Sequential).unwrap();
        // exhaustive search over y = (y1, y2) in [-2, 2]², step 0.01
        let mut best = f64::INFINITY;
        for p in -200..=200 {
            for q in -200..=200 {
                let (y1, y2) = (p as f64 / 100.0, q as f64 / 100.0);
                let m = [(1.0f64 - y1).abs(), 0.0, y2.abs(), 1.0f64];
                best = best.min(m.iter().cloned().fold(0.0, f64::max));
            }
        }
        assert_eq!(best, 1.0);
        assert!((r.value - 1.0).abs() < 1e-9);
        assert!(r.columns[0] < 1e-9);
        assert_eq!(r.s_max(), Some(0));
    }

    #[test]
    fn value_is_certified_by_y() {
        let mut s = Stream::new(77);
        let a = DMatrix::from_fn(6, 10, |_, _| s.normal());
        let r = gamma(&a, &GammaParams::default(), Execution::Parallel).unwrap();
        let resid = DMatrix::<f64>::identity(10, 10) - r.y.transpose() * &a;
        let direct = resid.iter().map(|v| v.abs()).fold(0.0, f64::max);
        assert!((direct - r.value).abs() < 1e-12);
        assert!(r.value > 0.0 && r.value <= 1.0 + 1e-12);
    }

    #[test]
    fn adding_rows_never_increases_gamma() {
        let mut s = Stream::new(5);
        let full = DMatrix::from_fn(12, 12, |_, _| s.normal());
        let mut prev = f64::INFINITY;
        for k in [1, 3, 6, 9, 12] {
            let a = full.rows(0, k).into_owned();
            let v = gamma(&a, &GammaParams::default(), Execution::Parallel).unwrap().value;
            assert!(v <= prev + 1e-6, "k = {k}: {v} > {prev}");
            prev = v;
        }
        assert!(prev < 1e-9);
    }

    #[test]
    fn s_max_boundaries() {
        assert_eq!(s_max(0.25), Some(1));
        assert_eq!(s_max(0.24), Some(2));
        assert_eq!(s_max(0.6), Some(0));
        assert_eq!(s_max(0.0), None);
    }

    #[test]
    fn guards() {
        let a = DMatrix::<f64>::zeros(2, 65);
        assert!(matches!(gamma(&a, &GammaParams::default(), Execution::Sequential), Err(Error::Capacity(_))));
    }
}
