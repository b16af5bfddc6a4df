//! Spectral gap `ε(P) = 1 − β₁(P)` of reversible kernels.
//!
//! For a kernel reversible with respect to `π`, `S = D^{1/2} P D^{-1/2}`
//! (`D = diag π`) is symmetric and shares the spectrum of `P`; its top
//! eigenvector is `√π` with eigenvalue 1. `β₁` is the second largest
//! eigenvalue of `S` (signed, not in modulus).

use nalgebra::{DMatrix, SymmetricEigen};

use super::kernel::{Base, TransitionKernel, DENSE_LIMIT};
use crate::error::{Error, Result};

/// Iteration budget of the power method.
pub const POWER_MAX_ITERS: usize = 2_000_000;
/// Convergence threshold on successive Rayleigh quotients.
pub const POWER_TOL: f64 = 1e-10;

/// Spectral gap, dense for up to [`DENSE_LIMIT`] states and by deflated
/// power iteration above. A single-state chain has gap 1 by convention.
pub fn spectral_gap(kernel: &TransitionKernel) -> Result<f64> {
    if kernel.n() <= DENSE_LIMIT {
        spectral_gap_dense(kernel)
    } else {
        spectral_gap_iterative(kernel, POWER_TOL, POWER_MAX_ITERS)
    }
}

fn check(kernel: &TransitionKernel) -> Result<()> {
    if !kernel.is_reversible() {
        return Err(Error::Unsupported("spectral gap requires a reversible kernel".into()));
    }
    Ok(())
}

/// All eigenvalues of the symmetrized kernel, largest first.
pub fn eigenvalues_dense(kernel: &TransitionKernel) -> Result<Vec<f64>> {
    check(kernel)?;
    let n = kernel.n();
    let p = kernel.to_dense()?;
    let sq: Vec<f64> = kernel.pi().iter().map(|v| v.sqrt()).collect();
    let s = DMatrix::from_fn(n, n, |i, j| {
        let a = sq[i] / sq[j] * p[i * n + j];
        let b = sq[j] / sq[i] * p[j * n + i];
        0.5 * (a + b)
    });
    let mut ev: Vec<f64> = SymmetricEigen::new(s).eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    Ok(ev)
}

pub fn spectral_gap_dense(kernel: &TransitionKernel) -> Result<f64> {
    let ev = eigenvalues_dense(kernel)?;
    Ok(if ev.len() < 2 { 1.0 } else { 1.0 - ev[1] })
}

/// Power iteration on `S + I` restricted to the complement of `√π`.
///
/// On that complement the `α P̃` part of a mixed kernel vanishes, leaving
/// `(1 − α) S_B`; the unit shift makes its spectrum non-negative so the
/// dominant eigenvalue is `1 + (1 − α) β₁(B)`.
pub fn spectral_gap_iterative(kernel: &TransitionKernel, tol: f64, max_iters: usize) -> Result<f64> {
    check(kernel)?;
    let n = kernel.n();
    if n < 2 {
        return Ok(1.0);
    }
    let sq: Vec<f64> = kernel.pi().iter().map(|v| v.sqrt()).collect();
    let scale = 1.0 - kernel.alpha();
    let apply_base = |x: &[f64], y: &mut [f64]| match &kernel.base {
        Base::Dense(m) => {
            for i in 0..n {
                y[i] = (0..n).map(|j| sq[i] / sq[j] * m[i * n + j] * x[j]).sum();
            }
        }
        Base::Metropolis { graph, accept } => {
            for i in 0..n {
                let deg = graph.degree(i) as f64;
                let off = graph.edge_offset(i);
                let mut stay = 1.0;
                let mut acc = 0.0;
                for (e, &j) in graph.neighbors(i).iter().enumerate() {
                    let p = accept[off + e] / deg;
                    stay -= p;
                    acc += sq[i] / sq[j] * p * x[j];
                }
                y[i] = acc + stay.max(0.0) * x[i];
            }
        }
    };
    let deflate = |x: &mut [f64]| {
        let d: f64 = x.iter().zip(&sq).map(|(a, b)| a * b).sum();
        for (a, b) in x.iter_mut().zip(&sq) {
            *a -= d * b;
        }
    };
    let normalize = |x: &mut [f64]| {
        let nrm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        for v in x.iter_mut() {
            *v /= nrm;
        }
    };
    // Deterministic start with components on every mode.
    let mut x: Vec<f64> = (0..n).map(|i| 1.0 + ((i * 7919) % 101) as f64 / 101.0).collect();
    deflate(&mut x);
    normalize(&mut x);
    let mut y = vec![0.0; n];
    let mut rho = f64::NAN;
    for _ in 0..max_iters {
        apply_base(&x, &mut y);
        for (yi, xi) in y.iter_mut().zip(&x) {
            *yi = scale * *yi + xi;
        }
        deflate(&mut y);
        let next: f64 = y.iter().zip(&x).map(|(a, b)| a * b).sum();
        normalize(&mut y);
        std::mem::swap(&mut x, &mut y);
        if (next - rho).abs() < tol {
            return Ok(1.0 - (next - 1.0));
        }
        rho = next;
    }
    Err(Error::Numerical(format!(
        "power iteration did not converge in {max_iters} steps"
    )))
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::super::graph::{Connectivity, GridGraph};
    use super::super::kernel::{build_metropolis, mix_kernel};
    use super::*;
    use crate::density::{compute_density, Density};
    use crate::transforms::{MeasurementSystem, WaveletSpec};

    #[test]
    fn independent_kernel_has_unit_gap() {
        let d = Density::from_pi(vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let g = Arc::new(GridGraph::new(2, 2, Connectivity::Four).unwrap());
        let k = mix_kernel(&build_metropolis(g, &d).unwrap(), 1.0).unwrap();
        assert!((spectral_gap(&k).unwrap() - 1.0).abs() < 1e-10);
    }

    // Two-state chain [[1-p, p], [q, 1-q]] has eigenvalues 1 and 1 - p - q.
    #[test]
    fn two_state_closed_form() {
        let k = TransitionKernel::from_dense(vec![0.7, 0.3, 0.3, 0.7], vec![0.5, 0.5]).unwrap();
        assert!((spectral_gap(&k).unwrap() - 0.6).abs() < 1e-12);
        let (p, q) = (0.2, 0.6);
        let pi = vec![q / (p + q), p / (p + q)];
        let k = TransitionKernel::from_dense(vec![1.0 - p, p, q, 1.0 - q], pi).unwrap();
        assert!((spectral_gap(&k).unwrap() - (p + q)).abs() < 1e-12);
    }

    #[test]
    fn non_reversible_is_rejected() {
        let m = vec![0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0];
        let k = TransitionKernel::from_dense(m, vec![1.0 / 3.0; 3]).unwrap();
        assert!(!k.is_reversible());
        assert!(matches!(spectral_gap(&k), Err(Error::Unsupported(_))));
    }

    #[test]
    fn iterative_agrees_with_dense() {
        let sys = MeasurementSystem::full(8, 8, WaveletSpec::haar(1)).unwrap();
        let d = compute_density(&sys).unwrap();
        let base = build_metropolis(Arc::new(GridGraph::new(8, 8, Connectivity::Four).unwrap()), &d).unwrap();
        for alpha in [0.0, 0.1, 0.5] {
            let k = mix_kernel(&base, alpha).unwrap();
            let dense = spectral_gap_dense(&k).unwrap();
            let it = spectral_gap_iterative(&k, 1e-13, 2_000_000).unwrap();
            assert!((dense - it).abs() < 1e-6, "alpha {alpha}: {dense} vs {it}");
            assert!(dense >= alpha - 1e-10);
        }
    }
}
