//! Exhaustive or sampled check that ℓ1 minimization recovers every tested
//! sparse vector from `A x`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::par::Execution;
use crate::recon::{douglas_rachford_on, AffineSet, DrParams};
use crate::rng::{derive_seed, Stream};

use super::gamma::RowSpace;

/// Largest `n` accepted by the recovery harness.
pub const RECOVERY_LIMIT: usize = 32;
/// Largest sparsity accepted by the recovery harness.
pub const MAX_SPARSITY: usize = 3;
/// Largest number of supports examined.
pub const MAX_SUPPORTS: usize = 10_000;
/// Recovery counts when `‖ŵ − x‖ / ‖x‖` is below this.
pub const RECOVERY_TOL: f64 = 1e-6;

/// Harness controls.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RecoveryParams {
    /// Random sign and magnitude patterns tried per support.
    pub patterns: usize,
    pub solver: DrParams,
}

impl Default for RecoveryParams {
    fn default() -> Self {
        Self {
            patterns: 2,
            solver: DrParams {
                max_iters: 20_000,
                gamma: None,
                lambda: 1.0,
                tol: 1e-13,
            },
        }
    }
}

/// Success fraction per tested support.
#[derive(Clone, Debug, PartialEq)]
pub struct RecoveryTable {
    pub s: usize,
    pub exhaustive: bool,
    pub supports: Vec<Vec<usize>>,
    pub success: Vec<f64>,
    /// Largest relative error seen per support.
    pub worst_error: Vec<f64>,
}

impl RecoveryTable {
    /// Fraction over all tested signals.
    pub fn overall(&self) -> f64 {
        if self.success.is_empty() {
            return 1.0;
        }
        self.success.iter().sum::<f64>() / self.success.len() as f64
    }

    pub fn all_recovered(&self) -> bool {
        self.success.iter().all(|&s| s == 1.0)
    }
}

/// `{w : A w = b}` for a dense real `A`, acting on the real parts.
struct DenseAffine<'a> {
    space: &'a RowSpace,
    a: &'a DMatrix<f64>,
    b: DVector<f64>,
    particular: DVector<f64>,
}

impl AffineSet for DenseAffine<'_> {
    fn dim(&self) -> usize {
        self.a.ncols()
    }

    fn project(&self, w: &[Complex64]) -> Result<Vec<Complex64>> {
        let re = DVector::from_iterator(w.len(), w.iter().map(|v| v.re));
        let im = DVector::from_iterator(w.len(), w.iter().map(|v| v.im));
        let re = &re - self.space.project(&re) + &self.particular;
        let im = &im - self.space.project(&im);
        Ok(re.iter().zip(im.iter()).map(|(&r, &i)| Complex64::new(r, i)).collect())
    }

    fn residual(&self, w: &[Complex64]) -> Result<f64> {
        let re = DVector::from_iterator(w.len(), w.iter().map(|v| v.re));
        Ok((self.a * re - &self.b).norm())
    }
}

fn binomial(n: usize, k: usize) -> usize {
    (0..k).fold(1usize, |acc, i| acc.saturating_mul(n - i) / (i + 1))
}

fn all_supports(n: usize, s: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, s: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == s {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, s, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, s, &mut Vec::new(), &mut out);
    out
}

fn random_support(n: usize, s: usize, rng: &mut Stream) -> Vec<usize> {
    let mut pool: Vec<usize> = (0..n).collect();
    for i in 0..s {
        let j = i + rng.below(n - i);
        pool.swap(i, j);
    }
    let mut out = pool[..s].to_vec();
    out.sort_unstable();
    out
}

/// Tests ℓ1 recovery of `s`-sparse vectors from `A x` for a real `k x n`
/// matrix. All `C(n, s)` supports are enumerated when there are at most
/// `support_trials` of them (capped at [`MAX_SUPPORTS`]); otherwise
/// `support_trials` supports are drawn at random.
pub fn brute_force_recovery(a: &DMatrix<f64>, s: usize, support_trials: usize, seed: u64) -> Result<RecoveryTable> {
    brute_force_recovery_with(a, s, support_trials, seed, &RecoveryParams::default(), Execution::Parallel)
}

pub fn brute_force_recovery_with(
    a: &DMatrix<f64>,
    s: usize,
    support_trials: usize,
    seed: u64,
    params: &RecoveryParams,
    exec: Execution,
) -> Result<RecoveryTable> {
    let n = a.ncols();
    if n > RECOVERY_LIMIT || s > MAX_SPARSITY {
        return Err(Error::Capacity(format!(
            "recovery harness for n = {n}, s = {s} (limits {RECOVERY_LIMIT}, {MAX_SPARSITY})"
        )));
    }
    if s == 0 || s > n {
        return Err(Error::Validation(format!("sparsity {s} must lie in 1..={n}")));
    }
    if support_trials == 0 || params.patterns == 0 {
        return Err(Error::Validation("at least one support and one pattern are required".into()));
    }
    params.solver.validate()?;
    let budget = support_trials.min(MAX_SUPPORTS);
    let exhaustive = binomial(n, s) <= budget;
    let supports = if exhaustive {
        all_supports(n, s)
    } else {
        let mut rng = Stream::derived(seed, "recovery/supports");
        (0..budget).map(|_| random_support(n, s, &mut rng)).collect()
    };
    let space = RowSpace::new(a)?;

    let results = exec.map(supports.len(), |k| -> Result<(f64, f64)> {
        let mut rng = Stream::derived(seed, &format!("recovery/support={k}"));
        let mut ok = 0usize;
        let mut worst = 0.0f64;
        for _ in 0..params.patterns {
            let mut x = DVector::zeros(n);
            for &i in &supports[k] {
                let sign = if rng.uniform() < 0.5 { -1.0 } else { 1.0 };
                x[i] = sign * (0.5 + rng.uniform());
            }
            let b = a * &x;
            let set = DenseAffine {
                space: &space,
                a,
                particular: space.solve(&b),
                b,
            };
            let res = douglas_rachford_on(&set, &params.solver)?;
            let err = res
                .coefficients
                .iter()
                .zip(x.iter())
                .map(|(w, &t)| (w - t).norm_sqr())
                .sum::<f64>()
                .sqrt()
                / x.norm();
            worst = worst.max(err);
            if err < RECOVERY_TOL {
                ok += 1;
            }
        }
        Ok((ok as f64 / params.patterns as f64, worst))
    });
    let mut success = Vec::with_capacity(results.len());
    let mut worst_error = Vec::with_capacity(results.len());
    for r in results {
        let (f, w) = r?;
        success.push(f);
        worst_error.push(w);
    }
    Ok(RecoveryTable {
        s,
        exhaustive,
        supports,
        success,
        worst_error,
    })
}

/// Deterministic seed for the `k`-th instance of a recovery study.
pub fn instance_seed(master: u64, k: usize) -> u64 {
    derive_seed(master, &format!("recovery/instance={k}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn support_enumeration() {
        assert_eq!(binomial(32, 3), 4960);
        assert_eq!(all_supports(5, 2).len(), 10);
        let mut rng = Stream::new(1);
        for _ in 0..50 {
            let s = random_support(10, 3, &mut rng);
            assert!(s.windows(2).all(|w| w[0] < w[1]) && s[2] < 10);
        }
    }

    #[test]
    fn full_rank_matrix_recovers_everything() {
        let mut rng = Stream::new(3);
        let a = DMatrix::from_fn(8, 8, |_, _| rng.normal());
        let t = brute_force_recovery(&a, 2, 100, 11).unwrap();
        assert!(t.exhaustive);
        assert_eq!(t.supports.len(), 28);
        assert!(t.all_recovered());
    }

    #[test]
    fn no_rows_recovers_nothing_nonzero() {
        let a = DMatrix::<f64>::zeros(0, 6);
        let t = brute_force_recovery(&a, 1, 10, 0).unwrap();
        assert_eq!(t.overall(), 0.0);
    }

    #[test]
    fn sampled_supports_are_deterministic() {
        let mut rng = Stream::new(8);
        let a = DMatrix::from_fn(12, 20, |_, _| rng.normal());
        let p = RecoveryParams { patterns: 1, ..Default::default() };
        let x = brute_force_recovery_with(&a, 2, 30, 4, &p, Execution::Parallel).unwrap();
        let y = brute_force_recovery_with(&a, 2, 30, 4, &p, Execution::Sequential).unwrap();
        assert!(!x.exhaustive);
        assert_eq!(x, y);
        // 12 Gaussian rows recover 2-sparse vectors in dimension 20 with
        // overwhelming probability
        assert!(x.overall() > 0.9);
    }

    #[test]
    fn guards() {
        let a = DMatrix::<f64>::zeros(3, 33);
        assert!(matches!(brute_force_recovery(&a, 1, 10, 0), Err(Error::Capacity(_))));
        let a = DMatrix::<f64>::zeros(3, 8);
        assert!(matches!(brute_force_recovery(&a, 4, 10, 0), Err(Error::Capacity(_))));
        assert!(brute_force_recovery(&a, 0, 10, 0).is_err());
    }
}
