//! Empirical Gram matrices `W_m = (1/m) Σ_l Θ_{X_l}` with
//! `Θ_i = a_i a_iᴴ / π_i`.

use num_complex::Complex64;

use crate::density::Density;
use crate::error::{Error, Result};
use crate::par::Execution;
use crate::transforms::MeasurementSystem;

/// Largest `n` for which dense `n x n` certificates are built.
pub const CERTIFY_LIMIT: usize = 4096;

/// All rows `a_i` of the full operator, stored densely.
#[derive(Clone, Debug)]
pub struct DenseRows {
    n: usize,
    rows: Vec<Complex64>,
}

impl DenseRows {
    /// Materializes every row of `system`'s full grid; the mask is ignored.
    pub fn new(system: &MeasurementSystem, exec: Execution) -> Result<Self> {
        let n = system.n();
        if n > CERTIFY_LIMIT {
            return Err(Error::Capacity(format!(
                "dense certificate for n = {n} (limit {CERTIFY_LIMIT})"
            )));
        }
        let rows = exec.map(n, |i| system.materialize_row(i));
        let mut flat = Vec::with_capacity(n * n);
        for r in rows {
            flat.extend(r?);
        }
        Ok(Self { n, rows: flat })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.rows[i * self.n..(i + 1) * self.n]
    }

    /// Dense `Θ_i` (row-major).
    pub fn theta(&self, i: usize, pi: f64) -> Vec<Complex64> {
        let a = self.row(i);
        let mut out = Vec::with_capacity(self.n * self.n);
        for x in a {
            for y in a {
                out.push(x * y.conj() / pi);
            }
        }
        out
    }
}

fn check(rows: &DenseRows, density: &Density) -> Result<()> {
    if density.n() != rows.n() {
        return Err(Error::Dimension(format!(
            "density over {} sites for an operator of {}",
            density.n(),
            rows.n()
        )));
    }
    Ok(())
}

fn visit_counts(n: usize, sites: &[usize]) -> Result<Vec<(usize, usize)>> {
    let mut counts = vec![0usize; n];
    for &s in sites {
        if s >= n {
            return Err(Error::Index(format!("site {s} outside {n}")));
        }
        counts[s] += 1;
    }
    Ok(counts.into_iter().enumerate().filter(|&(_, c)| c > 0).collect())
}

/// Dense `W_m` for the visited `sites` (row-major, `n x n`).
pub fn w_matrix(rows: &DenseRows, density: &Density, sites: &[usize]) -> Result<Vec<Complex64>> {
    check(rows, density)?;
    let n = rows.n();
    let mut w = vec![Complex64::default(); n * n];
    if sites.is_empty() {
        return Ok(w);
    }
    let m = sites.len() as f64;
    let pi = density.pi();
    for (i, c) in visit_counts(n, sites)? {
        if pi[i] <= 0.0 {
            return Err(Error::Validation(format!("visited site {i} has zero probability")));
        }
        let scale = c as f64 / (m * pi[i]);
        let a = rows.row(i);
        for (r, x) in a.iter().enumerate() {
            let xs = x * scale;
            let out = &mut w[r * n..(r + 1) * n];
            for (o, y) in out.iter_mut().zip(a) {
                *o += xs * y.conj();
            }
        }
    }
    Ok(w)
}

/// `‖I − W_m‖_∞` as the entrywise maximum modulus. Only the upper triangle
/// is accumulated; the matrix is Hermitian.
pub fn deviation(rows: &DenseRows, density: &Density, sites: &[usize]) -> Result<f64> {
    check(rows, density)?;
    let n = rows.n();
    if sites.is_empty() {
        return Ok(1.0);
    }
    let m = sites.len() as f64;
    let pi = density.pi();
    let mut upper = vec![Complex64::default(); n * (n + 1) / 2];
    for (i, c) in visit_counts(n, sites)? {
        if pi[i] <= 0.0 {
            return Err(Error::Validation(format!("visited site {i} has zero probability")));
        }
        let scale = c as f64 / (m * pi[i]);
        let a = rows.row(i);
        let mut k = 0;
        for r in 0..n {
            let xs = a[r] * scale;
            for y in &a[r..] {
                upper[k] += xs * y.conj();
                k += 1;
            }
        }
    }
    let mut worst = 0.0f64;
    let mut k = 0;
    for r in 0..n {
        for col in r..n {
            let d = if r == col { Complex64::new(1.0, 0.0) } else { Complex64::default() };
            worst = worst.max((d - upper[k]).norm());
            k += 1;
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::{compute_density, sample_iid};
    use crate::transforms::{Family, WaveletSpec};

    fn setup(rows: usize, cols: usize, spec: &str) -> (DenseRows, Density) {
        let spec: WaveletSpec = spec.parse().unwrap();
        let sys = MeasurementSystem::full(rows, cols, spec).unwrap();
        (DenseRows::new(&sys, Execution::Parallel).unwrap(), compute_density(&sys).unwrap())
    }

    #[test]
    fn enumerating_identity_sites_gives_identity() {
        let (rows, d) = setup(4, 4, "identity:0");
        let sites: Vec<usize> = (0..16).collect();
        assert!(deviation(&rows, &d, &sites).unwrap() < 1e-14);
    }

    #[test]
    fn weighted_thetas_sum_to_identity() {
        for (r, c, spec) in [(1, 64, "haar:4"), (8, 8, "daubechies4:1"), (4, 8, "haar:2")] {
            let (rows, d) = setup(r, c, spec);
            let n = rows.n();
            let mut sum = vec![Complex64::default(); n * n];
            for i in 0..n {
                let t = rows.theta(i, d.pi()[i]);
                let peak = t.iter().map(|v| v.norm()).fold(0.0, f64::max);
                assert!((peak - d.l()).abs() < 1e-10 * d.l());
                for (s, v) in sum.iter_mut().zip(&t) {
                    *s += v * d.pi()[i];
                }
            }
            for a in 0..n {
                for b in 0..n {
                    let e = if a == b { 1.0 } else { 0.0 };
                    assert!((sum[a * n + b] - e).norm() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn single_site_matches_dense_outer_product() {
        let (rows, d) = setup(1, 16, "haar:2");
        let n = rows.n();
        for i in [0, 3, 9] {
            let a = rows.row(i);
            let mut worst = 0.0f64;
            for r in 0..n {
                for c in 0..n {
                    let e = if r == c { 1.0 } else { 0.0 };
                    let v = Complex64::new(e, 0.0) - a[r] * a[c].conj() / d.pi()[i];
                    worst = worst.max(v.norm());
                }
            }
            assert!((deviation(&rows, &d, &[i]).unwrap() - worst).abs() < 1e-12);
        }
    }

    #[test]
    fn w_matrix_is_hermitian_and_agrees_with_deviation() {
        let (rows, d) = setup(4, 8, "haar:1");
        let n = rows.n();
        let sites = sample_iid(&d, 50, 3).unwrap();
        let w = w_matrix(&rows, &d, &sites).unwrap();
        let mut worst = 0.0f64;
        for r in 0..n {
            for c in 0..n {
                assert!((w[r * n + c] - w[c * n + r].conj()).norm() < 1e-13);
                let e = if r == c { 1.0 } else { 0.0 };
                worst = worst.max((Complex64::new(e, 0.0) - w[r * n + c]).norm());
            }
        }
        assert!((deviation(&rows, &d, &sites).unwrap() - worst).abs() < 1e-12);
    }

    #[test]
    fn deviation_shrinks_with_m() {
        let (rows, d) = setup(1, 32, "haar:2");
        let mean = |m: usize| {
            (0..100)
                .map(|s| deviation(&rows, &d, &sample_iid(&d, m, s).unwrap()).unwrap())
                .sum::<f64>()
                / 100.0
        };
        let mut prev = f64::INFINITY;
        for k in 0..10 {
            let v = mean(8 << k);
            assert!(v < prev, "m = {}: {v} vs {prev}", 8 << k);
            prev = v;
        }
    }

    #[test]
    fn guards() {
        let sys = MeasurementSystem::full(128, 64, WaveletSpec { family: Family::Haar, levels: 1 }).unwrap();
        assert!(matches!(DenseRows::new(&sys, Execution::Sequential), Err(Error::Capacity(_))));
        let (rows, _) = setup(1, 8, "haar:1");
        let other = Density::uniform(1, 4).unwrap();
        assert!(deviation(&rows, &other, &[0]).is_err());
    }
}
