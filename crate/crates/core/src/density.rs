//! Variable-density law `π_i = ‖a_i‖²_∞ / L` with `L = Σ_i ‖a_i‖²_∞`.
//!
//! The rows `a_i = A^H e_i` are wavelet transforms of separable Fourier
//! atoms `u ⊗ v`. The Mallat transform of a rank-one grid is rank-one in
//! every sub-band, so the sup-norm of each row is a maximum of products of
//! 1D sub-band maxima. [`compute_density`] uses that identity;
//! [`compute_density_materialized`] builds every row explicitly.

use std::f64::consts::TAU;
use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::par::Execution;
use crate::rng::Stream;
use crate::transforms::wavelet::{decompose_1d, Family, WaveletSpec};
use crate::transforms::{MeasurementSystem, MATERIALIZE_LIMIT};

const CACHE_MAGIC: &[u8; 8] = b"KWDENS01";

/// Where a density came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DensitySource {
    /// Row sup-norms of the measurement system.
    Exact,
    /// Supplied directly as a probability vector.
    Explicit,
    /// Radial heuristic; never used for certification.
    Uncertified,
}

/// Sampling law over k-space sites.
#[derive(Clone, Debug, PartialEq)]
pub struct Density {
    rows: usize,
    cols: usize,
    wavelet: Option<WaveletSpec>,
    sup_norms: Vec<f64>,
    pi: Vec<f64>,
    l: f64,
    source: DensitySource,
}

impl Density {
    /// Builds `π` and `L` from row sup-norms.
    pub fn from_sup_norms(rows: usize, cols: usize, wavelet: Option<WaveletSpec>, sup_norms: Vec<f64>) -> Result<Self> {
        if sup_norms.is_empty() || sup_norms.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{} sup-norms for a {rows}x{cols} grid",
                sup_norms.len()
            )));
        }
        if sup_norms.iter().any(|s| !s.is_finite() || *s < 0.0) {
            return Err(Error::Validation("sup-norms must be finite and non-negative".into()));
        }
        let l: f64 = sup_norms.iter().map(|s| s * s).sum();
        if l <= 0.0 {
            return Err(Error::Validation("all sup-norms are zero".into()));
        }
        let pi = sup_norms.iter().map(|s| s * s / l).collect();
        Ok(Self {
            rows,
            cols,
            wavelet,
            sup_norms,
            pi,
            l,
            source: DensitySource::Exact,
        })
    }

    /// Arbitrary probability vector on a `1 x n` grid, with `L = 1` and
    /// `sup_norms = sqrt(π)` so the type invariants still hold.
    pub fn from_pi(pi: Vec<f64>) -> Result<Self> {
        validate_pi(&pi)?;
        let n = pi.len();
        Self::from_pi_on_grid(1, n, pi)
    }

    /// Like [`Density::from_pi`] on a `rows x cols` grid.
    pub fn from_pi_on_grid(rows: usize, cols: usize, pi: Vec<f64>) -> Result<Self> {
        validate_pi(&pi)?;
        if pi.len() != rows * cols {
            return Err(Error::Dimension(format!("{} probabilities for {rows}x{cols}", pi.len())));
        }
        let total: f64 = pi.iter().sum();
        let pi: Vec<f64> = pi.iter().map(|p| p / total).collect();
        Ok(Self {
            rows,
            cols,
            wavelet: None,
            sup_norms: pi.iter().map(|p| p.sqrt()).collect(),
            pi,
            l: 1.0,
            source: DensitySource::Explicit,
        })
    }

    pub fn uniform(rows: usize, cols: usize) -> Result<Self> {
        Self::from_pi_on_grid(rows, cols, vec![1.0; rows * cols])
    }

    pub fn pi(&self) -> &[f64] {
        &self.pi
    }

    /// The constant `L = Σ ‖a_i‖²_∞`.
    pub fn l(&self) -> f64 {
        self.l
    }

    pub fn sup_norms(&self) -> &[f64] {
        &self.sup_norms
    }

    pub fn n(&self) -> usize {
        self.pi.len()
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn wavelet(&self) -> Option<WaveletSpec> {
        self.wavelet
    }

    pub fn source(&self) -> DensitySource {
        self.source
    }

    pub fn is_certified(&self) -> bool {
        self.source != DensitySource::Uncertified
    }

    /// Inverse-CDF sampler for this law.
    pub fn sampler(&self) -> IidSampler {
        IidSampler::new(&self.pi)
    }

    /// Writes the cache file: magic, `n`, `rows`, `cols` (u64 LE), wavelet
    /// family code and levels (u32 LE), then `n` sup-norms as f64 LE.
    pub fn write_cache(&self, path: &Path) -> Result<()> {
        let wavelet = self
            .wavelet
            .ok_or_else(|| Error::Validation("only system-derived densities can be cached".into()))?;
        let mut buf = Vec::with_capacity(40 + 8 * self.n());
        buf.extend_from_slice(CACHE_MAGIC);
        buf.extend_from_slice(&(self.n() as u64).to_le_bytes());
        buf.extend_from_slice(&(self.rows as u64).to_le_bytes());
        buf.extend_from_slice(&(self.cols as u64).to_le_bytes());
        buf.extend_from_slice(&wavelet.code().to_le_bytes());
        buf.extend_from_slice(&(wavelet.levels as u32).to_le_bytes());
        for s in &self.sup_norms {
            buf.extend_from_slice(&s.to_le_bytes());
        }
        fs::File::create(path)?.write_all(&buf)?;
        Ok(())
    }

    /// Reads a cache file; `π` and `L` are recomputed and revalidated.
    pub fn read_cache(path: &Path) -> Result<Self> {
        let mut bytes = Vec::new();
        fs::File::open(path)?.read_to_end(&mut bytes)?;
        let bad = |why: &str| Error::Parse(format!("density cache {}: {why}", path.display()));
        if bytes.len() < 40 || &bytes[..8] != CACHE_MAGIC {
            return Err(bad("missing header"));
        }
        let u64_at = |o: usize| u64::from_le_bytes(bytes[o..o + 8].try_into().unwrap()) as usize;
        let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
        let (n, rows, cols) = (u64_at(8), u64_at(16), u64_at(24));
        if rows.checked_mul(cols) != Some(n) {
            return Err(bad("n does not match rows x cols"));
        }
        let wavelet = WaveletSpec::from_parts(u32_at(32), u32_at(36) as usize)
            .ok_or_else(|| bad("unknown wavelet family"))?;
        if bytes.len() != 40 + 8 * n {
            return Err(bad("length does not match n"));
        }
        let sup: Vec<f64> = bytes[40..]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Self::from_sup_norms(rows, cols, Some(wavelet), sup)
    }
}

fn validate_pi(pi: &[f64]) -> Result<()> {
    if pi.is_empty() {
        return Err(Error::Validation("empty distribution".into()));
    }
    if pi.iter().any(|p| !p.is_finite() || *p < 0.0) {
        return Err(Error::Validation("distribution has a negative or non-finite entry".into()));
    }
    if pi.iter().sum::<f64>() <= 0.0 {
        return Err(Error::Validation("distribution has zero mass".into()));
    }
    Ok(())
}

fn guard(system: &MeasurementSystem) -> Result<()> {
    if system.n() > MATERIALIZE_LIMIT {
        return Err(Error::Capacity(format!(
            "density of a {}-site grid (limit {MATERIALIZE_LIMIT}); supply a density cache",
            system.n()
        )));
    }
    Ok(())
}

/// Sub-band maxima of the 1D multilevel transform of one Fourier atom.
struct LineMaxima {
    approx: Vec<f64>,
    detail: Vec<f64>,
    flat: f64,
}

fn line_maxima(len: usize, freq: usize, family: Family, levels: usize) -> LineMaxima {
    let scale = 1.0 / (len as f64).sqrt();
    let atom: Vec<Complex64> = (0..len)
        .map(|t| Complex64::from_polar(scale, TAU * ((freq * t) % len) as f64 / len as f64))
        .collect();
    let max = |v: &[Complex64]| v.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let flat = max(&atom);
    if len == 1 || family == Family::Identity || levels == 0 {
        // Untransformed axis: the atom is its own approximation at every level.
        return LineMaxima {
            approx: vec![flat; levels],
            detail: vec![0.0; levels],
            flat,
        };
    }
    let (a, d) = decompose_1d(&atom, family, levels);
    LineMaxima {
        approx: a.iter().map(|v| max(v)).collect(),
        detail: d.iter().map(|v| max(v)).collect(),
        flat,
    }
}

fn separable_sup_norms(rows: usize, cols: usize, wavelet: &WaveletSpec) -> Vec<f64> {
    let levels = wavelet.effective_levels();
    let row_max: Vec<LineMaxima> = (0..rows).map(|k| line_maxima(rows, k, wavelet.family, levels)).collect();
    let col_max: Vec<LineMaxima> = (0..cols).map(|k| line_maxima(cols, k, wavelet.family, levels)).collect();
    let mut out = Vec::with_capacity(rows * cols);
    for u in &row_max {
        for v in &col_max {
            if levels == 0 {
                out.push(u.flat * v.flat);
                continue;
            }
            let mut best = u.approx[levels - 1] * v.approx[levels - 1];
            for j in 0..levels {
                best = best
                    .max(u.approx[j] * v.detail[j])
                    .max(u.detail[j] * v.approx[j])
                    .max(u.detail[j] * v.detail[j]);
            }
            out.push(best);
        }
    }
    out
}

/// Exact density of a measurement system via the separable sub-band identity.
pub fn compute_density(system: &MeasurementSystem) -> Result<Density> {
    guard(system)?;
    let sup = separable_sup_norms(system.rows(), system.cols(), system.wavelet());
    Density::from_sup_norms(system.rows(), system.cols(), Some(*system.wavelet()), sup)
}

/// Exact density by materializing every row (`n` transforms of size `n`).
pub fn compute_density_materialized(system: &MeasurementSystem, exec: Execution) -> Result<Density> {
    guard(system)?;
    let sups = exec.map(system.n(), |k| {
        system
            .materialize_row(k)
            .map(|a| a.iter().map(|v| v.norm()).fold(0.0, f64::max))
    });
    let sup = sups.into_iter().collect::<Result<Vec<_>>>()?;
    Density::from_sup_norms(system.rows(), system.cols(), Some(*system.wavelet()), sup)
}

/// Polynomially decaying radial profile `(1 + |k| / k0)^-power` over
/// centred frequencies. Labelled uncertified: it is not derived from the
/// operator and is rejected by certification routines.
pub fn radial_density(rows: usize, cols: usize, k0: f64, power: f64) -> Result<Density> {
    if !(k0 > 0.0 && power >= 0.0) {
        return Err(Error::Validation("radial profile needs k0 > 0 and power >= 0".into()));
    }
    let signed = |k: usize, len: usize| if k < len.div_ceil(2) { k as f64 } else { k as f64 - len as f64 };
    let mut pi = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            let radius = signed(r, rows).hypot(signed(c, cols));
            pi.push((1.0 + radius / k0).powf(-power));
        }
    }
    let mut d = Density::from_pi_on_grid(rows, cols, pi)?;
    d.source = DensitySource::Uncertified;
    Ok(d)
}

/// Inverse-CDF sampler: one uniform per draw, binary search on the
/// cumulative weights.
#[derive(Clone, Debug)]
pub struct IidSampler {
    cdf: Vec<f64>,
}

impl IidSampler {
    pub fn new(pi: &[f64]) -> Self {
        let mut acc = 0.0;
        let cdf = pi
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        Self { cdf }
    }

    #[inline]
    pub fn draw(&self, rng: &mut Stream) -> usize {
        let total = *self.cdf.last().unwrap();
        let x = rng.uniform() * total;
        self.cdf.partition_point(|&c| c <= x).min(self.cdf.len() - 1)
    }
}

/// `m` iid draws from `π` with the stream seeded by `seed`.
pub fn sample_iid(density: &Density, m: usize, seed: u64) -> Result<Vec<usize>> {
    if m == 0 {
        return Err(Error::Validation("sample count must be at least 1".into()));
    }
    validate_pi(density.pi())?;
    let sampler = density.sampler();
    let mut rng = Stream::new(seed);
    Ok((0..m).map(|_| sampler.draw(&mut rng)).collect())
}
