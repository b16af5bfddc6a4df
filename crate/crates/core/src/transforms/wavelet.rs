//! Orthonormal periodic wavelet transforms (Haar, Daubechies-4).
//!
//! Coefficients use the in-place Mallat layout: after each level the
//! approximation occupies the leading half of every transformed axis and
//! the detail the trailing half, and the next level recurses on the
//! approximation block. An axis of length 1 is never transformed, so a
//! `1 x n` grid carries an ordinary 1D decomposition.

use std::fmt;
use std::ops::{Add, Mul};
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};

const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Orthonormal wavelet family.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Family {
    /// Identity transform: no decomposition regardless of the level count.
    Identity,
    Haar,
    /// Four-tap Daubechies filter with two vanishing moments.
    Daubechies4,
}

impl Family {
    pub fn lowpass(self) -> &'static [f64] {
        const HAAR: [f64; 2] = [FRAC_1_SQRT_2, FRAC_1_SQRT_2];
        const SQRT3: f64 = 1.732_050_807_568_877_2;
        const D: f64 = 4.0 * std::f64::consts::SQRT_2;
        const DB4: [f64; 4] = [
            (1.0 + SQRT3) / D,
            (3.0 + SQRT3) / D,
            (3.0 - SQRT3) / D,
            (1.0 - SQRT3) / D,
        ];
        match self {
            Family::Identity => &[1.0],
            Family::Haar => &HAAR,
            Family::Daubechies4 => &DB4,
        }
    }

    fn code(self) -> u32 {
        match self {
            Family::Identity => 0,
            Family::Haar => 1,
            Family::Daubechies4 => 2,
        }
    }

    fn from_code(code: u32) -> Option<Self> {
        match code {
            0 => Some(Family::Identity),
            1 => Some(Family::Haar),
            2 => Some(Family::Daubechies4),
            _ => None,
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Identity => "identity",
            Family::Haar => "haar",
            Family::Daubechies4 => "db4",
        })
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "identity" | "none" => Ok(Family::Identity),
            "haar" | "db1" => Ok(Family::Haar),
            "db4" | "daubechies4" | "db2" => Ok(Family::Daubechies4),
            other => Err(Error::Parse(format!("unknown wavelet family `{other}`"))),
        }
    }
}

/// Wavelet family plus decomposition depth.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct WaveletSpec {
    pub family: Family,
    pub levels: usize,
}

impl WaveletSpec {
    pub fn new(family: Family, levels: usize) -> Self {
        Self { family, levels }
    }

    pub fn haar(levels: usize) -> Self {
        Self::new(Family::Haar, levels)
    }

    pub fn identity() -> Self {
        Self::new(Family::Identity, 0)
    }

    /// Default depth `log2(min side) - 2`, floored at 1 where the grid allows.
    pub fn default_levels(rows: usize, cols: usize) -> usize {
        let max = max_levels(rows, cols);
        max.saturating_sub(2).max(max.min(1))
    }

    /// Levels actually applied (0 for the identity family).
    pub fn effective_levels(&self) -> usize {
        if self.family == Family::Identity {
            0
        } else {
            self.levels
        }
    }

    pub fn validate(&self, rows: usize, cols: usize) -> Result<()> {
        let max = max_levels(rows, cols);
        if self.effective_levels() > max {
            return Err(Error::Dimension(format!(
                "{} levels requested but a {rows}x{cols} grid allows at most {max}",
                self.levels
            )));
        }
        Ok(())
    }

    pub(crate) fn code(&self) -> u32 {
        self.family.code()
    }

    pub(crate) fn from_parts(code: u32, levels: usize) -> Option<Self> {
        Family::from_code(code).map(|family| Self { family, levels })
    }
}

impl fmt::Display for WaveletSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.family, self.levels)
    }
}

impl FromStr for WaveletSpec {
    type Err = Error;

    /// Parses `family:levels`, e.g. `haar:3`.
    fn from_str(s: &str) -> Result<Self> {
        let (fam, lev) = s
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("wavelet spec `{s}` is not family:levels")))?;
        let levels = lev
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad level count in `{s}`")))?;
        Ok(Self::new(fam.trim().parse()?, levels))
    }
}

/// Largest depth such that no transformed axis shrinks below length 1.
pub fn max_levels(rows: usize, cols: usize) -> usize {
    let sides: Vec<usize> = [rows, cols].into_iter().filter(|&d| d > 1).collect();
    sides
        .iter()
        .map(|d| d.trailing_zeros() as usize)
        .min()
        .unwrap_or(0)
}

/// Values the filter bank can act on.
pub trait Sample: Copy + Default + Add<Output = Self> + Mul<f64, Output = Self> + Send + Sync {}
impl Sample for f64 {}
impl Sample for Complex64 {}

fn highpass_tap(h: &[f64], t: usize) -> f64 {
    let l = h.len();
    let v = h[l - 1 - t];
    if t % 2 == 0 {
        v
    } else {
        -v
    }
}

/// One periodic analysis step on a strided line of even length `len`.
fn analyze_line<T: Sample>(h: &[f64], data: &mut [T], start: usize, stride: usize, len: usize, buf: &mut Vec<T>) {
    buf.clear();
    buf.extend((0..len).map(|i| data[start + i * stride]));
    let half = len / 2;
    for k in 0..half {
        let mut a = T::default();
        let mut d = T::default();
        for (t, &ht) in h.iter().enumerate() {
            let x = buf[(2 * k + t) % len];
            a = a + x * ht;
            d = d + x * highpass_tap(h, t);
        }
        data[start + k * stride] = a;
        data[start + (half + k) * stride] = d;
    }
}

/// Inverse of [`analyze_line`] (its transpose, since the step is orthogonal).
fn synthesize_line<T: Sample>(h: &[f64], data: &mut [T], start: usize, stride: usize, len: usize, buf: &mut Vec<T>) {
    buf.clear();
    buf.resize(len, T::default());
    let half = len / 2;
    for k in 0..half {
        let a = data[start + k * stride];
        let d = data[start + (half + k) * stride];
        for (t, &ht) in h.iter().enumerate() {
            let j = (2 * k + t) % len;
            buf[j] = buf[j] + a * ht + d * highpass_tap(h, t);
        }
    }
    for (i, v) in buf.iter().enumerate() {
        data[start + i * stride] = *v;
    }
}

fn level_sizes(rows: usize, cols: usize, levels: usize) -> Vec<(usize, usize)> {
    let mut sizes = Vec::with_capacity(levels);
    let (mut r, mut c) = (rows, cols);
    for _ in 0..levels {
        sizes.push((r, c));
        if r > 1 {
            r /= 2;
        }
        if c > 1 {
            c /= 2;
        }
    }
    sizes
}

/// In-place forward 2D transform.
pub fn dwt2_in_place<T: Sample>(data: &mut [T], rows: usize, cols: usize, spec: &WaveletSpec) -> Result<()> {
    if data.len() != rows * cols {
        return Err(Error::Dimension(format!(
            "buffer of {} values for a {rows}x{cols} grid",
            data.len()
        )));
    }
    spec.validate(rows, cols)?;
    let h = spec.family.lowpass();
    let mut buf = Vec::new();
    for (r, c) in level_sizes(rows, cols, spec.effective_levels()) {
        if r > 1 {
            for col in 0..c {
                analyze_line(h, data, col, cols, r, &mut buf);
            }
        }
        if c > 1 {
            for row in 0..r {
                analyze_line(h, data, row * cols, 1, c, &mut buf);
            }
        }
    }
    Ok(())
}

/// In-place inverse 2D transform.
pub fn idwt2_in_place<T: Sample>(data: &mut [T], rows: usize, cols: usize, spec: &WaveletSpec) -> Result<()> {
    if data.len() != rows * cols {
        return Err(Error::Dimension(format!(
            "buffer of {} values for a {rows}x{cols} grid",
            data.len()
        )));
    }
    spec.validate(rows, cols)?;
    let h = spec.family.lowpass();
    let mut buf = Vec::new();
    for (r, c) in level_sizes(rows, cols, spec.effective_levels()).into_iter().rev() {
        if c > 1 {
            for row in 0..r {
                synthesize_line(h, data, row * cols, 1, c, &mut buf);
            }
        }
        if r > 1 {
            for col in 0..c {
                synthesize_line(h, data, col, cols, r, &mut buf);
            }
        }
    }
    Ok(())
}

/// Forward transform of a real grid.
pub fn dwt2(pixels: &[f64], rows: usize, cols: usize, spec: &WaveletSpec) -> Result<Vec<f64>> {
    let mut out = pixels.to_vec();
    dwt2_in_place(&mut out, rows, cols, spec)?;
    Ok(out)
}

/// Inverse transform of a real coefficient grid.
pub fn idwt2(coeffs: &[f64], rows: usize, cols: usize, spec: &WaveletSpec) -> Result<Vec<f64>> {
    let mut out = coeffs.to_vec();
    idwt2_in_place(&mut out, rows, cols, spec)?;
    Ok(out)
}

/// Multilevel 1D decomposition of a full line.
///
/// Returns `(approximations, details)` where `approximations[j]` and
/// `details[j]` are the outputs of level `j + 1`. For a line of length 1
/// both lists are empty.
pub fn decompose_1d<T: Sample>(line: &[T], family: Family, levels: usize) -> (Vec<Vec<T>>, Vec<Vec<T>>) {
    let h = family.lowpass();
    let mut approx = Vec::new();
    let mut details = Vec::new();
    if line.len() <= 1 || family == Family::Identity {
        return (approx, details);
    }
    let mut cur = line.to_vec();
    let mut buf = Vec::new();
    for _ in 0..levels {
        let len = cur.len();
        analyze_line(h, &mut cur, 0, 1, len, &mut buf);
        details.push(cur[len / 2..].to_vec());
        cur.truncate(len / 2);
        approx.push(cur.clone());
    }
    (approx, details)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Stream;

    fn energy(x: &[f64]) -> f64 {
        x.iter().map(|v| v * v).sum()
    }

    #[test]
    fn constant_has_no_detail() {
        let a = 3.5;
        let c = dwt2(&[a; 4], 2, 2, &WaveletSpec::haar(1)).unwrap();
        assert!((c[0] - 2.0 * a).abs() < 1e-14);
        assert!(c[1..].iter().all(|v| v.abs() < 1e-14));
    }

    // Explicit 4x4 matrix of the one-level 2x2 Haar transform in Mallat order
    // [LL, LH(row detail), HL(col detail), HH].
    #[test]
    fn haar_single_level_matches_matrix() {
        let m = [
            [0.5, 0.5, 0.5, 0.5],
            [0.5, -0.5, 0.5, -0.5],
            [0.5, 0.5, -0.5, -0.5],
            [0.5, -0.5, -0.5, 0.5],
        ];
        let x = [1.0, 0.0, 0.0, 0.0];
        let c = dwt2(&x, 2, 2, &WaveletSpec::haar(1)).unwrap();
        for i in 0..4 {
            let expect: f64 = (0..4).map(|j| m[i][j] * x[j]).sum();
            assert!((c[i] - expect).abs() < 1e-15);
            assert!((c[i] - 0.5).abs() < 1e-15);
        }
        let mut s = Stream::new(5);
        let y: Vec<f64> = (0..4).map(|_| s.normal()).collect();
        let c = dwt2(&y, 2, 2, &WaveletSpec::haar(1)).unwrap();
        for i in 0..4 {
            let expect: f64 = (0..4).map(|j| m[i][j] * y[j]).sum();
            assert!((c[i] - expect).abs() < 1e-14);
        }
    }

    #[test]
    fn parseval_and_round_trip() {
        let mut s = Stream::new(17);
        let specs = [
            (16, 16, WaveletSpec::haar(4)),
            (16, 16, WaveletSpec::new(Family::Daubechies4, 3)),
            (16, 16, WaveletSpec::new(Family::Daubechies4, 4)),
            (1, 64, WaveletSpec::haar(3)),
            (8, 32, WaveletSpec::new(Family::Daubechies4, 3)),
            (4, 4, WaveletSpec::identity()),
        ];
        for (rows, cols, spec) in specs {
            let x: Vec<f64> = (0..rows * cols).map(|_| s.normal()).collect();
            let c = dwt2(&x, rows, cols, &spec).unwrap();
            assert!(((energy(&c) - energy(&x)) / energy(&x)).abs() < 1e-12);
            let back = idwt2(&c, rows, cols, &spec).unwrap();
            let err = x.iter().zip(&back).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(err < 1e-12, "{spec} on {rows}x{cols}: {err}");
        }
    }

    #[test]
    fn too_many_levels() {
        assert!(matches!(
            dwt2(&[0.0; 16], 4, 4, &WaveletSpec::haar(3)),
            Err(Error::Dimension(_))
        ));
        assert!(dwt2(&[0.0; 16], 4, 4, &WaveletSpec::haar(2)).is_ok());
        assert_eq!(max_levels(1, 64), 6);
        assert_eq!(max_levels(1, 1), 0);
        assert_eq!(WaveletSpec::default_levels(256, 256), 6);
        assert_eq!(WaveletSpec::default_levels(2, 2), 1);
    }

    #[test]
    fn decompose_matches_grid_transform_on_lines() {
        let mut s = Stream::new(2);
        let x: Vec<f64> = (0..32).map(|_| s.normal()).collect();
        let spec = WaveletSpec::new(Family::Daubechies4, 3);
        let grid = dwt2(&x, 1, 32, &spec).unwrap();
        let (approx, details) = decompose_1d(&x, spec.family, 3);
        assert_eq!(&grid[..4], &approx[2][..]);
        assert_eq!(&grid[4..8], &details[2][..]);
        assert_eq!(&grid[16..], &details[0][..]);
    }

    #[test]
    fn spec_parsing() {
        let s: WaveletSpec = "db4:2".parse().unwrap();
        assert_eq!(s, WaveletSpec::new(Family::Daubechies4, 2));
        assert_eq!(s.to_string().parse::<WaveletSpec>().unwrap(), s);
        assert!("haar".parse::<WaveletSpec>().is_err());
    }
}
