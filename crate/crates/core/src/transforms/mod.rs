//! Fourier and wavelet transforms and the measurement operator built on them.

mod fourier;
mod system;
pub mod wavelet;

pub use fourier::{centered_index, Fft2};
pub use system::{MeasurementSystem, MATERIALIZE_LIMIT};
pub use wavelet::{dwt2, idwt2, Family, WaveletSpec};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Real intensity grid in row-major order.
#[derive(Clone, Debug, PartialEq)]
pub struct Image {
    rows: usize,
    cols: usize,
    pixels: Vec<f64>,
    peak: f64,
}

impl Image {
    pub fn new(rows: usize, cols: usize, pixels: Vec<f64>, peak: f64) -> Result<Self> {
        if rows == 0 || cols == 0 || pixels.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{} pixels for a {rows}x{cols} image",
                pixels.len()
            )));
        }
        if !(peak.is_finite() && peak > 0.0) {
            return Err(Error::Validation(format!("peak {peak} must be positive")));
        }
        if let Some(p) = pixels.iter().find(|p| !p.is_finite() || **p < 0.0 || **p > peak) {
            return Err(Error::Validation(format!("pixel {p} outside [0, {peak}]")));
        }
        Ok(Self { rows, cols, pixels, peak })
    }

    /// Image with `peak = 1`, pixels expected in `[0, 1]`.
    pub fn unit(rows: usize, cols: usize, pixels: Vec<f64>) -> Result<Self> {
        Self::new(rows, cols, pixels, 1.0)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn peak(&self) -> f64 {
        self.peak
    }
}

/// Complex spectrum on the same grid as an [`Image`], DC at index 0.
#[derive(Clone, Debug, PartialEq)]
pub struct KSpace {
    pub rows: usize,
    pub cols: usize,
    pub samples: Vec<Complex64>,
}

impl KSpace {
    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|v| v.norm_sqr()).sum()
    }
}

/// Unitary forward DFT of an image.
pub fn dft2(image: &Image) -> Result<KSpace> {
    let fft = Fft2::new(image.rows, image.cols)?;
    let mut samples: Vec<Complex64> = image.pixels.iter().map(|&p| Complex64::new(p, 0.0)).collect();
    fft.forward(&mut samples);
    Ok(KSpace {
        rows: image.rows,
        cols: image.cols,
        samples,
    })
}

/// Unitary inverse DFT; returns the complex grid.
pub fn idft2(kspace: &KSpace) -> Result<Vec<Complex64>> {
    let fft = Fft2::new(kspace.rows, kspace.cols)?;
    if kspace.samples.len() != kspace.rows * kspace.cols {
        return Err(Error::Dimension("k-space buffer does not match grid".into()));
    }
    let mut out = kspace.samples.clone();
    fft.inverse(&mut out);
    Ok(out)
}
