use num_complex::Complex64;

use super::fourier::Fft2;
use super::wavelet::{dwt2_in_place, idwt2_in_place, WaveletSpec};
use crate::error::{Error, Result};

/// Largest grid (in sites) for which rows of the operator are materialized.
pub const MATERIALIZE_LIMIT: usize = 1 << 16;

/// Implicit operator `A = F Ψ*` restricted to a k-space mask.
///
/// `forward` maps wavelet coefficients to the masked k-space samples of the
/// synthesized image; `adjoint` is its conjugate transpose. Both transforms
/// are unitary, so the restricted operator has orthonormal rows as long as
/// the mask holds no duplicates, which construction enforces.
#[derive(Clone, Debug)]
pub struct MeasurementSystem {
    rows: usize,
    cols: usize,
    wavelet: WaveletSpec,
    mask: Vec<usize>,
    fft: Fft2,
}

impl MeasurementSystem {
    pub fn new(rows: usize, cols: usize, wavelet: WaveletSpec, mask: Vec<usize>) -> Result<Self> {
        let fft = Fft2::new(rows, cols)?;
        wavelet.validate(rows, cols)?;
        let n = rows * cols;
        let mut seen = vec![false; n];
        for &k in &mask {
            if k >= n {
                return Err(Error::Index(format!("mask index {k} outside a grid of {n} sites")));
            }
            if std::mem::replace(&mut seen[k], true) {
                return Err(Error::Validation(format!("mask index {k} is duplicated")));
            }
        }
        Ok(Self { rows, cols, wavelet, mask, fft })
    }

    /// System measuring every k-space location, in index order.
    pub fn full(rows: usize, cols: usize, wavelet: WaveletSpec) -> Result<Self> {
        Self::new(rows, cols, wavelet, (0..rows * cols).collect())
    }

    /// Same grid and wavelet with a different mask.
    pub fn with_mask(&self, mask: Vec<usize>) -> Result<Self> {
        Self::new(self.rows, self.cols, self.wavelet, mask)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Number of grid sites (and wavelet coefficients).
    pub fn n(&self) -> usize {
        self.rows * self.cols
    }

    /// Number of measurements.
    pub fn m(&self) -> usize {
        self.mask.len()
    }

    pub fn mask(&self) -> &[usize] {
        &self.mask
    }

    pub fn wavelet(&self) -> &WaveletSpec {
        &self.wavelet
    }

    fn check_len(&self, got: usize, want: usize, what: &str) -> Result<()> {
        if got != want {
            return Err(Error::Dimension(format!("{what} has length {got}, expected {want}")));
        }
        Ok(())
    }

    /// Full unitary spectrum of the image synthesized from `coeffs`.
    pub fn kspace_of(&self, coeffs: &[Complex64]) -> Result<Vec<Complex64>> {
        self.check_len(coeffs.len(), self.n(), "coefficient vector")?;
        let mut buf = coeffs.to_vec();
        idwt2_in_place(&mut buf, self.rows, self.cols, &self.wavelet)?;
        self.fft.forward(&mut buf);
        Ok(buf)
    }

    /// `A_m w`: masked k-space of `idwt2(w)`.
    pub fn forward(&self, coeffs: &[Complex64]) -> Result<Vec<Complex64>> {
        let k = self.kspace_of(coeffs)?;
        Ok(self.mask.iter().map(|&i| k[i]).collect())
    }

    pub fn forward_real(&self, coeffs: &[f64]) -> Result<Vec<Complex64>> {
        let c: Vec<Complex64> = coeffs.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward(&c)
    }

    /// `A_m^H y`: zero-fill, inverse DFT, forward wavelet transform.
    pub fn adjoint(&self, measurements: &[Complex64]) -> Result<Vec<Complex64>> {
        self.check_len(measurements.len(), self.m(), "measurement vector")?;
        let mut buf = vec![Complex64::default(); self.n()];
        for (&i, &v) in self.mask.iter().zip(measurements) {
            buf[i] = v;
        }
        self.fft.inverse(&mut buf);
        dwt2_in_place(&mut buf, self.rows, self.cols, &self.wavelet)?;
        Ok(buf)
    }

    /// `a_i = A^H e_i` for k-space location `index`, costing one inverse FFT
    /// and one wavelet transform. Independent of the mask.
    pub fn materialize_row(&self, index: usize) -> Result<Vec<Complex64>> {
        let n = self.n();
        if n > MATERIALIZE_LIMIT {
            return Err(Error::Capacity(format!(
                "materializing rows of a {n}-site grid (limit {MATERIALIZE_LIMIT})"
            )));
        }
        if index >= n {
            return Err(Error::Index(format!("k-space index {index} outside {n} sites")));
        }
        let mut buf = vec![Complex64::default(); n];
        buf[index] = Complex64::new(1.0, 0.0);
        self.fft.inverse(&mut buf);
        dwt2_in_place(&mut buf, self.rows, self.cols, &self.wavelet)?;
        Ok(buf)
    }

    /// Realified masked matrix acting on real coefficients: for each mask
    /// entry the real row then the imaginary row, so `(A x)` splits into
    /// `[Re y_0, Im y_0, Re y_1, ...]`. Row-major, `2m x n`.
    pub fn realified_matrix(&self) -> Result<Vec<f64>> {
        let n = self.n();
        let mut out = Vec::with_capacity(2 * self.m() * n);
        for &k in &self.mask {
            let a = self.materialize_row(k)?;
            // forward(x)_k = sum_j conj(a_j) x_j
            out.extend(a.iter().map(|v| v.re));
            out.extend(a.iter().map(|v| -v.im));
        }
        Ok(out)
    }
}
