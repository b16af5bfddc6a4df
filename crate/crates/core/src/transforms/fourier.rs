//! Unitary 2D discrete Fourier transform on row-major grids.
//!
//! Both directions are scaled by `1/sqrt(rows * cols)`. DC sits at index
//! `(0, 0)`.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Planned unitary 2D FFT for a fixed grid.
#[derive(Clone)]
pub struct Fft2 {
    rows: usize,
    cols: usize,
    row_fwd: Arc<dyn Fft<f64>>,
    row_inv: Arc<dyn Fft<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
    scale: f64,
}

impl fmt::Debug for Fft2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Fft2")
            .field("rows", &self.rows)
            .field("cols", &self.cols)
            .finish()
    }
}

pub(crate) fn check_pow2(rows: usize, cols: usize) -> Result<()> {
    if rows == 0 || cols == 0 || !rows.is_power_of_two() || !cols.is_power_of_two() {
        return Err(Error::Dimension(format!(
            "grid {rows}x{cols} must have power-of-two sides"
        )));
    }
    Ok(())
}

impl Fft2 {
    pub fn new(rows: usize, cols: usize) -> Result<Self> {
        check_pow2(rows, cols)?;
        let mut planner = FftPlanner::new();
        Ok(Self {
            rows,
            cols,
            row_fwd: planner.plan_fft_forward(cols),
            row_inv: planner.plan_fft_inverse(cols),
            col_fwd: planner.plan_fft_forward(rows),
            col_inv: planner.plan_fft_inverse(rows),
            scale: 1.0 / ((rows * cols) as f64).sqrt(),
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn forward(&self, data: &mut [Complex64]) {
        self.run(data, &self.row_fwd, &self.col_fwd);
    }

    pub fn inverse(&self, data: &mut [Complex64]) {
        self.run(data, &self.row_inv, &self.col_inv);
    }

    fn run(&self, data: &mut [Complex64], row: &Arc<dyn Fft<f64>>, col: &Arc<dyn Fft<f64>>) {
        assert_eq!(data.len(), self.rows * self.cols, "buffer does not match grid");
        let (rows, cols) = (self.rows, self.cols);
        if cols > 1 {
            let mut scratch = vec![Complex64::default(); row.get_inplace_scratch_len()];
            row.process_with_scratch(data, &mut scratch);
        }
        if rows > 1 {
            let mut scratch = vec![Complex64::default(); col.get_inplace_scratch_len()];
            let mut column = vec![Complex64::default(); rows];
            for c in 0..cols {
                for r in 0..rows {
                    column[r] = data[r * cols + c];
                }
                col.process_with_scratch(&mut column, &mut scratch);
                for r in 0..rows {
                    data[r * cols + c] = column[r];
                }
            }
        }
        for v in data.iter_mut() {
            *v *= self.scale;
        }
    }
}

/// Index with DC moved to the grid centre (`fftshift`), used for display.
pub fn centered_index(rows: usize, cols: usize, index: usize) -> usize {
    let (r, c) = (index / cols, index % cols);
    ((r + rows / 2) % rows) * cols + (c + cols / 2) % cols
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Stream;
    use std::f64::consts::TAU;

    // Direct O(n^2) unitary DFT, independent of rustfft.
    fn dft_direct(rows: usize, cols: usize, x: &[Complex64], sign: f64) -> Vec<Complex64> {
        let n = (rows * cols) as f64;
        let mut out = vec![Complex64::default(); rows * cols];
        for kr in 0..rows {
            for kc in 0..cols {
                let mut acc = Complex64::default();
                for r in 0..rows {
                    for c in 0..cols {
                        let phase = sign
                            * TAU
                            * ((kr * r) as f64 / rows as f64 + (kc * c) as f64 / cols as f64);
                        acc += x[r * cols + c] * Complex64::from_polar(1.0, phase);
                    }
                }
                out[kr * cols + kc] = acc / n.sqrt();
            }
        }
        out
    }

    #[test]
    fn constant_maps_to_dc() {
        let f = Fft2::new(2, 2).unwrap();
        let mut x = vec![Complex64::new(1.0, 0.0); 4];
        f.forward(&mut x);
        assert!((x[0] - Complex64::new(2.0, 0.0)).norm() < 1e-15);
        assert!(x[1..].iter().all(|v| v.norm() < 1e-15));
    }

    #[test]
    fn matches_direct_sum_and_round_trips() {
        let mut s = Stream::new(11);
        for &(rows, cols) in &[(8, 8), (4, 16), (1, 8), (8, 1)] {
            let f = Fft2::new(rows, cols).unwrap();
            let x: Vec<Complex64> =
                (0..rows * cols).map(|_| Complex64::new(s.uniform(), 0.0)).collect();
            let mut y = x.clone();
            f.forward(&mut y);
            let oracle = dft_direct(rows, cols, &x, -1.0);
            for (a, b) in y.iter().zip(&oracle) {
                assert!((a - b).norm() < 1e-12);
            }
            f.inverse(&mut y);
            for (a, b) in y.iter().zip(&x) {
                assert!((a - b).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn rejects_non_power_of_two() {
        assert!(matches!(Fft2::new(6, 8), Err(Error::Dimension(_))));
        assert!(matches!(Fft2::new(0, 8), Err(Error::Dimension(_))));
    }

    #[test]
    fn centering_moves_dc() {
        assert_eq!(centered_index(4, 4, 0), 2 * 4 + 2);
        assert_eq!(centered_index(1, 8, 0), 4);
    }
}
