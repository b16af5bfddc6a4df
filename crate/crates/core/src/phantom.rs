//! Piecewise-constant head phantom used as the bundled reference image.
//!
//! Ten ellipses on `[-1, 1]²` with the modified (high-contrast) intensity
//! set. Each ellipse is `(value, semi-axis x, semi-axis y, centre x,
//! centre y, rotation in degrees)`; a pixel takes the sum of the values of
//! the ellipses containing its centre, clamped to `[0, 1]`.

use crate::error::{Error, Result};
use crate::pgm;
use crate::transforms::Image;

const ELLIPSES: [[f64; 6]; 10] = [
    [1.0, 0.69, 0.92, 0.0, 0.0, 0.0],
    [-0.8, 0.6624, 0.874, 0.0, -0.0184, 0.0],
    [-0.2, 0.11, 0.31, 0.22, 0.0, -18.0],
    [-0.2, 0.16, 0.41, -0.22, 0.0, 18.0],
    [0.1, 0.21, 0.25, 0.0, 0.35, 0.0],
    [0.1, 0.046, 0.046, 0.0, 0.1, 0.0],
    [0.1, 0.046, 0.046, 0.0, -0.1, 0.0],
    [0.1, 0.046, 0.023, -0.08, -0.605, 0.0],
    [0.1, 0.023, 0.023, 0.0, -0.606, 0.0],
    [0.1, 0.023, 0.046, 0.06, -0.605, 0.0],
];

/// Phantom rasterized on a `rows x cols` grid with peak 1. Row 0 is the top.
pub fn shepp_logan(rows: usize, cols: usize) -> Result<Image> {
    if rows == 0 || cols == 0 {
        return Err(Error::Dimension("phantom needs a non-empty grid".into()));
    }
    let mut pixels = vec![0.0; rows * cols];
    for r in 0..rows {
        let y = 1.0 - (2 * r + 1) as f64 / rows as f64;
        for c in 0..cols {
            let x = (2 * c + 1) as f64 / cols as f64 - 1.0;
            let mut v = 0.0;
            for &[value, a, b, x0, y0, deg] in &ELLIPSES {
                let (s, co) = deg.to_radians().sin_cos();
                let (dx, dy) = (x - x0, y - y0);
                let u = dx * co + dy * s;
                let w = -dx * s + dy * co;
                if (u / a).powi(2) + (w / b).powi(2) <= 1.0 {
                    v += value;
                }
            }
            pixels[r * cols + c] = v.clamp(0.0, 1.0);
        }
    }
    Image::unit(rows, cols, pixels)
}

/// The phantom after an 8-bit PGM round trip, so that it compares equal to
/// a written and re-read copy.
pub fn shepp_logan_8bit(rows: usize, cols: usize) -> Result<Image> {
    pgm::decode(&pgm::encode(&shepp_logan(rows, cols)?, 255))
}
