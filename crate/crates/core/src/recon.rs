//! Equality-constrained ℓ1 reconstruction by Douglas-Rachford splitting.
//!
//! Solves `min ‖w‖₁ s.t. A_m w = y` over complex wavelet coefficients. The
//! constraint set `C` is affine; with orthonormal rows its projector is
//! `P_C(w) = w − A_m^H (A_m w − y)`. The iteration is
//!
//! ```text
//! p = P_C(z)
//! z ← z + λ (soft(2p − z, γ) − p)
//! ```
//!
//! and the estimate is `w = P_C(z)`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::transforms::{dwt2, idwt2, Image, MeasurementSystem};

/// Douglas-Rachford parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DrParams {
    pub max_iters: usize,
    /// Threshold of the ℓ1 prox; `None` means `1e-2 · ‖A^H y‖_∞`.
    pub gamma: Option<f64>,
    /// Relaxation in `(0, 2)`.
    pub lambda: f64,
    /// Stop when `‖soft(2p − z) − p‖ / ‖p‖` drops below this.
    pub tol: f64,
}

impl Default for DrParams {
    fn default() -> Self {
        Self {
            max_iters: 500,
            gamma: None,
            lambda: 1.0,
            tol: 1e-8,
        }
    }
}

impl DrParams {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::Validation("max_iters must be positive".into()));
        }
        if !(self.lambda > 0.0 && self.lambda < 2.0) {
            return Err(Error::Validation(format!("relaxation {} outside (0, 2)", self.lambda)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::Validation("tolerance must be positive".into()));
        }
        if let Some(g) = self.gamma {
            if !(g > 0.0 && g.is_finite()) {
                return Err(Error::Validation(format!("threshold {g} must be positive")));
            }
        }
        Ok(())
    }
}

/// An affine set `{w : A w = y}` with an exact Euclidean projector.
pub trait AffineSet {
    fn dim(&self) -> usize;
    fn project(&self, w: &[Complex64]) -> Result<Vec<Complex64>>;
    /// `‖A w − y‖₂`.
    fn residual(&self, w: &[Complex64]) -> Result<f64>;
}

/// Data-consistency set of a masked Fourier-wavelet system.
#[derive(Clone, Debug)]
pub struct ReconProblem {
    pub system: MeasurementSystem,
    pub data: Vec<Complex64>,
    pub params: DrParams,
}

impl ReconProblem {
    pub fn new(system: MeasurementSystem, data: Vec<Complex64>, params: DrParams) -> Result<Self> {
        if data.len() != system.m() {
            return Err(Error::Dimension(format!(
                "{} measurements for a mask of {}",
                data.len(),
                system.m()
            )));
        }
        params.validate()?;
        Ok(Self { system, data, params })
    }
}

impl AffineSet for ReconProblem {
    fn dim(&self) -> usize {
        self.system.n()
    }

    fn project(&self, w: &[Complex64]) -> Result<Vec<Complex64>> {
        project_affine(&self.system, w, &self.data)
    }

    fn residual(&self, w: &[Complex64]) -> Result<f64> {
        let f = self.system.forward(w)?;
        Ok(norm(&sub(&f, &self.data)))
    }
}

/// Outcome of a solve.
#[derive(Clone, Debug, PartialEq)]
pub struct ReconResult {
    pub coefficients: Vec<Complex64>,
    pub iterations: usize,
    pub residual: f64,
    pub objective: f64,
    pub converged: bool,
}

impl ReconResult {
    /// Real part of the synthesized image, clamped to `[0, peak]`.
    pub fn image(&self, system: &MeasurementSystem, peak: f64) -> Result<Image> {
        let re: Vec<f64> = self.coefficients.iter().map(|c| c.re).collect();
        let pixels = idwt2(&re, system.rows(), system.cols(), system.wavelet())?
            .into_iter()
            .map(|p| p.clamp(0.0, peak))
            .collect();
        Image::new(system.rows(), system.cols(), pixels, peak)
    }
}

fn sub(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub(crate) fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

pub(crate) fn l1(a: &[Complex64]) -> f64 {
    a.iter().map(|v| v.norm()).sum()
}

/// Euclidean projection onto `{w : A_m w = y}`: `w − A_m^H (A_m w − y)`.
pub fn project_affine(system: &MeasurementSystem, w: &[Complex64], y: &[Complex64]) -> Result<Vec<Complex64>> {
    let r = sub(&system.forward(w)?, y);
    let c = system.adjoint(&r)?;
    Ok(sub(w, &c))
}

/// Proximal map of `τ‖·‖₁`: magnitudes shrink by `τ`, phases are kept.
pub fn soft_threshold(w: &[Complex64], tau: f64) -> Vec<Complex64> {
    w.iter()
        .map(|&v| {
            let m = v.norm();
            if m <= tau {
                Complex64::default()
            } else {
                v * (1.0 - tau / m)
            }
        })
        .collect()
}

/// Douglas-Rachford on the Fourier-wavelet problem.
pub fn douglas_rachford(problem: &ReconProblem) -> Result<ReconResult> {
    douglas_rachford_on(problem, &problem.params)
}

/// Douglas-Rachford on any affine set. Starts from `z = P_C(0)`, the
/// minimum-norm feasible point. Hitting `max_iters` is not an error; the
/// result carries `converged = false`.
pub fn douglas_rachford_on<S: AffineSet + ?Sized>(set: &S, params: &DrParams) -> Result<ReconResult> {
    params.validate()?;
    let mut z = set.project(&vec![Complex64::default(); set.dim()])?;
    let gamma = params
        .gamma
        .unwrap_or_else(|| 1e-2 * z.iter().map(|v| v.norm()).fold(0.0, f64::max));
    let mut w = z.clone();
    let mut converged = false;
    let mut iterations = 0;
    for it in 1..=params.max_iters {
        iterations = it;
        let p = set.project(&z)?;
        let reflected: Vec<Complex64> = p.iter().zip(&z).map(|(a, b)| 2.0 * a - b).collect();
        let s = soft_threshold(&reflected, gamma);
        let step = sub(&s, &p);
        for (zi, di) in z.iter_mut().zip(&step) {
            *zi += params.lambda * di;
        }
        // The fixed-point residual, not the motion of `p`: `z` can move
        // along the constraint normals while `p` stays put.
        let residual = norm(&step);
        let size = norm(&p);
        w = p;
        if residual == 0.0 || residual < params.tol * size {
            converged = true;
            break;
        }
    }
    Ok(ReconResult {
        residual: set.residual(&w)?,
        objective: l1(&w),
        coefficients: w,
        iterations,
        converged,
    })
}

/// Masked k-space samples `A_m Ψ x` of an image.
pub fn measure(system: &MeasurementSystem, image: &Image) -> Result<Vec<Complex64>> {
    if image.rows() != system.rows() || image.cols() != system.cols() {
        return Err(Error::Dimension(format!(
            "{}x{} image for a {}x{} system",
            image.rows(),
            image.cols(),
            system.rows(),
            system.cols()
        )));
    }
    let coeffs = dwt2(image.pixels(), image.rows(), image.cols(), system.wavelet())?;
    system.forward_real(&coeffs)
}

/// Samples `image` through `system` and reconstructs it.
pub fn reconstruct(system: &MeasurementSystem, image: &Image, params: DrParams) -> Result<(ReconResult, Image)> {
    let data = measure(system, image)?;
    let problem = ReconProblem::new(system.clone(), data, params)?;
    let result = douglas_rachford(&problem)?;
    let out = result.image(system, image.peak())?;
    Ok((result, out))
}

/// `10 log10(peak² / MSE)` with the reference's peak; `+∞` when identical.
pub fn psnr(reference: &Image, reconstruction: &Image) -> Result<f64> {
    if reference.rows() != reconstruction.rows() || reference.cols() != reconstruction.cols() {
        return Err(Error::Dimension(format!(
            "{}x{} vs {}x{}",
            reference.rows(),
            reference.cols(),
            reconstruction.rows(),
            reconstruction.cols()
        )));
    }
    let mse = reference
        .pixels()
        .iter()
        .zip(reconstruction.pixels())
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        / reference.len() as f64;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (reference.peak().powi(2) / mse).log10())
}
