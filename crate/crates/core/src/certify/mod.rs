//! Numerical certificates for sampling schemes: concentration of the
//! empirical Gram matrix, closed-form bounds and measurement counts, the
//! `γ(A)` recovery criterion and a brute-force recovery oracle.

mod bounds;
mod empirical;
mod gamma;
mod montecarlo;
mod recovery;

use std::fmt::Write as _;

pub use bounds::{
    bernstein_bound, h, juditsky_t, lezaud_bound, lezaud_envelope, min_measurements_iid, min_measurements_markov,
    BoundInputs, BoundReport,
};
pub use empirical::{deviation, w_matrix, DenseRows, CERTIFY_LIMIT};
pub use gamma::{gamma, project_l1_ball, realified, s_max, GammaParams, GammaResult, GAMMA_LIMIT};
pub use montecarlo::{monte_carlo_tail, TailCurve, MIN_REPLICATES, TAIL_LIMIT};
pub use recovery::{
    brute_force_recovery, brute_force_recovery_with, instance_seed, RecoveryParams, RecoveryTable, MAX_SPARSITY,
    MAX_SUPPORTS, RECOVERY_LIMIT, RECOVERY_TOL,
};

use crate::chains::Trajectory;
use crate::density::Density;
use crate::error::Result;
use crate::par::Execution;
use crate::transforms::MeasurementSystem;

/// Certificate for one trajectory.
#[derive(Clone, Debug, PartialEq)]
pub struct CertReport {
    pub generator: String,
    pub m: usize,
    /// `‖I − W_m‖_∞`.
    pub deviation: f64,
    pub gamma: Option<GammaResult>,
}

impl CertReport {
    /// Sparsity certified by `γ`; outer `None` when `γ` was not computed,
    /// inner `None` when it is unbounded.
    pub fn s_max(&self) -> Option<Option<usize>> {
        self.gamma.as_ref().map(|g| g.s_max())
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "generator = {}", self.generator);
        let _ = writeln!(out, "m = {}", self.m);
        let _ = writeln!(out, "deviation = {:e}", self.deviation);
        match &self.gamma {
            Some(g) => {
                let _ = writeln!(out, "gamma = {:e}", g.value);
                let _ = writeln!(out, "gamma_converged = {}", g.converged);
                let s = g.s_max().map_or_else(|| "inf".to_string(), |s| s.to_string());
                let _ = writeln!(out, "s_max = {s}");
            }
            None => {
                let _ = writeln!(out, "gamma = na");
                let _ = writeln!(out, "s_max = na");
            }
        }
        out
    }
}

/// `‖I − W_m‖_∞` for a trajectory over the full grid of `system`.
pub fn empirical_w(trajectory: &Trajectory, system: &MeasurementSystem, density: &Density) -> Result<CertReport> {
    let rows = DenseRows::new(system, Execution::Parallel)?;
    Ok(CertReport {
        generator: trajectory.generator.to_string(),
        m: trajectory.len(),
        deviation: deviation(&rows, density, &trajectory.sites)?,
        gamma: None,
    })
}
