//! Monte Carlo estimates of `P(‖I − W_m‖_∞ > t)` paired with the closed-form
//! bound of the generator.

use std::fmt::Write as _;

use crate::chains::{spectral_gap, ChainSampler};
use crate::density::Density;
use crate::error::{Error, Result};
use crate::par::Execution;
use crate::rng::derive_seed;

use super::bounds::{bernstein_bound, lezaud_bound};
use super::empirical::{deviation, DenseRows};

/// Largest `n` accepted for tail estimation.
pub const TAIL_LIMIT: usize = 256;
/// Fewest replicates accepted for tail estimation.
pub const MIN_REPLICATES: usize = 1000;

/// Empirical tail and matching bound over a grid of deviations.
#[derive(Clone, Debug, PartialEq)]
pub struct TailCurve {
    pub m: usize,
    pub replicates: usize,
    pub t: Vec<f64>,
    pub empirical: Vec<f64>,
    /// Closed-form bound per `t`; `None` where it does not apply.
    pub bound: Vec<Option<f64>>,
    /// Gap used by the chain bound.
    pub gap: Option<f64>,
    /// Per-replicate `‖I − W_m‖_∞`, in replicate order.
    pub deviations: Vec<f64>,
}

impl TailCurve {
    /// One-sided binomial standard error of the empirical tail at a true
    /// probability `p`.
    pub fn sigma(&self, p: f64) -> f64 {
        let p = p.clamp(0.0, 1.0);
        (p * (1.0 - p) / self.replicates as f64).sqrt()
    }

    /// Largest excess of the empirical tail over `min(1, bound) + k σ`,
    /// where `σ` is evaluated at `min(1, bound)`. Non-positive means the
    /// curve sits inside the envelope.
    pub fn worst_excess(&self, k: f64) -> f64 {
        self.empirical
            .iter()
            .zip(&self.bound)
            .filter_map(|(&e, b)| b.map(|b| (e, b.min(1.0))))
            .map(|(e, b)| e - b - k * self.sigma(b))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// `t,empirical,bound` with `na` for missing bounds.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,empirical,bound\n");
        for ((t, e), b) in self.t.iter().zip(&self.empirical).zip(&self.bound) {
            let b = b.map_or_else(|| "na".to_string(), |b| format!("{b:e}"));
            let _ = writeln!(out, "{t},{e},{b}");
        }
        out
    }
}

/// Runs `replicates` independent trajectories of length `m` from `chain`,
/// replicate `r` seeded by `derive_seed(seed, "tail/rep=<r>")`.
///
/// Iid generators are paired with the Bernstein bound; Metropolis chains
/// with the chain bound at the measured spectral gap, clamped to `(0, 1]`.
/// Second-order walks have no bound.
pub fn monte_carlo_tail(
    chain: &ChainSampler,
    rows: &DenseRows,
    density: &Density,
    m: usize,
    t_grid: &[f64],
    replicates: usize,
    seed: u64,
    exec: Execution,
) -> Result<TailCurve> {
    let n = rows.n();
    if n > TAIL_LIMIT {
        return Err(Error::Capacity(format!("tail estimation for n = {n} (limit {TAIL_LIMIT})")));
    }
    if replicates < MIN_REPLICATES {
        return Err(Error::Validation(format!(
            "{replicates} replicates; at least {MIN_REPLICATES} are required"
        )));
    }
    if m == 0 {
        return Err(Error::Validation("trajectory length must be positive".into()));
    }
    if t_grid.iter().any(|t| !(*t >= 0.0)) {
        return Err(Error::Validation("deviation grid must be non-negative".into()));
    }
    let (gap, chain_bound) = match (chain.generator().name(), chain.kernel()) {
        ("iid", _) => (None, false),
        (_, Some(k)) if k.is_reversible() => (Some(spectral_gap(k)?.min(1.0)), true),
        _ => (None, false),
    };
    let iid = chain.generator().name() == "iid";

    let deviations: Vec<f64> = exec
        .map(replicates, |r| {
            let traj = chain.simulate(m, derive_seed(seed, &format!("tail/rep={r}")))?;
            deviation(rows, density, &traj.sites)
        })
        .into_iter()
        .collect::<Result<_>>()?;

    let (nf, l, mf) = (n as f64, density.l(), m as f64);
    let mut empirical = Vec::with_capacity(t_grid.len());
    let mut bound = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        empirical.push(deviations.iter().filter(|&&d| d > t).count() as f64 / replicates as f64);
        bound.push(if t == 0.0 {
            None
        } else if iid {
            Some(bernstein_bound(nf, l, mf, t)?)
        } else if chain_bound && t <= 1.0 {
            Some(lezaud_bound(nf, l, mf, t, gap.unwrap_or(1.0).max(f64::MIN_POSITIVE))?)
        } else {
            None
        });
    }
    Ok(TailCurve {
        m,
        replicates,
        t: t_grid.to_vec(),
        empirical,
        bound,
        gap,
        deviations,
    })
}
