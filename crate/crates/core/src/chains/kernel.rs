use std::sync::Arc;

use super::graph::GridGraph;
use crate::density::Density;
use crate::error::{Error, Result};

/// Largest state space for which dense kernel matrices are formed.
pub const DENSE_LIMIT: usize = 4096;

/// Metropolis acceptance for a uniform-over-neighbours proposal.
#[inline]
pub fn metropolis_accept(pi: &[f64], graph: &GridGraph, from: usize, to: usize) -> f64 {
    let ratio = (pi[to] * graph.degree(from) as f64) / (pi[from] * graph.degree(to) as f64);
    ratio.min(1.0)
}

#[derive(Clone, Debug)]
pub(crate) enum Base {
    /// Uniform neighbour proposal with acceptance per CSR edge.
    Metropolis { graph: Arc<GridGraph>, accept: Vec<f64> },
    /// Row-major dense matrix.
    Dense(Vec<f64>),
}

/// Row-stochastic kernel `(1 - α) B + α P̃` where `P̃` has every row equal
/// to the stationary law `π` and `B` is a Metropolis walk or an explicit
/// matrix. The `P̃` part is never materialized.
#[derive(Clone, Debug)]
pub struct TransitionKernel {
    pi: Arc<[f64]>,
    alpha: f64,
    pub(crate) base: Base,
    reversible: bool,
}

impl TransitionKernel {
    /// Explicit dense kernel with a designated target law. Reversibility is
    /// detected from detailed balance (1e-12).
    pub fn from_dense(matrix: Vec<f64>, pi: Vec<f64>) -> Result<Self> {
        let n = pi.len();
        if n == 0 || matrix.len() != n * n {
            return Err(Error::Dimension(format!("{} entries for {n} states", matrix.len())));
        }
        if matrix.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::Validation("negative or non-finite transition probability".into()));
        }
        for (i, row) in matrix.chunks_exact(n).enumerate() {
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > 1e-12 {
                return Err(Error::Validation(format!("row {i} sums to {s}")));
            }
        }
        let mut k = Self {
            pi: Density::from_pi(pi)?.pi().into(),
            alpha: 0.0,
            base: Base::Dense(matrix),
            reversible: false,
        };
        k.reversible = k.detailed_balance_error() < 1e-12;
        Ok(k)
    }

    pub fn n(&self) -> usize {
        self.pi.len()
    }

    pub fn pi(&self) -> &[f64] {
        &self.pi
    }

    pub(crate) fn pi_arc(&self) -> Arc<[f64]> {
        self.pi.clone()
    }

    /// Weight of the independent-draw component.
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn is_reversible(&self) -> bool {
        self.reversible
    }

    pub fn graph(&self) -> Option<&GridGraph> {
        match &self.base {
            Base::Metropolis { graph, .. } => Some(graph),
            Base::Dense(_) => None,
        }
    }

    /// Sparse row of the base kernel `B`, self-loop included.
    pub fn base_row(&self, i: usize) -> Vec<(usize, f64)> {
        match &self.base {
            Base::Metropolis { graph, accept } => {
                let deg = graph.degree(i) as f64;
                let off = graph.edge_offset(i);
                let mut stay = 1.0;
                let mut row: Vec<(usize, f64)> = graph
                    .neighbors(i)
                    .iter()
                    .enumerate()
                    .map(|(e, &j)| {
                        let p = accept[off + e] / deg;
                        stay -= p;
                        (j, p)
                    })
                    .collect();
                row.push((i, stay.max(0.0)));
                row
            }
            Base::Dense(m) => {
                let n = self.n();
                m[i * n..(i + 1) * n]
                    .iter()
                    .enumerate()
                    .filter(|(_, p)| **p != 0.0)
                    .map(|(j, &p)| (j, p))
                    .collect()
            }
        }
    }

    /// Row `i` of the full kernel as a dense vector.
    pub fn dense_row(&self, i: usize) -> Vec<f64> {
        let mut row: Vec<f64> = self.pi.iter().map(|p| self.alpha * p).collect();
        for (j, p) in self.base_row(i) {
            row[j] += (1.0 - self.alpha) * p;
        }
        row
    }

    /// Full `n x n` row-major matrix.
    pub fn to_dense(&self) -> Result<Vec<f64>> {
        let n = self.n();
        if n > DENSE_LIMIT {
            return Err(Error::Capacity(format!("dense kernel with {n} states (limit {DENSE_LIMIT})")));
        }
        Ok((0..n).flat_map(|i| self.dense_row(i)).collect())
    }

    /// `max_i |Σ_j P_ij - 1|`.
    pub fn row_sum_error(&self) -> f64 {
        (0..self.n())
            .map(|i| {
                let base: f64 = self.base_row(i).iter().map(|(_, p)| p).sum();
                let s = (1.0 - self.alpha) * base + self.alpha * self.pi.iter().sum::<f64>();
                (s - 1.0).abs()
            })
            .fold(0.0, f64::max)
    }

    /// `‖πP − π‖₁`.
    pub fn stationary_residual(&self) -> f64 {
        let n = self.n();
        let mut flow = vec![0.0; n];
        for i in 0..n {
            for (j, p) in self.base_row(i) {
                flow[j] += self.pi[i] * p;
            }
        }
        let mass: f64 = self.pi.iter().sum();
        flow.iter()
            .zip(self.pi.iter())
            .map(|(f, p)| ((1.0 - self.alpha) * f + self.alpha * mass * p - p).abs())
            .sum()
    }

    /// `max_ij |π_i P_ij − π_j P_ji|`, dense when the state space allows,
    /// otherwise over the support of the base kernel.
    pub fn detailed_balance_error(&self) -> f64 {
        let n = self.n();
        if let Ok(d) = self.to_dense() {
            let mut worst: f64 = 0.0;
            for i in 0..n {
                for j in i + 1..n {
                    worst = worst.max((self.pi[i] * d[i * n + j] - self.pi[j] * d[j * n + i]).abs());
                }
            }
            return worst;
        }
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for (j, p) in self.base_row(i) {
                let back = self.base_row(j).iter().find(|(k, _)| *k == i).map_or(0.0, |e| e.1);
                let fwd = self.pi[i] * ((1.0 - self.alpha) * p + self.alpha * self.pi[j]);
                let rev = self.pi[j] * ((1.0 - self.alpha) * back + self.alpha * self.pi[i]);
                worst = worst.max((fwd - rev).abs());
            }
        }
        worst
    }
}

/// Metropolis kernel with uniform-over-neighbours proposals targeting `π`:
/// `P_ij = min(1, π_j |N(i)| / (π_i |N(j)|)) / |N(i)|` for neighbours, the
/// rejected mass on the diagonal. Reversible with respect to `π`.
pub fn build_metropolis(graph: Arc<GridGraph>, density: &Density) -> Result<TransitionKernel> {
    let pi = density.pi();
    if graph.n() != pi.len() {
        return Err(Error::Dimension(format!("graph has {} sites, density {}", graph.n(), pi.len())));
    }
    if !graph.is_connected() {
        return Err(Error::Validation("graph is not connected".into()));
    }
    if pi.iter().any(|p| !(*p > 0.0) || !p.is_finite()) {
        return Err(Error::Validation("Metropolis target must be positive on every site".into()));
    }
    if graph.n() > 1 && (0..graph.n()).any(|i| graph.degree(i) == 0) {
        return Err(Error::Validation("isolated site".into()));
    }
    let mut accept = Vec::new();
    for i in 0..graph.n() {
        for &j in graph.neighbors(i) {
            accept.push(metropolis_accept(pi, &graph, i, j));
        }
    }
    Ok(TransitionKernel {
        pi: pi.into(),
        alpha: 0.0,
        base: Base::Metropolis { graph, accept },
        reversible: true,
    })
}

/// `(1 − α) P + α P̃`. Mixing an already mixed kernel composes the weights.
pub fn mix_kernel(kernel: &TransitionKernel, alpha: f64) -> Result<TransitionKernel> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::Validation(format!("alpha {alpha} outside [0, 1]")));
    }
    let mut out = kernel.clone();
    out.alpha = 1.0 - (1.0 - alpha) * (1.0 - kernel.alpha);
    Ok(out)
}
