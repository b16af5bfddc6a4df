use std::fmt;
use std::sync::Arc;

use super::graph::{Connectivity, GridGraph};
use super::kernel::{build_metropolis, metropolis_accept, mix_kernel, Base, TransitionKernel};
use crate::density::{Density, IidSampler};
use crate::error::{Error, Result};
use crate::rng::Stream;

/// Trajectory generator descriptor.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Generator {
    /// Independent draws from `π`.
    Iid,
    /// First-order chain `P^(α)` over a Metropolis walk.
    Markov { alpha: f64, connectivity: Connectivity },
    /// Persistent walk: the previous move is repeated with probability
    /// `persistence`, otherwise a uniform neighbour is proposed.
    SecondOrder {
        alpha: f64,
        persistence: f64,
        connectivity: Connectivity,
    },
    /// A kernel given as an explicit matrix.
    Explicit { alpha: f64 },
}

impl Generator {
    pub fn markov(alpha: f64) -> Self {
        Generator::Markov {
            alpha,
            connectivity: Connectivity::Four,
        }
    }

    pub fn second_order(alpha: f64, persistence: f64) -> Self {
        Generator::SecondOrder {
            alpha,
            persistence,
            connectivity: Connectivity::Four,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Generator::Iid => "iid",
            Generator::Markov { .. } => "markov",
            Generator::SecondOrder { .. } => "second-order",
            Generator::Explicit { .. } => "explicit",
        }
    }

    /// Jump probability (1 for iid draws).
    pub fn alpha(&self) -> f64 {
        match *self {
            Generator::Iid => 1.0,
            Generator::Markov { alpha, .. }
            | Generator::SecondOrder { alpha, .. }
            | Generator::Explicit { alpha } => alpha,
        }
    }

    pub fn persistence(&self) -> f64 {
        match *self {
            Generator::SecondOrder { persistence, .. } => persistence,
            _ => 0.0,
        }
    }

    pub fn connectivity(&self) -> Option<Connectivity> {
        match *self {
            Generator::Markov { connectivity, .. } | Generator::SecondOrder { connectivity, .. } => Some(connectivity),
            _ => None,
        }
    }

    /// Builds whatever the generator needs to run on `density`'s grid.
    pub fn prepare(&self, density: &Density) -> Result<ChainSampler> {
        let grid = |c| GridGraph::new(density.rows(), density.cols(), c).map(Arc::new);
        match *self {
            Generator::Iid => Ok(ChainSampler {
                generator: *self,
                rows: density.rows(),
                cols: density.cols(),
                support: support(density.pi()),
                sampler: density.sampler(),
                kind: Kind::Iid,
            }),
            Generator::Markov { alpha, connectivity } => {
                let base = build_metropolis(grid(connectivity)?, density)?;
                let mut s = ChainSampler::from_kernel(&mix_kernel(&base, alpha)?);
                s.generator = *self;
                s.rows = density.rows();
                s.cols = density.cols();
                Ok(s)
            }
            Generator::SecondOrder {
                alpha,
                persistence,
                connectivity,
            } => second_order_sampler(grid(connectivity)?, density, alpha, persistence, connectivity),
            Generator::Explicit { .. } => Err(Error::Unsupported(
                "explicit kernels are simulated from the kernel itself".into(),
            )),
        }
    }
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Generator::Iid => write!(f, "iid"),
            Generator::Markov { alpha, connectivity } => write!(f, "markov(alpha={alpha}, conn={connectivity})"),
            Generator::SecondOrder {
                alpha,
                persistence,
                connectivity,
            } => write!(f, "second-order(alpha={alpha}, persistence={persistence}, conn={connectivity})"),
            Generator::Explicit { alpha } => write!(f, "explicit(alpha={alpha})"),
        }
    }
}

fn second_order_sampler(
    graph: Arc<GridGraph>,
    density: &Density,
    alpha: f64,
    persistence: f64,
    connectivity: Connectivity,
) -> Result<ChainSampler> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::Validation(format!("alpha {alpha} outside [0, 1]")));
    }
    if !(0.0..1.0).contains(&persistence) {
        return Err(Error::Validation(format!("persistence {persistence} outside [0, 1)")));
    }
    // Validates the graph/target pair the same way as the first-order chain.
    let kernel = build_metropolis(graph.clone(), density)?;
    Ok(ChainSampler {
        generator: Generator::SecondOrder {
            alpha,
            persistence,
            connectivity,
        },
        rows: density.rows(),
        cols: density.cols(),
        support: support(density.pi()),
        sampler: density.sampler(),
        kind: Kind::SecondOrder {
            graph,
            pi: kernel.pi_arc(),
            alpha,
            persistence,
        },
    })
}

fn support(pi: &[f64]) -> usize {
    pi.iter().filter(|&&p| p > 0.0).count()
}

#[derive(Clone, Debug)]
enum Kind {
    Iid,
    Kernel(TransitionKernel),
    SecondOrder {
        graph: Arc<GridGraph>,
        pi: Arc<[f64]>,
        alpha: f64,
        persistence: f64,
    },
}

/// A prepared generator from which seeded walkers are spawned.
#[derive(Clone, Debug)]
pub struct ChainSampler {
    generator: Generator,
    rows: usize,
    cols: usize,
    support: usize,
    sampler: IidSampler,
    kind: Kind,
}

impl ChainSampler {
    pub fn from_kernel(kernel: &TransitionKernel) -> Self {
        let generator = match kernel.graph() {
            Some(g) => Generator::Markov {
                alpha: kernel.alpha(),
                connectivity: g.connectivity().unwrap_or_default(),
            },
            None => Generator::Explicit { alpha: kernel.alpha() },
        };
        let (rows, cols) = kernel.graph().map_or((1, kernel.n()), |g| (g.rows(), g.cols()));
        Self {
            generator,
            rows,
            cols,
            support: support(kernel.pi()),
            sampler: IidSampler::new(kernel.pi()),
            kind: Kind::Kernel(kernel.clone()),
        }
    }

    pub fn generator(&self) -> Generator {
        self.generator
    }

    /// Grid the walker moves on.
    pub fn grid(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    /// Number of sites with positive stationary mass.
    pub fn support_size(&self) -> usize {
        self.support
    }

    pub fn kernel(&self) -> Option<&TransitionKernel> {
        match &self.kind {
            Kind::Kernel(k) => Some(k),
            _ => None,
        }
    }

    pub fn walker(&self, seed: u64) -> Walker<'_> {
        Walker {
            chain: self,
            rng: Stream::new(seed),
            current: None,
            direction: None,
        }
    }

    /// Runs `m` steps from a fresh walker.
    pub fn simulate(&self, m: usize, seed: u64) -> Result<Trajectory> {
        if m == 0 {
            return Err(Error::Validation("trajectory length must be at least 1".into()));
        }
        let mut w = self.walker(seed);
        let mut sites = Vec::with_capacity(m);
        let mut jumps = Vec::with_capacity(m);
        for _ in 0..m {
            let (s, j) = w.step();
            sites.push(s);
            jumps.push(j);
        }
        Ok(Trajectory {
            sites,
            jumps,
            seed,
            generator: self.generator,
        })
    }
}

/// Stateful walker. Random words are consumed in a fixed order:
///
/// 1. first step: one uniform for the inverse-CDF draw from `π`;
/// 2. later steps: a jump uniform only when `0 < α < 1`; a jump costs one
///    inverse-CDF uniform. Otherwise a second-order walker with a stored
///    direction and positive persistence spends one uniform on the
///    persistence choice, a uniform-neighbour proposal spends one `below`
///    word, and an acceptance uniform is drawn only when the acceptance
///    probability is below one. Explicit kernels spend one uniform on the
///    row's inverse CDF.
#[derive(Clone, Debug)]
pub struct Walker<'a> {
    chain: &'a ChainSampler,
    rng: Stream,
    current: Option<usize>,
    direction: Option<(isize, isize)>,
}

impl Walker<'_> {
    /// Next site and whether it came from an independent draw.
    pub fn step(&mut self) -> (usize, bool) {
        let Some(cur) = self.current else {
            let s = self.chain.sampler.draw(&mut self.rng);
            self.current = Some(s);
            return (s, true);
        };
        let alpha = match &self.chain.kind {
            Kind::Iid => 1.0,
            Kind::Kernel(k) => k.alpha(),
            Kind::SecondOrder { alpha, .. } => *alpha,
        };
        let jump = if alpha >= 1.0 {
            true
        } else if alpha <= 0.0 {
            false
        } else {
            self.rng.uniform() < alpha
        };
        let next = if jump {
            self.direction = None;
            self.chain.sampler.draw(&mut self.rng)
        } else {
            match &self.chain.kind {
                Kind::Iid => unreachable!(),
                Kind::Kernel(k) => match &k.base {
                    Base::Metropolis { graph, accept } => {
                        let nbrs = graph.neighbors(cur);
                        let e = self.rng.below(nbrs.len());
                        let a = accept[graph.edge_offset(cur) + e];
                        if a >= 1.0 || self.rng.uniform() < a {
                            nbrs[e]
                        } else {
                            cur
                        }
                    }
                    Base::Dense(m) => {
                        let n = k.n();
                        let row = &m[cur * n..(cur + 1) * n];
                        let x = self.rng.uniform();
                        let mut acc = 0.0;
                        let mut pick = n - 1;
                        for (j, p) in row.iter().enumerate() {
                            acc += p;
                            if x < acc {
                                pick = j;
                                break;
                            }
                        }
                        pick
                    }
                },
                Kind::SecondOrder {
                    graph, pi, persistence, ..
                } => {
                    let persisted = match self.direction {
                        Some(d) if *persistence > 0.0 => {
                            if self.rng.uniform() < *persistence {
                                graph.step(cur, d)
                            } else {
                                None
                            }
                        }
                        _ => None,
                    };
                    let proposal = persisted.unwrap_or_else(|| {
                        let nbrs = graph.neighbors(cur);
                        nbrs[self.rng.below(nbrs.len())]
                    });
                    let a = metropolis_accept(pi, graph, cur, proposal);
                    if a >= 1.0 || self.rng.uniform() < a {
                        self.direction = Some(graph.displacement(cur, proposal));
                        proposal
                    } else {
                        cur
                    }
                }
            }
        };
        self.current = Some(next);
        (next, jump)
    }
}

/// Ordered sites `X_1..X_m` with per-step jump flags. The first step is a
/// draw from `π` and carries a set flag.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub sites: Vec<usize>,
    pub jumps: Vec<bool>,
    pub seed: u64,
    pub generator: Generator,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    /// Independent draws after the first step.
    pub fn jump_count(&self) -> usize {
        self.jumps.iter().skip(1).filter(|&&j| j).count()
    }

    /// Non-jump steps that neither stay put nor move to a neighbour.
    pub fn continuity_violations(&self, graph: &GridGraph) -> usize {
        self.sites
            .windows(2)
            .zip(self.jumps.iter().skip(1))
            .filter(|(w, &jump)| !jump && w[0] != w[1] && !graph.are_adjacent(w[0], w[1]))
            .count()
    }
}

/// `m` steps of `kernel` started from its stationary law.
pub fn simulate(kernel: &TransitionKernel, m: usize, seed: u64) -> Result<Trajectory> {
    ChainSampler::from_kernel(kernel).simulate(m, seed)
}

/// `m` steps of the persistent walk; see [`Generator::SecondOrder`].
pub fn simulate_second_order(
    graph: Arc<GridGraph>,
    density: &Density,
    alpha: f64,
    persistence: f64,
    m: usize,
    seed: u64,
) -> Result<Trajectory> {
    let conn = graph.connectivity().unwrap_or_default();
    second_order_sampler(graph, density, alpha, persistence, conn)?.simulate(m, seed)
}

/// `½ Σ |f_i − π_i|` between visit frequencies and `π`.
pub fn total_variation(sites: &[usize], pi: &[f64]) -> f64 {
    let mut counts = vec![0usize; pi.len()];
    for &s in sites {
        counts[s] += 1;
    }
    let m = sites.len() as f64;
    0.5 * counts.iter().zip(pi).map(|(&c, p)| (c as f64 / m - p).abs()).sum::<f64>()
}

/// Lengths of maximal straight segments: consecutive moves with the same
/// displacement. Rejected proposals do not break a segment; jumps and turns do.
pub fn straight_runs(traj: &Trajectory, graph: &GridGraph) -> Vec<usize> {
    let mut runs = Vec::new();
    let mut dir: Option<(isize, isize)> = None;
    let mut len = 0;
    for (w, &jump) in traj.sites.windows(2).zip(traj.jumps.iter().skip(1)) {
        if jump {
            if len > 0 {
                runs.push(len);
            }
            dir = None;
            len = 0;
            continue;
        }
        if w[0] == w[1] {
            continue;
        }
        let d = graph.displacement(w[0], w[1]);
        if Some(d) == dir {
            len += 1;
        } else {
            if len > 0 {
                runs.push(len);
            }
            dir = Some(d);
            len = 1;
        }
    }
    if len > 0 {
        runs.push(len);
    }
    runs
}
