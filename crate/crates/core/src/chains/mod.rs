//! Markov kernels on the k-space grid with stationary law `π`, trajectory
//! simulation and spectral gaps.

mod graph;
mod kernel;
mod spectral;
mod walk;

pub use graph::{Connectivity, GridGraph};
pub use kernel::{build_metropolis, metropolis_accept, mix_kernel, TransitionKernel, DENSE_LIMIT};
pub use spectral::{eigenvalues_dense, spectral_gap, spectral_gap_dense, spectral_gap_iterative};
pub use walk::{
    simulate, simulate_second_order, straight_runs, total_variation, ChainSampler, Generator, Trajectory, Walker,
};
