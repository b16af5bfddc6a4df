//! Continuous and independent variable-density k-space sampling for
//! compressed sensing.
//!
//! The crate builds the measurement operator `A = F Ψ*` (unitary DFT of an
//! orthonormal wavelet synthesis), derives the sampling density
//! `π_i ∝ ‖a_i‖²_∞`, draws iid or Markov-chain trajectories with that
//! stationary law, reconstructs images by equality-constrained ℓ1
//! minimization with Douglas-Rachford splitting, and certifies schemes
//! against the concentration bounds and the `γ(A) < 1/(2s)` recovery
//! criterion.

pub mod certify;
pub mod chains;
pub mod density;
pub mod error;
pub mod experiment;
pub mod par;
pub mod pgm;
pub mod phantom;
pub mod recon;
pub mod rng;
pub mod schemes;
pub mod transforms;

pub use error::{Error, Result};
pub use par::Execution;
