//! Group-orbit averaged Markov chains on finite state spaces.
//!
//! A base sampler `P` that is stationary for `pi` can be augmented with a
//! group action through its orbit partition alone: the Gibbs (`G`),
//! Metropolis-Hastings (`M`) and Barker (`B`) orbit kernels refresh the state
//! within its orbit, and the multiplicative sandwiches `QPQ` or additive
//! mixtures `(P + Q)/2` never mix worse than `P` in absolute spectral gap.
//! The crate builds these kernels densely and verifies the structural theory
//! around them numerically:
//!
//! * projection/restriction chains, orbit escape probabilities and a
//!   decomposition lower bound on the right spectral gap;
//! * reversible spectra, the contraction constant `theta` that governs how
//!   fast `M^t` approaches `G`, and asymptotic variances;
//! * KL geometry: `GPG` is the exact information projection of `P` onto the
//!   set of sandwich-invariant kernels, with a Pythagorean identity and
//!   data-processing monotonicity;
//! * optimal design in both directions (best `P` for a fixed partition, best
//!   partition for a fixed budget of blocks) and exact-sampler constructions;
//! * alternating projections over several partitions, with convergence rates
//!   from the singular values of an overlap matrix and recursive schedules
//!   that hit the stationary projector exactly;
//! * the Curie-Weiss magnetisation case study with a star-shaped sampler that
//!   mixes in polynomial time while single-site Glauber dynamics stalls;
//! * trajectory-driven heuristics that learn a useful partition on the fly.
//!
//! Batch workloads (seed sweeps, Monte Carlo transition sampling, worst-case
//! total-variation scans) run data-parallel via rayon when the default
//! `parallel` feature is enabled and fall back to sequential loops otherwise.

pub mod altproj;
pub mod curie_weiss;
pub mod decomposition;
pub mod design;
mod dist;
mod error;
pub mod examples;
pub mod golden;
pub mod io;
pub mod kernel;
pub mod kl;
mod linalg;
pub mod par;
mod partition;
pub mod random;
pub mod spectral;
pub mod stats;
mod tol;
pub mod tuning;

pub use dist::Distribution;
pub use error::{Error, Result};
pub use kernel::{Kernel, KernelFlags, OrbitKernelKind};
pub use linalg::{matrix_power, max_abs_diff, pi_operator_norm};
pub use partition::{DisjointSet, OrbitPartition};
pub use tol::Tolerances;
