//! Simulation and bound-verification toolkit for the privacy / fairness /
//! accuracy trade-off on long-tailed data.
//!
//! The crate is organised bottom-up:
//!
//! - [`distribution`]: the `(p, N, k)` long-tailed distribution over a finite
//!   set of subpopulations, sampling, and exact occupancy statistics.
//! - [`labels`]: subpopulation-wise independent label priors and labelling.
//! - [`mechanism`]: the noisy-majority learner, its privacy calibration and
//!   an exact per-atom error oracle.
//! - [`metrics`]: error and accuracy discrepancy, exact over `x` and
//!   Monte-Carlo over everything else.
//! - [`bounds`]: closed-form evaluators for every analytic bound.
//! - [`synth`]: the continuous hypercube Gaussian-mixture generator.
//! - [`experiment`]: configuration, sweeps, verification and report output.

// `!(x > 0.0)` rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod distribution;
pub mod error;
pub mod experiment;
pub mod labels;
pub mod mechanism;
pub mod metrics;
pub mod special;
pub mod synth;

pub use error::{Error, Result};

/// Generator used for every stochastic operation. ChaCha keeps streams
/// stable across platforms and `rand` releases.
pub type SimRng = rand_chacha::ChaCha8Rng;

/// Builds a [`SimRng`] from a 64-bit seed.
pub fn rng_from_seed(seed: u64) -> SimRng {
    use rand::SeedableRng;
    SimRng::seed_from_u64(seed)
}
