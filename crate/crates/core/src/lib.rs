//! Composable building blocks for Bayesian inference.
//!
//! Low-level atoms (acceptance rules, the leapfrog integrator, resamplers,
//! adapters) combine into complete MCMC, SMC, stochastic-gradient and
//! variational algorithms. Every algorithm is a pure state machine: all the
//! information needed for the next iteration lives in its state, and all
//! randomness comes from an explicit [`RngKey`].
//!
//! ```
//! use bayeskit::mcmc::{Hmc, Kernel};
//! use bayeskit::{Metric, RngKey, Target};
//!
//! let target = Target::new(1, |x: &[f64]| -0.5 * x[0] * x[0], |x: &[f64]| vec![-x[0]]);
//! let hmc = Hmc::new(0.2, 10, Metric::identity(1)).unwrap();
//! let state = hmc.init(&[1.0], &target).unwrap();
//! let (next, info) = hmc.step(RngKey::new(0), &state, &target);
//! assert!(info.p_accept > 0.9);
//! # let _ = next;
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adaptation;
pub mod algorithm;
pub mod diagnostics;
pub mod error;
pub mod integrator;
pub mod mcmc;
pub mod proposal;
pub mod rng;
pub mod sgmcmc;
pub mod smc;
pub mod target;
pub mod vi;

pub use algorithm::{
    run_chain, AcceptanceInfo, ApproximateInference, ChainTrace, HasPosition, SamplingAlgorithm,
};
pub use error::{Error, Result};
pub use integrator::Metric;
pub use rng::RngKey;
pub use target::{LogDensity, Target};
