//! Complete MCMC samplers assembled from the proposal and integrator atoms.
//!
//! Every sampler is available at two levels: a raw `*_step` function taking
//! all parameters explicitly, and a [`Kernel`] value (built once from its
//! parameters) that can be handed to adaptation, SMC, or wrapped with a
//! target in a [`Sampler`].

mod ghmc;
mod hmc;
mod mala;
mod nuts;
mod rwm;

pub use ghmc::{ghmc_step, Ghmc, GhmcState, DEFAULT_SLICE_JITTER};
pub use hmc::{hmc_step, Hmc};
pub use mala::{mala_step, Mala};
pub use nuts::{nuts_step, Nuts};
pub use rwm::{rwm_step, ProposalScale, RandomWalk};

use crate::algorithm::{AcceptanceInfo, HasPosition, SamplingAlgorithm};
use crate::error::{check_dim, Error, Result};
use crate::integrator::IntegratorState;
use crate::rng::RngKey;
use crate::target::LogDensity;

pub const DEFAULT_DIVERGENCE_THRESHOLD: f64 = 1000.0;

/// Per-step diagnostics shared by all MCMC kernels.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct McmcInfo {
    pub p_accept: f64,
    pub accepted: bool,
    pub is_divergent: bool,
    /// Energy of the returned state.
    pub energy: f64,
    pub num_integration_steps: usize,
    pub tree_depth: usize,
}

impl AcceptanceInfo for McmcInfo {
    fn acceptance_rate(&self) -> f64 {
        self.p_accept
    }

    fn is_divergent(&self) -> bool {
        self.is_divergent
    }
}

/// Position with its cached log density, for gradient-free kernels.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityState {
    pub position: Vec<f64>,
    pub logdensity: f64,
}

impl DensityState {
    pub fn new(position: &[f64], target: &dyn LogDensity) -> Result<Self> {
        check_position(position, target)?;
        Ok(DensityState {
            position: position.to_vec(),
            logdensity: target.logdensity(position),
        })
    }
}

impl HasPosition for DensityState {
    fn position(&self) -> &[f64] {
        &self.position
    }
}

/// Position with cached log density and gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientState {
    pub position: Vec<f64>,
    pub logdensity: f64,
    pub gradient: Vec<f64>,
}

impl GradientState {
    pub fn new(position: &[f64], target: &dyn LogDensity) -> Result<Self> {
        check_position(position, target)?;
        let (logdensity, gradient) = target.logdensity_and_gradient(position);
        check_dim(target.dim(), gradient.len())?;
        Ok(GradientState {
            position: position.to_vec(),
            logdensity,
            gradient,
        })
    }

    pub(crate) fn with_momentum(&self, momentum: Vec<f64>) -> IntegratorState {
        IntegratorState {
            position: self.position.clone(),
            momentum,
            logdensity: self.logdensity,
            gradient: self.gradient.clone(),
        }
    }
}

impl From<IntegratorState> for GradientState {
    fn from(s: IntegratorState) -> Self {
        GradientState {
            position: s.position,
            logdensity: s.logdensity,
            gradient: s.gradient,
        }
    }
}

impl HasPosition for GradientState {
    fn position(&self) -> &[f64] {
        &self.position
    }
}

fn check_position(position: &[f64], target: &dyn LogDensity) -> Result<()> {
    check_dim(target.dim(), position.len())?;
    if position.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::invalid(
            "position",
            "initial position must be finite",
        ))
    }
}

pub(crate) fn check_step_size(step_size: f64) -> Result<()> {
    if step_size.is_finite() && step_size > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(
            "step_size",
            format!("must be positive, got {step_size}"),
        ))
    }
}

/// A Markov transition kernel with its hyperparameters bound; the target is
/// supplied per call.
pub trait Kernel: Send + Sync {
    type State: Clone + Send + Sync + HasPosition;

    fn init(&self, position: &[f64], target: &dyn LogDensity) -> Result<Self::State>;

    fn step(
        &self,
        key: RngKey,
        state: &Self::State,
        target: &dyn LogDensity,
    ) -> (Self::State, McmcInfo);
}

/// Kernels whose leading hyperparameter is a step size that adaptation may tune.
pub trait StepSizeKernel: Kernel + Sized {
    fn step_size(&self) -> f64;

    fn with_step_size(&self, step_size: f64) -> Self;
}

/// A kernel bound to a target: the packaged `init` / `step` algorithm.
pub struct Sampler<'a, K> {
    pub kernel: K,
    pub target: &'a dyn LogDensity,
}

impl<'a, K: Kernel> Sampler<'a, K> {
    pub fn new(kernel: K, target: &'a dyn LogDensity) -> Self {
        Sampler { kernel, target }
    }
}

impl<K: Kernel> SamplingAlgorithm for Sampler<'_, K> {
    type State = K::State;
    type Info = McmcInfo;

    fn init(&self, position: &[f64]) -> Result<K::State> {
        self.kernel.init(position, self.target)
    }

    fn step(&self, key: RngKey, state: &K::State) -> Result<(K::State, McmcInfo)> {
        Ok(self.kernel.step(key, state, self.target))
    }
}
