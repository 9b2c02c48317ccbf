use super::{DensityState, Kernel, McmcInfo, StepSizeKernel};
use crate::error::{Error, Result};
use crate::proposal::{binomial_accept, safe_energy_diff};
use crate::rng::RngKey;
use crate::target::LogDensity;

/// Gaussian random-walk increment scale, shared or per coordinate.
#[derive(Debug, Clone, PartialEq)]
pub enum ProposalScale {
    Isotropic(f64),
    PerCoordinate(Vec<f64>),
}

impl ProposalScale {
    fn get(&self, i: usize) -> f64 {
        match self {
            ProposalScale::Isotropic(s) => *s,
            ProposalScale::PerCoordinate(s) => s[i],
        }
    }

    fn validate(&self, dim: usize) -> Result<()> {
        let ok = |s: f64| s.is_finite() && s > 0.0;
        match self {
            ProposalScale::Isotropic(s) if ok(*s) => Ok(()),
            ProposalScale::PerCoordinate(v) if v.len() == dim && v.iter().all(|s| ok(*s)) => Ok(()),
            _ => Err(Error::invalid(
                "proposal_scale",
                "must be positive (and match the target dimension if per coordinate)",
            )),
        }
    }
}

/// Symmetric random-walk Metropolis step.
pub fn rwm_step(
    key: RngKey,
    state: &DensityState,
    target: &dyn LogDensity,
    scale: &ProposalScale,
) -> (DensityState, McmcInfo) {
    let (k_noise, k_accept) = key.split2();
    let z = k_noise.normal_vector(state.position.len());
    let position: Vec<f64> = state
        .position
        .iter()
        .zip(&z)
        .enumerate()
        .map(|(i, (q, z))| q + scale.get(i) * z)
        .collect();
    let logdensity = target.logdensity(&position);
    let proposed = DensityState {
        position,
        logdensity,
    };
    let log_ratio = safe_energy_diff(-state.logdensity, -logdensity);
    let out = binomial_accept(k_accept, log_ratio, proposed, state.clone());
    let info = McmcInfo {
        p_accept: out.p_accept,
        accepted: out.accepted,
        is_divergent: logdensity.is_nan(),
        energy: -out.chosen.logdensity,
        num_integration_steps: 0,
        tree_depth: 0,
    };
    (out.chosen, info)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RandomWalk {
    pub scale: ProposalScale,
}

impl RandomWalk {
    pub fn new(scale: ProposalScale) -> Result<Self> {
        match &scale {
            ProposalScale::Isotropic(_) => scale.validate(0)?,
            ProposalScale::PerCoordinate(v) => scale.validate(v.len())?,
        }
        Ok(RandomWalk { scale })
    }

    pub fn isotropic(scale: f64) -> Result<Self> {
        Self::new(ProposalScale::Isotropic(scale))
    }
}

impl Kernel for RandomWalk {
    type State = DensityState;

    fn init(&self, position: &[f64], target: &dyn LogDensity) -> Result<DensityState> {
        self.scale.validate(target.dim())?;
        DensityState::new(position, target)
    }

    fn step(
        &self,
        key: RngKey,
        state: &DensityState,
        target: &dyn LogDensity,
    ) -> (DensityState, McmcInfo) {
        rwm_step(key, state, target, &self.scale)
    }
}

/// The adapted quantity is a global multiplier on the proposal scale.
impl StepSizeKernel for RandomWalk {
    fn step_size(&self) -> f64 {
        match &self.scale {
            ProposalScale::Isotropic(s) => *s,
            ProposalScale::PerCoordinate(v) => v.iter().cloned().fold(f64::NAN, f64::max),
        }
    }

    fn with_step_size(&self, step_size: f64) -> Self {
        let scale = match &self.scale {
            ProposalScale::Isotropic(_) => ProposalScale::Isotropic(step_size),
            ProposalScale::PerCoordinate(v) => {
                let factor = step_size / self.step_size();
                ProposalScale::PerCoordinate(v.iter().map(|s| s * factor).collect())
            }
        };
        RandomWalk { scale }
    }
}
