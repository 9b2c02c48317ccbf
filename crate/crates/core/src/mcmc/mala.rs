use super::{check_step_size, GradientState, Kernel, McmcInfo, StepSizeKernel};
use crate::error::Result;
use crate::proposal::{asymmetric_log_ratio, binomial_accept};
use crate::rng::RngKey;
use crate::target::LogDensity;

/// `log q(to | from)` up to a constant for the Langevin proposal
/// `to = from + eps * grad(from) + sqrt(2 eps) z`.
pub(crate) fn langevin_log_density(
    to: &[f64],
    from: &[f64],
    grad_from: &[f64],
    step_size: f64,
) -> f64 {
    let sq: f64 = to
        .iter()
        .zip(from)
        .zip(grad_from)
        .map(|((t, f), g)| (t - f - step_size * g).powi(2))
        .sum();
    -sq / (4.0 * step_size)
}

/// Metropolis-adjusted Langevin step.
pub fn mala_step(
    key: RngKey,
    state: &GradientState,
    target: &dyn LogDensity,
    step_size: f64,
) -> (GradientState, McmcInfo) {
    let (k_noise, k_accept) = key.split2();
    let z = k_noise.normal_vector(state.position.len());
    let noise = (2.0 * step_size).sqrt();
    let position: Vec<f64> = state
        .position
        .iter()
        .zip(&state.gradient)
        .zip(&z)
        .map(|((q, g), z)| q + step_size * g + noise * z)
        .collect();
    let (logdensity, gradient) = target.logdensity_and_gradient(&position);
    let log_q_forward =
        langevin_log_density(&position, &state.position, &state.gradient, step_size);
    let log_q_reverse = langevin_log_density(&state.position, &position, &gradient, step_size);
    let log_ratio =
        asymmetric_log_ratio(-state.logdensity, -logdensity, log_q_reverse, log_q_forward);
    let is_divergent = logdensity.is_nan() || gradient.iter().any(|g| g.is_nan());
    let proposed = GradientState {
        position,
        logdensity,
        gradient,
    };
    let out = binomial_accept(k_accept, log_ratio, proposed, state.clone());
    let info = McmcInfo {
        p_accept: out.p_accept,
        accepted: out.accepted,
        is_divergent,
        energy: -out.chosen.logdensity,
        num_integration_steps: 1,
        tree_depth: 0,
    };
    (out.chosen, info)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mala {
    pub step_size: f64,
}

impl Mala {
    pub fn new(step_size: f64) -> Result<Self> {
        check_step_size(step_size)?;
        Ok(Mala { step_size })
    }
}

impl Kernel for Mala {
    type State = GradientState;

    fn init(&self, position: &[f64], target: &dyn LogDensity) -> Result<GradientState> {
        GradientState::new(position, target)
    }

    fn step(
        &self,
        key: RngKey,
        state: &GradientState,
        target: &dyn LogDensity,
    ) -> (GradientState, McmcInfo) {
        mala_step(key, state, target, self.step_size)
    }
}

impl StepSizeKernel for Mala {
    fn step_size(&self) -> f64 {
        self.step_size
    }

    fn with_step_size(&self, step_size: f64) -> Self {
        Mala { step_size }
    }
}
