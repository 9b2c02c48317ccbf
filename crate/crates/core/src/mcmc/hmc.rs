use super::{
    check_step_size, GradientState, Kernel, McmcInfo, StepSizeKernel, DEFAULT_DIVERGENCE_THRESHOLD,
};
use crate::error::{check_dim, Error, Result};
use crate::integrator::{integrate_with, leapfrog, sample_momentum, Integrator, Metric};
use crate::proposal::{acceptance_probability, binomial_accept, safe_energy_diff};
use crate::rng::RngKey;
use crate::target::LogDensity;

/// Static-length HMC: fresh momentum, `num_integration_steps` integrator
/// steps, Metropolis correction on the total energy.
#[allow(clippy::too_many_arguments)]
pub fn hmc_step(
    key: RngKey,
    state: &GradientState,
    target: &dyn LogDensity,
    step_size: f64,
    num_integration_steps: usize,
    metric: &Metric,
    integrator: Integrator,
    divergence_threshold: f64,
) -> (GradientState, McmcInfo) {
    let (k_momentum, k_accept) = key.split2();
    let start = state.with_momentum(sample_momentum(k_momentum, metric));
    let h_start = start.energy(metric);
    let end = integrate_with(
        integrator,
        &start,
        step_size,
        metric,
        target,
        num_integration_steps,
    );
    let h_end = end.energy(metric);

    let log_ratio = safe_energy_diff(h_start, h_end);
    let is_divergent = !(h_end - h_start <= divergence_threshold);
    let p_accept = acceptance_probability(log_ratio);
    let (chosen, accepted, energy) = if is_divergent {
        (state.clone(), false, h_start)
    } else {
        let out = binomial_accept(k_accept, log_ratio, (end, h_end), (start, h_start));
        (
            GradientState::from(out.chosen.0),
            out.accepted,
            out.chosen.1,
        )
    };
    let info = McmcInfo {
        p_accept,
        accepted,
        is_divergent,
        energy,
        num_integration_steps,
        tree_depth: 0,
    };
    (chosen, info)
}

#[derive(Debug, Clone)]
pub struct Hmc {
    pub step_size: f64,
    pub num_integration_steps: usize,
    pub metric: Metric,
    pub integrator: Integrator,
    pub divergence_threshold: f64,
}

impl Hmc {
    pub fn new(step_size: f64, num_integration_steps: usize, metric: Metric) -> Result<Self> {
        check_step_size(step_size)?;
        if num_integration_steps == 0 {
            return Err(Error::invalid(
                "num_integration_steps",
                "must be at least 1",
            ));
        }
        Ok(Hmc {
            step_size,
            num_integration_steps,
            metric,
            integrator: leapfrog,
            divergence_threshold: DEFAULT_DIVERGENCE_THRESHOLD,
        })
    }

    pub fn with_integrator(mut self, integrator: Integrator) -> Self {
        self.integrator = integrator;
        self
    }

    pub fn with_divergence_threshold(mut self, threshold: f64) -> Self {
        self.divergence_threshold = threshold;
        self
    }
}

impl Kernel for Hmc {
    type State = GradientState;

    fn init(&self, position: &[f64], target: &dyn LogDensity) -> Result<GradientState> {
        check_dim(target.dim(), self.metric.dim())?;
        GradientState::new(position, target)
    }

    fn step(
        &self,
        key: RngKey,
        state: &GradientState,
        target: &dyn LogDensity,
    ) -> (GradientState, McmcInfo) {
        hmc_step(
            key,
            state,
            target,
            self.step_size,
            self.num_integration_steps,
            &self.metric,
            self.integrator,
            self.divergence_threshold,
        )
    }
}

impl StepSizeKernel for Hmc {
    fn step_size(&self) -> f64 {
        self.step_size
    }

    fn with_step_size(&self, step_size: f64) -> Self {
        Hmc {
            step_size,
            ..self.clone()
        }
    }
}
