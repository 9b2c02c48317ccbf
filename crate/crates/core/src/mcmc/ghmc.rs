use super::{check_step_size, Kernel, McmcInfo, StepSizeKernel, DEFAULT_DIVERGENCE_THRESHOLD};
use crate::algorithm::HasPosition;
use crate::error::{check_dim, Error, Result};
use crate::integrator::{leapfrog, sample_momentum, IntegratorState, Metric};
use crate::proposal::{
    acceptance_probability, nonreversible_slice_accept, perturb_slice, safe_energy_diff,
    SliceVariable,
};
use crate::rng::RngKey;
use crate::target::LogDensity;

/// Generalized HMC carries its momentum and slice variable between steps.
#[derive(Debug, Clone, PartialEq)]
pub struct GhmcState {
    pub position: Vec<f64>,
    pub logdensity: f64,
    pub gradient: Vec<f64>,
    pub momentum: Vec<f64>,
    pub slice: SliceVariable,
}

impl HasPosition for GhmcState {
    fn position(&self) -> &[f64] {
        &self.position
    }
}

impl GhmcState {
    fn phase_point(&self) -> IntegratorState {
        IntegratorState {
            position: self.position.clone(),
            momentum: self.momentum.clone(),
            logdensity: self.logdensity,
            gradient: self.gradient.clone(),
        }
    }

    fn from_phase_point(s: IntegratorState, slice: SliceVariable) -> Self {
        GhmcState {
            position: s.position,
            logdensity: s.logdensity,
            gradient: s.gradient,
            momentum: s.momentum,
            slice,
        }
    }
}

/// One generalized-HMC transition: partial momentum refresh
/// `p <- a p + sqrt(1 - a^2) z`, a single leapfrog step, nonreversible slice
/// acceptance with momentum flip on rejection, then a slice translation of
/// `2 * slice_jitter * uniform`.
#[allow(clippy::too_many_arguments)]
pub fn ghmc_step(
    key: RngKey,
    state: &GhmcState,
    target: &dyn LogDensity,
    step_size: f64,
    persistence: f64,
    metric: &Metric,
    slice_jitter: f64,
    divergence_threshold: f64,
) -> (GhmcState, McmcInfo) {
    let (k_momentum, k_slice) = key.split2();
    let z = sample_momentum(k_momentum, metric);
    let fresh = (1.0 - persistence * persistence).sqrt();
    let mut start = state.phase_point();
    start
        .momentum
        .iter_mut()
        .zip(&z)
        .for_each(|(p, z)| *p = persistence * *p + fresh * z);

    let h_start = start.energy(metric);
    let end = leapfrog(&start, step_size, metric, target);
    let h_end = end.energy(metric);
    let is_divergent = !(h_end - h_start <= divergence_threshold);
    let log_ratio = if is_divergent {
        f64::NEG_INFINITY
    } else {
        safe_energy_diff(h_start, h_end)
    };

    let out = nonreversible_slice_accept(state.slice, log_ratio, end, start);
    let (chosen, energy) = if out.accepted {
        (out.chosen, h_end)
    } else {
        (out.chosen.flip_momentum(), h_start)
    };
    let slice = perturb_slice(k_slice, out.slice, slice_jitter);
    let info = McmcInfo {
        p_accept: acceptance_probability(safe_energy_diff(h_start, h_end)),
        accepted: out.accepted,
        is_divergent,
        energy,
        num_integration_steps: 1,
        tree_depth: 0,
    };
    (GhmcState::from_phase_point(chosen, slice), info)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ghmc {
    pub step_size: f64,
    pub persistence: f64,
    pub metric: Metric,
    pub slice_jitter: f64,
    pub divergence_threshold: f64,
}

/// Without a random translation the persistent slice variable drifts toward
/// zero and the chain stops rejecting, so the default is positive.
pub const DEFAULT_SLICE_JITTER: f64 = 0.05;

impl Ghmc {
    /// `persistence` must lie in `[0, 1]`; `1` keeps momentum fully (useful
    /// only for checking the reversal property).
    pub fn new(step_size: f64, persistence: f64, metric: Metric) -> Result<Self> {
        check_step_size(step_size)?;
        if !(0.0..=1.0).contains(&persistence) {
            return Err(Error::invalid(
                "persistence",
                format!("must be in [0, 1], got {persistence}"),
            ));
        }
        Ok(Ghmc {
            step_size,
            persistence,
            metric,
            slice_jitter: DEFAULT_SLICE_JITTER,
            divergence_threshold: DEFAULT_DIVERGENCE_THRESHOLD,
        })
    }

    pub fn with_slice_jitter(mut self, jitter: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&jitter) {
            return Err(Error::invalid(
                "slice_jitter",
                format!("must be in [0, 1], got {jitter}"),
            ));
        }
        self.slice_jitter = jitter;
        Ok(self)
    }

    /// Initial state with zero momentum and slice variable `u = 0`.
    pub fn init_with(
        &self,
        position: &[f64],
        momentum: Vec<f64>,
        slice: SliceVariable,
        target: &dyn LogDensity,
    ) -> Result<GhmcState> {
        check_dim(target.dim(), self.metric.dim())?;
        let base = super::GradientState::new(position, target)?;
        check_dim(target.dim(), momentum.len())?;
        Ok(GhmcState {
            position: base.position,
            logdensity: base.logdensity,
            gradient: base.gradient,
            momentum,
            slice,
        })
    }
}

impl Kernel for Ghmc {
    type State = GhmcState;

    fn init(&self, position: &[f64], target: &dyn LogDensity) -> Result<GhmcState> {
        let zero = SliceVariable::new(0.0)?;
        self.init_with(position, vec![0.0; position.len()], zero, target)
    }

    fn step(
        &self,
        key: RngKey,
        state: &GhmcState,
        target: &dyn LogDensity,
    ) -> (GhmcState, McmcInfo) {
        ghmc_step(
            key,
            state,
            target,
            self.step_size,
            self.persistence,
            &self.metric,
            self.slice_jitter,
            self.divergence_threshold,
        )
    }
}

impl StepSizeKernel for Ghmc {
    fn step_size(&self) -> f64 {
        self.step_size
    }

    fn with_step_size(&self, step_size: f64) -> Self {
        Ghmc {
            step_size,
            ..self.clone()
        }
    }
}
