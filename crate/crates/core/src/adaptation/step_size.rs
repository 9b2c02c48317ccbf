use crate::error::{Error, Result};
use crate::integrator::{leapfrog, sample_momentum, Metric};
use crate::mcmc::GradientState;
use crate::proposal::{acceptance_probability, safe_energy_diff};
use crate::rng::RngKey;
use crate::target::LogDensity;

pub const MAX_STEP_SIZE_ITERATIONS: usize = 64;

/// Metropolis acceptance probability of a single leapfrog step from
/// `(state, momentum)`.
pub fn one_step_acceptance(
    state: &GradientState,
    momentum: &[f64],
    step_size: f64,
    metric: &Metric,
    target: &dyn LogDensity,
) -> f64 {
    let start = state.with_momentum(momentum.to_vec());
    let end = leapfrog(&start, step_size, metric, target);
    acceptance_probability(safe_energy_diff(start.energy(metric), end.energy(metric)))
}

/// Doubles or halves `initial` until the one-step acceptance probability
/// crosses 0.5, using the single momentum `sample_momentum(key, metric)`.
///
/// The returned step is the first one past the crossing, so it and its
/// predecessor straddle 0.5.
pub fn find_reasonable_step_size(
    key: RngKey,
    target: &dyn LogDensity,
    state: &GradientState,
    metric: &Metric,
    initial: f64,
) -> Result<f64> {
    if !(initial.is_finite() && initial > 0.0) {
        return Err(Error::invalid(
            "initial",
            format!("must be positive, got {initial}"),
        ));
    }
    let momentum = sample_momentum(key, metric);
    let accept = |eps: f64| one_step_acceptance(state, &momentum, eps, metric, target);
    let grow = accept(initial) > 0.5;
    let mut eps = initial;
    for _ in 0..MAX_STEP_SIZE_ITERATIONS {
        eps = if grow { eps * 2.0 } else { eps * 0.5 };
        let a = accept(eps);
        if (grow && a < 0.5) || (!grow && a > 0.5) {
            return Ok(eps);
        }
    }
    Err(Error::StepSizeSearchExhausted(MAX_STEP_SIZE_ITERATIONS))
}
