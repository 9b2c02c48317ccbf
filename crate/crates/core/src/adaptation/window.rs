use super::dual_averaging::{da_init, da_update, DualAveragingParams};
use super::schedule::{build_schedule, StageKind};
use super::step_size::find_reasonable_step_size;
use super::welford::{welford_finalize, welford_update, MassMatrixKind, WelfordState};
use crate::error::Result;
use crate::integrator::Metric;
use crate::mcmc::{GradientState, Hmc, Kernel, McmcInfo, Nuts, StepSizeKernel};
use crate::rng::RngKey;
use crate::target::LogDensity;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelFamily {
    Hmc { num_integration_steps: usize },
    Nuts { max_depth: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowOptions {
    pub dual_averaging: DualAveragingParams,
    pub mass_matrix: MassMatrixKind,
    /// Seed for the first step-size search.
    pub initial_step_size: f64,
}

impl Default for WindowOptions {
    fn default() -> Self {
        WindowOptions {
            dual_averaging: DualAveragingParams::default(),
            mass_matrix: MassMatrixKind::Diagonal,
            initial_step_size: 1.0,
        }
    }
}

impl WindowOptions {
    pub fn with_target_accept(mut self, target_accept: f64) -> Self {
        self.dual_averaging.target_accept = target_accept;
        self
    }
}

#[derive(Debug, Clone)]
pub struct WindowAdaptation {
    pub step_size: f64,
    pub metric: Metric,
    pub state: GradientState,
    pub infos: Vec<McmcInfo>,
}

fn step_family(
    family: KernelFamily,
    key: RngKey,
    state: &GradientState,
    target: &dyn LogDensity,
    step_size: f64,
    metric: &Metric,
) -> Result<(GradientState, McmcInfo)> {
    Ok(match family {
        KernelFamily::Hmc {
            num_integration_steps,
        } => Hmc::new(step_size, num_integration_steps, metric.clone())?.step(key, state, target),
        KernelFamily::Nuts { max_depth } => Nuts::new(step_size, metric.clone())?
            .with_max_depth(max_depth)
            .step(key, state, target),
    })
}

/// Staged warmup of step size and mass matrix.
///
/// Dual averaging runs through every stage. Slow windows additionally feed
/// positions to a Welford accumulator; when a slow window closes the metric
/// is rebuilt from it, the accumulator resets, and the step size is searched
/// afresh from the current position. Dual averaging is re-centred on that
/// step but keeps its running average, which is what gets returned.
pub fn window_adaptation(
    key: RngKey,
    target: &dyn LogDensity,
    initial_position: &[f64],
    num_warmup: usize,
    family: KernelFamily,
    options: &WindowOptions,
) -> Result<WindowAdaptation> {
    let schedule = build_schedule(num_warmup)?;
    let (k_search, k_chain, k_reinit) = key.split3();
    let dim = target.dim();

    let mut metric = Metric::identity(dim);
    let mut state = GradientState::new(initial_position, target)?;
    let eps =
        find_reasonable_step_size(k_search, target, &state, &metric, options.initial_step_size)?;
    let mut da = da_init(eps);
    let mut welford = WelfordState::new(dim, options.mass_matrix);
    let mut infos = Vec::with_capacity(num_warmup);
    let mut windows_closed = 0u64;

    for (i, (kind, closes_window)) in schedule.iterations().enumerate() {
        let (next, info) = step_family(
            family,
            k_chain.child(i as u64),
            &state,
            target,
            da.step_size(),
            &metric,
        )?;
        state = next;
        da = da_update(&da, info.p_accept, &options.dual_averaging);
        infos.push(info);

        if kind == StageKind::Slow {
            welford = welford_update(&welford, &state.position)?;
            if closes_window {
                metric = welford_finalize(&welford, true)?;
                welford = welford.reset();
                let eps = find_reasonable_step_size(
                    k_reinit.child(windows_closed),
                    target,
                    &state,
                    &metric,
                    da.step_size(),
                )?;
                da = da.recentered(eps);
                windows_closed += 1;
            }
        }
    }

    Ok(WindowAdaptation {
        step_size: da.averaged_step_size(),
        metric,
        state,
        infos,
    })
}

/// Step-size-only warmup for any kernel exposing a step size; returns the
/// kernel with the averaged step size and the last state.
pub fn dual_averaging_warmup<K: StepSizeKernel>(
    key: RngKey,
    kernel: &K,
    target: &dyn LogDensity,
    state: K::State,
    num_steps: usize,
    params: &DualAveragingParams,
) -> (K, K::State, Vec<McmcInfo>) {
    let mut da = da_init(kernel.step_size());
    let mut state = state;
    let mut infos = Vec::with_capacity(num_steps);
    for i in 0..num_steps {
        let current = kernel.with_step_size(da.step_size());
        let (next, info) = current.step(key.child(i as u64), &state, target);
        da = da_update(&da, info.p_accept, params);
        state = next;
        infos.push(info);
    }
    let step = if num_steps == 0 {
        kernel.step_size()
    } else {
        da.averaged_step_size()
    };
    (kernel.with_step_size(step), state, infos)
}
