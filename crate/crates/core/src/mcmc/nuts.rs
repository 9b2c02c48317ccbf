//! No-U-turn sampler: iterative trajectory doubling, progressive multinomial
//! selection, and a U-turn check at every sub-tree merge.

use super::{
    check_step_size, GradientState, Kernel, McmcInfo, StepSizeKernel, DEFAULT_DIVERGENCE_THRESHOLD,
};
use crate::error::{check_dim, Result};
use crate::integrator::{leapfrog, sample_momentum, IntegratorState, Metric};
use crate::rng::RngKey;
use crate::target::LogDensity;

pub const DEFAULT_MAX_DEPTH: usize = 10;

fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// A contiguous stretch of the trajectory, endpoints in time order.
struct Subtree {
    left: IntegratorState,
    right: IntegratorState,
    proposal: IntegratorState,
    log_weight: f64,
    sum_accept: f64,
    num_steps: usize,
    turning: bool,
    diverging: bool,
}

struct TreeContext<'a> {
    target: &'a dyn LogDensity,
    metric: &'a Metric,
    step_size: f64,
    initial_energy: f64,
    divergence_threshold: f64,
}

/// True when the endpoints have started moving towards each other.
fn is_turning(left: &IntegratorState, right: &IntegratorState, metric: &Metric) -> bool {
    let span: Vec<f64> = right
        .position
        .iter()
        .zip(&left.position)
        .map(|(r, l)| r - l)
        .collect();
    let dot = |p: &[f64]| {
        metric
            .velocity(p)
            .iter()
            .zip(&span)
            .map(|(v, d)| v * d)
            .sum::<f64>()
    };
    dot(&right.momentum) < 0.0 || dot(&left.momentum) < 0.0
}

fn build_subtree(
    key: RngKey,
    edge: &IntegratorState,
    forward: bool,
    depth: usize,
    ctx: &TreeContext,
) -> Subtree {
    if depth == 0 {
        let step = if forward {
            ctx.step_size
        } else {
            -ctx.step_size
        };
        let next = leapfrog(edge, step, ctx.metric, ctx.target);
        let delta = next.energy(ctx.metric) - ctx.initial_energy;
        let diverging = !(delta <= ctx.divergence_threshold);
        let log_weight = if delta.is_nan() {
            f64::NEG_INFINITY
        } else {
            -delta
        };
        let sum_accept = if delta.is_nan() {
            0.0
        } else {
            (-delta).exp().min(1.0)
        };
        return Subtree {
            left: next.clone(),
            right: next.clone(),
            proposal: next,
            log_weight,
            sum_accept,
            num_steps: 1,
            turning: false,
            diverging,
        };
    }

    let (k_inner, k_outer, k_select) = key.split3();
    let inner = build_subtree(k_inner, edge, forward, depth - 1, ctx);
    if inner.turning || inner.diverging {
        return inner;
    }
    let outer_edge = if forward { &inner.right } else { &inner.left };
    let outer = build_subtree(k_outer, outer_edge, forward, depth - 1, ctx);
    let num_steps = inner.num_steps + outer.num_steps;
    let sum_accept = inner.sum_accept + outer.sum_accept;
    if outer.turning || outer.diverging {
        return Subtree {
            num_steps,
            sum_accept,
            turning: outer.turning,
            diverging: outer.diverging,
            ..inner
        };
    }

    let log_weight = log_add_exp(inner.log_weight, outer.log_weight);
    // Uniform progressive sampling within a sub-tree.
    let take_outer = k_select.uniform().ln() < outer.log_weight - log_weight;
    let (left, right) = if forward {
        (inner.left, outer.right)
    } else {
        (outer.left, inner.right)
    };
    let turning = is_turning(&left, &right, ctx.metric);
    Subtree {
        left,
        right,
        proposal: if take_outer {
            outer.proposal
        } else {
            inner.proposal
        },
        log_weight,
        sum_accept,
        num_steps,
        turning,
        diverging: false,
    }
}

/// One NUTS transition.
///
/// `info.p_accept` is the mean of `min(1, exp(-dH))` over every trajectory
/// state visited, the statistic consumed by dual averaging. Divergent
/// trajectories are rejected outright.
pub fn nuts_step(
    key: RngKey,
    state: &GradientState,
    target: &dyn LogDensity,
    step_size: f64,
    metric: &Metric,
    max_depth: usize,
    divergence_threshold: f64,
) -> (GradientState, McmcInfo) {
    let (k_momentum, k_tree) = key.split2();
    let start = state.with_momentum(sample_momentum(k_momentum, metric));
    let initial_energy = start.energy(metric);
    let ctx = TreeContext {
        target,
        metric,
        step_size,
        initial_energy,
        divergence_threshold,
    };

    let mut left = start.clone();
    let mut right = start.clone();
    let mut proposal: Option<IntegratorState> = None;
    let mut log_weight = 0.0;
    let mut sum_accept = 0.0;
    let mut num_steps = 0;
    let mut depth = 0;
    let mut diverging = false;

    while depth < max_depth {
        let (k_dir, k_sub, k_select) = k_tree.child(depth as u64).split3();
        let forward = k_dir.uniform() < 0.5;
        let edge = if forward { &right } else { &left };
        let sub = build_subtree(k_sub, edge, forward, depth, &ctx);
        depth += 1;
        num_steps += sub.num_steps;
        sum_accept += sub.sum_accept;
        if sub.diverging {
            diverging = true;
            break;
        }
        if sub.turning {
            break;
        }
        // Biased progressive sampling favours the newer half.
        if k_select.uniform().ln() < sub.log_weight - log_weight {
            proposal = Some(sub.proposal);
        }
        log_weight = log_add_exp(log_weight, sub.log_weight);
        if forward {
            right = sub.right;
        } else {
            left = sub.left;
        }
        if is_turning(&left, &right, metric) {
            break;
        }
    }

    let p_accept = if num_steps == 0 {
        1.0
    } else {
        sum_accept / num_steps as f64
    };
    let (chosen, energy, accepted) = match proposal {
        Some(p) if !diverging => {
            let energy = p.energy(metric);
            (GradientState::from(p), energy, true)
        }
        _ => (state.clone(), initial_energy, false),
    };
    let info = McmcInfo {
        p_accept,
        accepted,
        is_divergent: diverging,
        energy,
        num_integration_steps: num_steps,
        tree_depth: depth,
    };
    (chosen, info)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Nuts {
    pub step_size: f64,
    pub metric: Metric,
    pub max_depth: usize,
    pub divergence_threshold: f64,
}

impl Nuts {
    pub fn new(step_size: f64, metric: Metric) -> Result<Self> {
        check_step_size(step_size)?;
        Ok(Nuts {
            step_size,
            metric,
            max_depth: DEFAULT_MAX_DEPTH,
            divergence_threshold: DEFAULT_DIVERGENCE_THRESHOLD,
        })
    }

    pub fn with_max_depth(mut self, max_depth: usize) -> Self {
        self.max_depth = max_depth;
        self
    }

    pub fn with_divergence_threshold(mut self, threshold: f64) -> Self {
        self.divergence_threshold = threshold;
        self
    }
}

impl Kernel for Nuts {
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
        nuts_step(
            key,
            state,
            target,
            self.step_size,
            &self.metric,
            self.max_depth,
            self.divergence_threshold,
        )
    }
}

impl StepSizeKernel for Nuts {
    fn step_size(&self) -> f64 {
        self.step_size
    }

    fn with_step_size(&self, step_size: f64) -> Self {
        Nuts {
            step_size,
            ..self.clone()
        }
    }
}
