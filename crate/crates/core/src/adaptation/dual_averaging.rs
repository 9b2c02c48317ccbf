/// Nesterov dual-averaging constants; the defaults are the standard NUTS values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualAveragingParams {
    pub t0: f64,
    pub gamma: f64,
    pub kappa: f64,
    pub target_accept: f64,
}

impl Default for DualAveragingParams {
    fn default() -> Self {
        DualAveragingParams {
            t0: 10.0,
            gamma: 0.05,
            kappa: 0.75,
            target_accept: 0.8,
        }
    }
}

impl DualAveragingParams {
    pub fn with_target(target_accept: f64) -> Self {
        DualAveragingParams {
            target_accept,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualAveragingState {
    pub log_step: f64,
    pub log_step_avg: f64,
    pub h_bar: f64,
    pub t: u64,
    /// Shrinkage anchor, `log(10 * initial_step)`.
    pub mu: f64,
}

impl DualAveragingState {
    pub fn step_size(&self) -> f64 {
        self.log_step.exp()
    }

    pub fn averaged_step_size(&self) -> f64 {
        self.log_step_avg.exp()
    }

    /// Moves the current step and the shrinkage anchor to `step` while
    /// keeping the accumulated error and the running average.
    pub fn recentered(&self, step: f64) -> Self {
        assert!(step > 0.0, "step size must be positive");
        DualAveragingState {
            log_step: step.ln(),
            mu: (10.0 * step).ln(),
            ..*self
        }
    }
}

pub fn da_init(initial_step: f64) -> DualAveragingState {
    assert!(initial_step > 0.0, "initial step size must be positive");
    DualAveragingState {
        log_step: initial_step.ln(),
        log_step_avg: 0.0,
        h_bar: 0.0,
        t: 1,
        mu: (10.0 * initial_step).ln(),
    }
}

pub fn da_update(
    state: &DualAveragingState,
    p_accept: f64,
    params: &DualAveragingParams,
) -> DualAveragingState {
    let t = state.t as f64;
    let w = 1.0 / (t + params.t0);
    let h_bar = (1.0 - w) * state.h_bar + w * (params.target_accept - p_accept);
    let log_step = state.mu - t.sqrt() / params.gamma * h_bar;
    let eta = t.powf(-params.kappa);
    let log_step_avg = eta * log_step + (1.0 - eta) * state.log_step_avg;
    DualAveragingState {
        log_step,
        log_step_avg,
        h_bar,
        t: state.t + 1,
        mu: state.mu,
    }
}
