//! Hyperparameter calibration: dual-averaging step size, streaming
//! (co)variance estimates for the mass matrix, and the staged warmup that
//! combines them.

mod dual_averaging;
mod schedule;
mod step_size;
mod welford;
mod window;

pub use dual_averaging::{da_init, da_update, DualAveragingParams, DualAveragingState};
pub use schedule::{build_schedule, StageKind, WindowSchedule};
pub use step_size::{find_reasonable_step_size, one_step_acceptance, MAX_STEP_SIZE_ITERATIONS};
pub use welford::{welford_finalize, welford_update, MassMatrixKind, WelfordState};
pub use window::{
    dual_averaging_warmup, window_adaptation, KernelFamily, WindowAdaptation, WindowOptions,
};
