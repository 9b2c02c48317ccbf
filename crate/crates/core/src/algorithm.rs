//! The two algorithm contracts and the generic chain loop.
//!
//! A sampling algorithm turns an initial position into a state and advances
//! it with `step(key, state) -> (state, info)`. An approximate-inference
//! algorithm adds `sample(key, state, n)`. Everything needed for the next
//! iteration is carried in the state.

use crate::error::{Error, Result};
use crate::rng::RngKey;

pub trait HasPosition {
    fn position(&self) -> &[f64];
}

/// Diagnostics every MCMC-style info record exposes to adapters.
pub trait AcceptanceInfo {
    fn acceptance_rate(&self) -> f64;

    fn is_divergent(&self) -> bool {
        false
    }
}

pub trait SamplingAlgorithm {
    type State: Clone;
    type Info;

    fn init(&self, position: &[f64]) -> Result<Self::State>;

    fn step(&self, key: RngKey, state: &Self::State) -> Result<(Self::State, Self::Info)>;
}

pub trait ApproximateInference {
    type State: Clone;
    type Info;

    fn init(&self, position: &[f64]) -> Result<Self::State>;

    fn step(&self, key: RngKey, state: &Self::State) -> Result<(Self::State, Self::Info)>;

    fn sample(&self, key: RngKey, state: &Self::State, num_samples: usize) -> Vec<Vec<f64>>;
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainTrace<S, I> {
    pub final_state: S,
    pub infos: Vec<I>,
    pub positions: Vec<Vec<f64>>,
}

/// Applies `step` `num_steps` times; iteration `i` receives `key.child(i)`.
pub fn run_chain<S, I, F>(
    key: RngKey,
    mut step: F,
    initial_state: S,
    num_steps: usize,
) -> Result<ChainTrace<S, I>>
where
    S: HasPosition,
    F: FnMut(RngKey, &S) -> Result<(S, I)>,
{
    if num_steps == 0 {
        return Err(Error::invalid("num_steps", "must be at least 1"));
    }
    let mut state = initial_state;
    let mut infos = Vec::with_capacity(num_steps);
    let mut positions = Vec::with_capacity(num_steps);
    for i in 0..num_steps {
        let (next, info) = step(key.child(i as u64), &state).map_err(|e| Error::AtIteration {
            iteration: i,
            source: Box::new(e),
        })?;
        positions.push(next.position().to_vec());
        infos.push(info);
        state = next;
    }
    Ok(ChainTrace {
        final_state: state,
        infos,
        positions,
    })
}

/// [`run_chain`] over a packaged sampling algorithm.
pub fn sample_chain<A>(
    key: RngKey,
    algorithm: &A,
    initial_state: A::State,
    num_steps: usize,
) -> Result<ChainTrace<A::State, A::Info>>
where
    A: SamplingAlgorithm,
    A::State: HasPosition,
{
    run_chain(key, |k, s| algorithm.step(k, s), initial_state, num_steps)
}
