//! First-order optimizers. `update` takes a descent step on the gradient of
//! a loss.

use crate::error::{Error, Result};

pub trait Optimizer: Send + Sync {
    type State: Clone + std::fmt::Debug + PartialEq + Send + Sync;

    fn init(&self, params: &[f64]) -> Self::State;

    fn update(
        &self,
        gradient: &[f64],
        state: &Self::State,
        params: &[f64],
    ) -> (Vec<f64>, Self::State);
}

fn check_rate(learning_rate: f64) -> Result<()> {
    if learning_rate > 0.0 && learning_rate.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(
            "learning_rate",
            format!("must be positive and finite, got {learning_rate}"),
        ))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sgd {
    pub learning_rate: f64,
}

impl Sgd {
    pub fn new(learning_rate: f64) -> Result<Self> {
        check_rate(learning_rate)?;
        Ok(Sgd { learning_rate })
    }
}

impl Optimizer for Sgd {
    type State = ();

    fn init(&self, _: &[f64]) {}

    fn update(&self, gradient: &[f64], _: &(), params: &[f64]) -> (Vec<f64>, ()) {
        let next = params
            .iter()
            .zip(gradient)
            .map(|(p, g)| p - self.learning_rate * g)
            .collect();
        (next, ())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Adam {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
}

impl Adam {
    /// Standard moments `beta1 = 0.9`, `beta2 = 0.999`, `epsilon = 1e-8`.
    pub fn new(learning_rate: f64) -> Result<Self> {
        check_rate(learning_rate)?;
        Ok(Adam {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        })
    }
}

impl Optimizer for Adam {
    type State = AdamState;

    fn init(&self, params: &[f64]) -> AdamState {
        AdamState {
            m: vec![0.0; params.len()],
            v: vec![0.0; params.len()],
            t: 0,
        }
    }

    fn update(&self, gradient: &[f64], state: &AdamState, params: &[f64]) -> (Vec<f64>, AdamState) {
        let t = state.t + 1;
        let c1 = 1.0 - self.beta1.powi(t as i32);
        let c2 = 1.0 - self.beta2.powi(t as i32);
        let mut m = state.m.clone();
        let mut v = state.v.clone();
        let mut next = params.to_vec();
        for i in 0..params.len() {
            m[i] = self.beta1 * m[i] + (1.0 - self.beta1) * gradient[i];
            v[i] = self.beta2 * v[i] + (1.0 - self.beta2) * gradient[i] * gradient[i];
            next[i] -= self.learning_rate * (m[i] / c1) / ((v[i] / c2).sqrt() + self.epsilon);
        }
        (next, AdamState { m, v, t })
    }
}
