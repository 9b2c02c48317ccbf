//! Stochastic-gradient Langevin and Hamiltonian dynamics.
//!
//! These samplers replace the exact gradient by a minibatch estimate and
//! never apply a Metropolis correction, so they are only asymptotically
//! exact as the step size shrinks.

use crate::algorithm::HasPosition;
use crate::error::{check_dim, Error, Result};
use crate::rng::RngKey;

/// Unbiased estimate of the log-posterior gradient from a subset of the data.
pub trait GradientEstimator: Send + Sync {
    fn dim(&self) -> usize;
    fn data_size(&self) -> usize;
    fn batch_size(&self) -> usize;
    fn estimate(&self, position: &[f64], batch: &[usize]) -> Vec<f64>;
}

/// `grad log p(theta) + (N / m) * sum over the batch of grad log p(x_i | theta)`.
pub struct MinibatchGradient<P, L> {
    dim: usize,
    data_size: usize,
    batch_size: usize,
    prior_gradient: P,
    datum_gradient: L,
}

impl<P, L> MinibatchGradient<P, L>
where
    P: Fn(&[f64]) -> Vec<f64> + Send + Sync,
    L: Fn(&[f64], usize) -> Vec<f64> + Send + Sync,
{
    /// `datum_gradient(theta, i)` is the gradient of the `i`-th log-likelihood term.
    pub fn new(
        dim: usize,
        data_size: usize,
        batch_size: usize,
        prior_gradient: P,
        datum_gradient: L,
    ) -> Result<Self> {
        if batch_size > data_size || (data_size > 0 && batch_size == 0) {
            return Err(Error::invalid(
                "batch_size",
                format!("must lie in [1, {data_size}], got {batch_size}"),
            ));
        }
        Ok(MinibatchGradient {
            dim,
            data_size,
            batch_size,
            prior_gradient,
            datum_gradient,
        })
    }
}

impl<P, L> GradientEstimator for MinibatchGradient<P, L>
where
    P: Fn(&[f64]) -> Vec<f64> + Send + Sync,
    L: Fn(&[f64], usize) -> Vec<f64> + Send + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }
    fn data_size(&self) -> usize {
        self.data_size
    }
    fn batch_size(&self) -> usize {
        self.batch_size
    }

    fn estimate(&self, position: &[f64], batch: &[usize]) -> Vec<f64> {
        let mut g = (self.prior_gradient)(position);
        if batch.is_empty() {
            return g;
        }
        let scale = self.data_size as f64 / batch.len() as f64;
        for &i in batch {
            let d = (self.datum_gradient)(position, i);
            g.iter_mut().zip(&d).for_each(|(g, d)| *g += scale * d);
        }
        g
    }
}

/// `batch_size` distinct indices from `0..data_size` (partial Fisher-Yates),
/// returned sorted.
pub fn sample_batch(key: RngKey, data_size: usize, batch_size: usize) -> Vec<usize> {
    let batch_size = batch_size.min(data_size);
    if batch_size == data_size {
        return (0..data_size).collect();
    }
    let mut pool: Vec<usize> = (0..data_size).collect();
    for i in 0..batch_size {
        let remaining = data_size - i;
        let j =
            i + ((key.child(i as u64).uniform() * remaining as f64) as usize).min(remaining - 1);
        pool.swap(i, j);
    }
    pool.truncate(batch_size);
    pool.sort_unstable();
    pool
}

#[derive(Debug, Clone, PartialEq)]
pub struct SgState {
    pub position: Vec<f64>,
    /// Used by SGHMC only; SGLD carries it through unchanged.
    pub momentum: Vec<f64>,
}

impl SgState {
    /// Zero momentum.
    pub fn new(position: &[f64]) -> Self {
        SgState {
            position: position.to_vec(),
            momentum: vec![0.0; position.len()],
        }
    }
}

impl HasPosition for SgState {
    fn position(&self) -> &[f64] {
        &self.position
    }
}

fn check_step(step_size: f64) -> Result<()> {
    if step_size > 0.0 && step_size.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(
            "step_size",
            format!("must be positive and finite, got {step_size}"),
        ))
    }
}

fn minibatch_gradient(
    key: RngKey,
    estimator: &dyn GradientEstimator,
    position: &[f64],
) -> Vec<f64> {
    let batch = sample_batch(key, estimator.data_size(), estimator.batch_size());
    estimator.estimate(position, &batch)
}

/// `q' = q + (eps / 2) * g + sqrt(eps) * z`.
pub fn sgld_step(
    key: RngKey,
    state: &SgState,
    estimator: &dyn GradientEstimator,
    step_size: f64,
) -> Result<SgState> {
    check_step(step_size)?;
    check_dim(estimator.dim(), state.position.len())?;
    let (k_batch, k_noise) = key.split2();
    let g = minibatch_gradient(k_batch, estimator, &state.position);
    let z = k_noise.normal_vector(state.position.len());
    let root = step_size.sqrt();
    let position = state
        .position
        .iter()
        .zip(g.iter().zip(&z))
        .map(|(q, (g, z))| q + 0.5 * step_size * g + root * z)
        .collect();
    Ok(SgState {
        position,
        momentum: state.momentum.clone(),
    })
}

/// `q' = q + v`, `v' = (1 - friction) v + eps * g(q') + sqrt(2 friction eps) z`.
pub fn sghmc_step(
    key: RngKey,
    state: &SgState,
    estimator: &dyn GradientEstimator,
    step_size: f64,
    friction: f64,
) -> Result<SgState> {
    check_step(step_size)?;
    if !(friction > 0.0 && friction <= 1.0) {
        return Err(Error::invalid(
            "friction",
            format!("must lie in (0, 1], got {friction}"),
        ));
    }
    check_dim(estimator.dim(), state.position.len())?;
    check_dim(state.position.len(), state.momentum.len())?;
    let (k_batch, k_noise) = key.split2();
    let position: Vec<f64> = state
        .position
        .iter()
        .zip(&state.momentum)
        .map(|(q, v)| q + v)
        .collect();
    let g = minibatch_gradient(k_batch, estimator, &position);
    let z = k_noise.normal_vector(position.len());
    let noise = (2.0 * friction * step_size).sqrt();
    let momentum = state
        .momentum
        .iter()
        .zip(g.iter().zip(&z))
        .map(|(v, (g, z))| (1.0 - friction) * v + step_size * g + noise * z)
        .collect();
    Ok(SgState { position, momentum })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SgAlgorithm {
    Sgld,
    Sghmc { friction: f64 },
}

/// Runs one chain with a caller-provided step-size sequence; step `i` uses
/// `key.child(i)`. Returns the position after every step.
pub fn sample_sg<I>(
    key: RngKey,
    algorithm: SgAlgorithm,
    estimator: &dyn GradientEstimator,
    initial: SgState,
    step_sizes: I,
) -> Result<(SgState, Vec<Vec<f64>>)>
where
    I: IntoIterator<Item = f64>,
{
    let mut state = initial;
    let mut positions = Vec::new();
    for (i, eps) in step_sizes.into_iter().enumerate() {
        let k = key.child(i as u64);
        state = match algorithm {
            SgAlgorithm::Sgld => sgld_step(k, &state, estimator, eps),
            SgAlgorithm::Sghmc { friction } => sghmc_step(k, &state, estimator, eps, friction),
        }
        .map_err(|e| Error::AtIteration {
            iteration: i,
            source: Box::new(e),
        })?;
        positions.push(state.position.clone());
    }
    Ok((state, positions))
}

/// The default schedule: `step_size` repeated `num_steps` times.
pub fn constant_schedule(step_size: f64, num_steps: usize) -> impl Iterator<Item = f64> {
    std::iter::repeat_n(step_size, num_steps)
}
