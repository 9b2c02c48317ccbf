//! Mean-field Gaussian variational inference.
//!
//! The approximation is `q(z) = N(mu, diag(sigma^2))` with `sigma =
//! exp(log_sigma)`. ELBO gradients use the reparameterization `z = mu +
//! sigma * xi`, with the Gaussian entropy in closed form.

mod optimizer;

pub use optimizer::{Adam, AdamState, Optimizer, Sgd};

use crate::algorithm::ApproximateInference;
use crate::error::{check_dim, Error, Result};
use crate::rng::RngKey;
use crate::target::LogDensity;

#[derive(Debug, Clone, PartialEq)]
pub struct MeanFieldState<S> {
    pub mu: Vec<f64>,
    pub log_sigma: Vec<f64>,
    pub opt_state: S,
}

impl<S> MeanFieldState<S> {
    pub fn sigma(&self) -> Vec<f64> {
        self.log_sigma.iter().map(|s| s.exp()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ViInfo {
    /// ELBO at the parameters before the update, from the same draws used
    /// for the gradient.
    pub elbo: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ElboEstimate {
    pub value: f64,
    pub grad_mu: Vec<f64>,
    pub grad_log_sigma: Vec<f64>,
}

fn check_samples(num_samples: usize) -> Result<()> {
    if num_samples == 0 {
        return Err(Error::invalid("num_samples", "must be at least 1"));
    }
    Ok(())
}

fn entropy(log_sigma: &[f64]) -> f64 {
    let d = log_sigma.len() as f64;
    log_sigma.iter().sum::<f64>()
        + 0.5 * d * (2.0 * std::f64::consts::PI * std::f64::consts::E).ln()
}

/// Draw `j` uses noise `key.child(j)`, so the same key gives common random
/// numbers across parameter values.
pub fn elbo_and_gradient(
    key: RngKey,
    mu: &[f64],
    log_sigma: &[f64],
    target: &dyn LogDensity,
    num_samples: usize,
) -> Result<ElboEstimate> {
    check_samples(num_samples)?;
    check_dim(target.dim(), mu.len())?;
    check_dim(mu.len(), log_sigma.len())?;
    let d = mu.len();
    let sigma: Vec<f64> = log_sigma.iter().map(|s| s.exp()).collect();
    let mut value = 0.0;
    let mut grad_mu = vec![0.0; d];
    let mut grad_log_sigma = vec![0.0; d];
    for j in 0..num_samples {
        let xi = key.child(j as u64).normal_vector(d);
        let z: Vec<f64> = (0..d).map(|i| mu[i] + sigma[i] * xi[i]).collect();
        let (lp, g) = target.logdensity_and_gradient(&z);
        value += lp;
        for i in 0..d {
            grad_mu[i] += g[i];
            grad_log_sigma[i] += g[i] * xi[i] * sigma[i];
        }
    }
    let n = num_samples as f64;
    grad_mu.iter_mut().for_each(|g| *g /= n);
    grad_log_sigma.iter_mut().for_each(|g| *g = *g / n + 1.0);
    Ok(ElboEstimate {
        value: value / n + entropy(log_sigma),
        grad_mu,
        grad_log_sigma,
    })
}

/// Monte Carlo ELBO: mean log density at `num_samples` draws plus the
/// entropy of `q`.
pub fn elbo_estimate<S>(
    key: RngKey,
    state: &MeanFieldState<S>,
    target: &dyn LogDensity,
    num_samples: usize,
) -> Result<f64> {
    check_samples(num_samples)?;
    check_dim(target.dim(), state.mu.len())?;
    let d = state.mu.len();
    let sigma = state.sigma();
    let total: f64 = (0..num_samples)
        .map(|j| {
            let xi = key.child(j as u64).normal_vector(d);
            let z: Vec<f64> = (0..d).map(|i| state.mu[i] + sigma[i] * xi[i]).collect();
            target.logdensity(&z)
        })
        .sum();
    Ok(total / num_samples as f64 + entropy(&state.log_sigma))
}

pub fn vi_init<O: Optimizer>(position: &[f64], optimizer: &O) -> MeanFieldState<O::State> {
    let log_sigma = vec![0.0; position.len()];
    let params: Vec<f64> = position.iter().chain(&log_sigma).copied().collect();
    MeanFieldState {
        mu: position.to_vec(),
        log_sigma,
        opt_state: optimizer.init(&params),
    }
}

/// One optimizer update that increases the ELBO. Optimizers minimize, so
/// they receive the negated ELBO gradient.
pub fn vi_step<O: Optimizer>(
    key: RngKey,
    state: &MeanFieldState<O::State>,
    target: &dyn LogDensity,
    optimizer: &O,
    num_samples: usize,
) -> Result<(MeanFieldState<O::State>, ViInfo)> {
    let est = elbo_and_gradient(key, &state.mu, &state.log_sigma, target, num_samples)?;
    if !est.value.is_finite()
        || est
            .grad_mu
            .iter()
            .chain(&est.grad_log_sigma)
            .any(|g| !g.is_finite())
    {
        return Err(Error::Degenerate(format!(
            "non-finite ELBO estimate {}",
            est.value
        )));
    }
    let d = state.mu.len();
    let params: Vec<f64> = state.mu.iter().chain(&state.log_sigma).copied().collect();
    let loss_grad: Vec<f64> = est
        .grad_mu
        .iter()
        .chain(&est.grad_log_sigma)
        .map(|g| -g)
        .collect();
    let (params, opt_state) = optimizer.update(&loss_grad, &state.opt_state, &params);
    Ok((
        MeanFieldState {
            mu: params[..d].to_vec(),
            log_sigma: params[d..].to_vec(),
            opt_state,
        },
        ViInfo { elbo: est.value },
    ))
}

/// Rows `mu + sigma * xi`.
pub fn vi_sample<S>(key: RngKey, state: &MeanFieldState<S>, num_samples: usize) -> Vec<Vec<f64>> {
    let sigma = state.sigma();
    (0..num_samples)
        .map(|j| {
            let xi = key.child(j as u64).normal_vector(state.mu.len());
            state
                .mu
                .iter()
                .zip(&sigma)
                .zip(&xi)
                .map(|((m, s), x)| m + s * x)
                .collect()
        })
        .collect()
}

/// Packaged mean-field VI.
pub struct MeanFieldVi<'a, O> {
    pub target: &'a dyn LogDensity,
    pub optimizer: O,
    pub num_samples: usize,
}

impl<'a, O: Optimizer> MeanFieldVi<'a, O> {
    pub fn new(target: &'a dyn LogDensity, optimizer: O, num_samples: usize) -> Result<Self> {
        check_samples(num_samples)?;
        Ok(MeanFieldVi {
            target,
            optimizer,
            num_samples,
        })
    }

    /// Runs `num_steps` updates from `position`; step `i` uses `key.child(i)`.
    pub fn fit(
        &self,
        key: RngKey,
        position: &[f64],
        num_steps: usize,
    ) -> Result<(MeanFieldState<O::State>, Vec<f64>)> {
        let mut state = ApproximateInference::init(self, position)?;
        let mut elbos = Vec::with_capacity(num_steps);
        for i in 0..num_steps {
            let (next, info) =
                self.step(key.child(i as u64), &state)
                    .map_err(|e| Error::AtIteration {
                        iteration: i,
                        source: Box::new(e),
                    })?;
            elbos.push(info.elbo);
            state = next;
        }
        Ok((state, elbos))
    }
}

impl<O: Optimizer> ApproximateInference for MeanFieldVi<'_, O> {
    type State = MeanFieldState<O::State>;
    type Info = ViInfo;

    fn init(&self, position: &[f64]) -> Result<Self::State> {
        check_dim(self.target.dim(), position.len())?;
        Ok(vi_init(position, &self.optimizer))
    }

    fn step(&self, key: RngKey, state: &Self::State) -> Result<(Self::State, ViInfo)> {
        vi_step(key, state, self.target, &self.optimizer, self.num_samples)
    }

    fn sample(&self, key: RngKey, state: &Self::State, num_samples: usize) -> Vec<Vec<f64>> {
        vi_sample(key, state, num_samples)
    }
}
