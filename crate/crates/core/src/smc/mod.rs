//! Tempered sequential Monte Carlo.
//!
//! Particles move from the prior (`lambda = 0`) to the posterior
//! (`lambda = 1`) along `log prior + lambda * log likelihood`. Each stage picks
//! the next inverse temperature so the reweighted ensemble keeps a target
//! effective sample size, resamples, then moves every particle with any
//! [`Kernel`] targeting the new tempered density.

mod resampling;

pub use resampling::{normalize, resample, ResampleMethod};

use rayon::prelude::*;

use crate::error::{check_dim, Error, Result};
use crate::mcmc::Kernel;
use crate::rng::RngKey;
use crate::target::LogDensity;
use resampling::log_sum_exp;

/// A posterior split into prior and likelihood terms.
pub trait TemperedTarget: Send + Sync {
    fn dim(&self) -> usize;
    fn log_prior(&self, position: &[f64]) -> f64;
    fn log_prior_gradient(&self, position: &[f64]) -> Vec<f64>;
    fn log_likelihood(&self, position: &[f64]) -> f64;
    fn log_likelihood_gradient(&self, position: &[f64]) -> Vec<f64>;
}

/// Prior and likelihood given as two log densities over the same space.
pub struct PriorLikelihood<P, L> {
    pub prior: P,
    pub likelihood: L,
}

impl<P: LogDensity, L: LogDensity> PriorLikelihood<P, L> {
    pub fn new(prior: P, likelihood: L) -> Result<Self> {
        check_dim(prior.dim(), likelihood.dim())?;
        Ok(PriorLikelihood { prior, likelihood })
    }
}

impl<P: LogDensity, L: LogDensity> TemperedTarget for PriorLikelihood<P, L> {
    fn dim(&self) -> usize {
        self.prior.dim()
    }
    fn log_prior(&self, x: &[f64]) -> f64 {
        self.prior.logdensity(x)
    }
    fn log_prior_gradient(&self, x: &[f64]) -> Vec<f64> {
        self.prior.gradient(x)
    }
    fn log_likelihood(&self, x: &[f64]) -> f64 {
        self.likelihood.logdensity(x)
    }
    fn log_likelihood_gradient(&self, x: &[f64]) -> Vec<f64> {
        self.likelihood.gradient(x)
    }
}

/// `log prior + lambda * log likelihood` as a plain log density.
pub struct Tempered<'a> {
    pub target: &'a dyn TemperedTarget,
    pub lambda: f64,
}

impl LogDensity for Tempered<'_> {
    fn dim(&self) -> usize {
        self.target.dim()
    }

    fn logdensity(&self, x: &[f64]) -> f64 {
        let prior = self.target.log_prior(x);
        if self.lambda == 0.0 {
            return prior;
        }
        prior + self.lambda * self.target.log_likelihood(x)
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = self.target.log_prior_gradient(x);
        if self.lambda != 0.0 {
            let l = self.target.log_likelihood_gradient(x);
            g.iter_mut()
                .zip(&l)
                .for_each(|(g, l)| *g += self.lambda * l);
        }
        g
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParticleEnsemble {
    pub particles: Vec<Vec<f64>>,
    /// Un-normalized.
    pub log_weights: Vec<f64>,
    pub lambda: f64,
    /// Running estimate of the log normalizing constant.
    pub log_z: f64,
}

impl ParticleEnsemble {
    /// Equally weighted particles at `lambda = 0`.
    pub fn new(particles: Vec<Vec<f64>>) -> Result<Self> {
        if particles.len() < 2 {
            return Err(Error::invalid("particles", "need at least two particles"));
        }
        let n = particles.len();
        Ok(ParticleEnsemble {
            particles,
            log_weights: vec![0.0; n],
            lambda: 0.0,
            log_z: 0.0,
        })
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    /// Weighted mean of each coordinate.
    pub fn mean(&self) -> Result<Vec<f64>> {
        let w = normalize(&self.log_weights)?;
        let dim = self.particles[0].len();
        Ok((0..dim)
            .map(|j| self.particles.iter().zip(&w).map(|(p, w)| p[j] * w).sum())
            .collect())
    }
}

/// `1 / sum(w_i^2)` for the normalized weights.
pub fn ess(log_weights: &[f64]) -> Result<f64> {
    let w = normalize(log_weights)?;
    Ok(1.0 / w.iter().map(|w| w * w).sum::<f64>())
}

fn incremented(log_weights: &[f64], log_likelihoods: &[f64], delta: f64) -> Vec<f64> {
    log_weights
        .iter()
        .zip(log_likelihoods)
        .map(|(w, l)| w + delta * l)
        .collect()
}

/// Moves the ensemble from its current `lambda` to `new_lambda`, updating the
/// weights and the log normalizing-constant estimate.
pub fn reweight(
    ensemble: &ParticleEnsemble,
    log_likelihoods: &[f64],
    new_lambda: f64,
) -> Result<ParticleEnsemble> {
    check_dim(ensemble.len(), log_likelihoods.len())?;
    if !(new_lambda >= ensemble.lambda && new_lambda <= 1.0) {
        return Err(Error::invalid(
            "new_lambda",
            format!("must lie in [{}, 1], got {new_lambda}", ensemble.lambda),
        ));
    }
    let delta = new_lambda - ensemble.lambda;
    if delta == 0.0 {
        return Ok(ensemble.clone());
    }
    let log_weights = incremented(&ensemble.log_weights, log_likelihoods, delta);
    // Increment = log of the weighted mean of exp(delta * loglik).
    let old_norm = log_sum_exp(&ensemble.log_weights);
    let normalized: Vec<f64> = log_weights.iter().map(|w| w - old_norm).collect();
    let increment = log_sum_exp(&normalized);
    if !increment.is_finite() {
        return Err(Error::Degenerate(
            "every particle has zero incremental weight".into(),
        ));
    }
    Ok(ParticleEnsemble {
        particles: ensemble.particles.clone(),
        log_weights,
        lambda: new_lambda,
        log_z: ensemble.log_z + increment,
    })
}

pub const LAMBDA_TOLERANCE: f64 = 1e-6;
pub const MAX_BISECTION_STEPS: usize = 100;

/// Next inverse temperature: 1 if reweighting all the way keeps
/// `ESS >= target_ess_ratio * N`, otherwise the bisection solution of
/// `ESS(lambda') = target_ess_ratio * N` on `(lambda, 1]`.
pub fn adaptive_next_lambda(
    ensemble: &ParticleEnsemble,
    log_likelihoods: &[f64],
    target_ess_ratio: f64,
) -> Result<f64> {
    check_dim(ensemble.len(), log_likelihoods.len())?;
    if !(target_ess_ratio > 0.0 && target_ess_ratio < 1.0) {
        return Err(Error::invalid(
            "target_ess_ratio",
            format!("must lie in (0, 1), got {target_ess_ratio}"),
        ));
    }
    let lambda = ensemble.lambda;
    if lambda >= 1.0 {
        return Err(Error::invalid(
            "lambda",
            "ensemble is already at lambda = 1",
        ));
    }
    let target = target_ess_ratio * ensemble.len() as f64;
    let enough = |next: f64| {
        ess(&incremented(
            &ensemble.log_weights,
            log_likelihoods,
            next - lambda,
        ))
        .map(|e| e >= target)
        .unwrap_or(false)
    };
    if enough(1.0) {
        return Ok(1.0);
    }
    let (mut low, mut high) = (lambda, 1.0);
    for _ in 0..MAX_BISECTION_STEPS {
        if high - low <= LAMBDA_TOLERANCE {
            break;
        }
        let mid = 0.5 * (low + high);
        if enough(mid) {
            low = mid;
        } else {
            high = mid;
        }
    }
    Ok(if low > lambda { low } else { high })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmcOptions {
    pub num_mutation_steps: usize,
    pub resample_method: ResampleMethod,
    pub target_ess_ratio: f64,
    pub max_stages: usize,
}

impl Default for SmcOptions {
    fn default() -> Self {
        SmcOptions {
            num_mutation_steps: 5,
            resample_method: ResampleMethod::Systematic,
            target_ess_ratio: 0.5,
            max_stages: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmcInfo {
    pub lambda: f64,
    /// ESS after reweighting, before resampling.
    pub ess: f64,
    pub log_z_increment: f64,
    pub ancestors: Vec<usize>,
    /// Mean kernel acceptance over particles and mutation steps; `None` when
    /// no mutation steps ran.
    pub acceptance_mean: Option<f64>,
}

fn mutate<K: Kernel>(
    key: RngKey,
    position: &[f64],
    kernel: &K,
    density: &dyn LogDensity,
    num_steps: usize,
) -> Result<(Vec<f64>, f64)> {
    use crate::algorithm::HasPosition;
    let mut state = kernel.init(position, density)?;
    let mut accept = 0.0;
    for s in 0..num_steps {
        let (next, info) = kernel.step(key.child(s as u64), &state, density);
        accept += info.p_accept;
        state = next;
    }
    Ok((state.position().to_vec(), accept))
}

/// One tempering stage: choose lambda', reweight, resample, mutate.
///
/// Mutations run in parallel with one child key per particle; the result is
/// identical to sequential evaluation.
pub fn smc_step<K: Kernel>(
    key: RngKey,
    ensemble: &ParticleEnsemble,
    target: &dyn TemperedTarget,
    kernel: &K,
    options: &SmcOptions,
) -> Result<(ParticleEnsemble, SmcInfo)> {
    let n = ensemble.len();
    let log_likelihoods: Vec<f64> = ensemble
        .particles
        .par_iter()
        .map(|p| target.log_likelihood(p))
        .collect();
    let lambda = adaptive_next_lambda(ensemble, &log_likelihoods, options.target_ess_ratio)?;
    let reweighted = reweight(ensemble, &log_likelihoods, lambda)?;
    let ess_before = ess(&reweighted.log_weights)?;

    let (k_resample, k_mutate) = key.split2();
    let ancestors = resample(
        k_resample,
        &reweighted.log_weights,
        n,
        options.resample_method,
    )?;
    let density = Tempered { target, lambda };
    let moved: Vec<(Vec<f64>, f64)> = ancestors
        .par_iter()
        .enumerate()
        .map(|(i, &a)| {
            mutate(
                k_mutate.child(i as u64),
                &reweighted.particles[a],
                kernel,
                &density,
                options.num_mutation_steps,
            )
        })
        .collect::<Result<_>>()?;

    let total_accept: f64 = moved.iter().map(|(_, a)| a).sum();
    let acceptance_mean = (options.num_mutation_steps > 0)
        .then(|| total_accept / (n * options.num_mutation_steps) as f64);
    let info = SmcInfo {
        lambda,
        ess: ess_before,
        log_z_increment: reweighted.log_z - ensemble.log_z,
        ancestors,
        acceptance_mean,
    };
    let next = ParticleEnsemble {
        particles: moved.into_iter().map(|(p, _)| p).collect(),
        log_weights: vec![0.0; n],
        lambda,
        log_z: reweighted.log_z,
    };
    Ok((next, info))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmcOutput {
    pub ensemble: ParticleEnsemble,
    /// Inverse temperatures visited, starting at 0 and ending at 1.
    pub ladder: Vec<f64>,
    pub log_z: f64,
    pub infos: Vec<SmcInfo>,
}

/// Runs tempering stages from prior draws until `lambda = 1`.
pub fn run_tempered_smc<F, K>(
    key: RngKey,
    target: &dyn TemperedTarget,
    prior_sampler: F,
    num_particles: usize,
    kernel: &K,
    options: &SmcOptions,
) -> Result<SmcOutput>
where
    F: Fn(RngKey) -> Vec<f64> + Sync,
    K: Kernel,
{
    let (k_init, k_stages) = key.split2();
    let particles: Vec<Vec<f64>> = (0..num_particles as u64)
        .into_par_iter()
        .map(|i| prior_sampler(k_init.child(i)))
        .collect();
    let mut ensemble = ParticleEnsemble::new(particles)?;
    let mut ladder = vec![0.0];
    let mut infos = Vec::new();
    let mut stage = 0u64;
    while ensemble.lambda < 1.0 {
        if infos.len() >= options.max_stages {
            return Err(Error::NoProgress(options.max_stages));
        }
        let (next, info) = smc_step(k_stages.child(stage), &ensemble, target, kernel, options)?;
        ladder.push(next.lambda);
        infos.push(info);
        ensemble = next;
        stage += 1;
    }
    let log_z = ensemble.log_z;
    Ok(SmcOutput {
        ensemble,
        ladder,
        log_z,
        infos,
    })
}
