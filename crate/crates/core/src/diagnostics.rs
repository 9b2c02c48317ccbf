//! Split R-hat, autocorrelation-based effective sample size and run
//! summaries over a stack of chains.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::algorithm::AcceptanceInfo;
use crate::error::{Error, Result};

pub const MIN_DRAWS: usize = 4;

/// Draws indexed `[chain][draw][dim]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainStack {
    samples: Vec<Vec<Vec<f64>>>,
    dim: usize,
}

impl ChainStack {
    pub fn new(samples: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::invalid("samples", "need at least one chain"));
        }
        let draws = samples[0].len();
        if draws < MIN_DRAWS {
            return Err(Error::InsufficientSamples {
                required: MIN_DRAWS,
                actual: draws,
            });
        }
        let dim = samples[0][0].len();
        for chain in &samples {
            if chain.len() != draws {
                return Err(Error::invalid("samples", "chains must have equal length"));
            }
            if let Some(row) = chain.iter().find(|r| r.len() != dim) {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: row.len(),
                });
            }
        }
        Ok(ChainStack { samples, dim })
    }

    pub fn num_chains(&self) -> usize {
        self.samples.len()
    }

    pub fn num_draws(&self) -> usize {
        self.samples[0].len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn samples(&self) -> &[Vec<Vec<f64>>] {
        &self.samples
    }

    /// Coordinate `j` of every chain.
    fn coordinate(&self, j: usize) -> Vec<Vec<f64>> {
        self.samples
            .iter()
            .map(|c| c.iter().map(|r| r[j]).collect())
            .collect()
    }
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Unbiased sample variance.
fn variance(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (x.len() - 1) as f64
}

fn degenerate(j: usize) -> Error {
    Error::Degenerate(format!("zero within-chain variance in dimension {j}"))
}

fn rhat_1d(chains: &[Vec<f64>], j: usize) -> Result<f64> {
    let half = chains[0].len() / 2;
    let pieces: Vec<&[f64]> = chains
        .iter()
        .flat_map(|c| [&c[..half], &c[c.len() - half..]])
        .collect();
    let n = half as f64;
    let w = pieces.iter().map(|p| variance(p)).sum::<f64>() / pieces.len() as f64;
    if !(w > 0.0) {
        return Err(degenerate(j));
    }
    let means: Vec<f64> = pieces.iter().map(|p| mean(p)).collect();
    let b = n * variance(&means);
    Ok((((n - 1.0) / n * w + b / n) / w).sqrt())
}

/// Classic split R-hat per dimension over `2 * num_chains` half-chains (the
/// middle draw of an odd-length chain is dropped).
pub fn split_rhat(stack: &ChainStack) -> Result<Vec<f64>> {
    (0..stack.dim())
        .map(|j| rhat_1d(&stack.coordinate(j), j))
        .collect()
}

/// Biased autocovariance `sum_t (x_t - m)(x_{t+k} - m) / n` for every lag.
fn autocovariance(x: &[f64], planner: &mut FftPlanner<f64>) -> Vec<f64> {
    let n = x.len();
    let m = mean(x);
    let size = (2 * n).next_power_of_two();
    let mut buf: Vec<Complex<f64>> = x.iter().map(|v| Complex::new(v - m, 0.0)).collect();
    buf.resize(size, Complex::new(0.0, 0.0));
    planner.plan_fft_forward(size).process(&mut buf);
    buf.iter_mut()
        .for_each(|c| *c = Complex::new(c.norm_sqr(), 0.0));
    planner.plan_fft_inverse(size).process(&mut buf);
    buf[..n]
        .iter()
        .map(|c| c.re / (size as f64 * n as f64))
        .collect()
}

fn ess_1d(chains: &[Vec<f64>], j: usize, planner: &mut FftPlanner<f64>) -> Result<f64> {
    let m = chains.len();
    let n = chains[0].len();
    let cap = (m * n) as f64;
    let acov: Vec<Vec<f64>> = chains.iter().map(|c| autocovariance(c, planner)).collect();
    let chain_var: Vec<f64> = acov
        .iter()
        .map(|a| a[0] * n as f64 / (n - 1) as f64)
        .collect();
    let mean_var = mean(&chain_var);
    if !(mean_var > 0.0) {
        return Err(degenerate(j));
    }
    let mut var_plus = mean_var * (n - 1) as f64 / n as f64;
    if m > 1 {
        let means: Vec<f64> = chains.iter().map(|c| mean(c)).collect();
        var_plus += variance(&means);
    }
    let rho = |t: usize| {
        if t == 0 {
            return 1.0;
        }
        let avg = acov.iter().map(|a| a[t]).sum::<f64>() / m as f64;
        1.0 - (mean_var - avg) / var_plus
    };

    // Geyer's initial monotone positive sequence over lag pairs.
    let mut sum = 0.0;
    let mut previous = f64::INFINITY;
    let mut t = 0;
    while t + 1 < n {
        let pair = rho(t) + rho(t + 1);
        if !(pair > 0.0) {
            break;
        }
        let pair = pair.min(previous);
        sum += pair;
        previous = pair;
        t += 2;
    }
    let tau = -1.0 + 2.0 * sum;
    Ok(if tau > 0.0 { (cap / tau).min(cap) } else { cap }.max(1.0))
}

/// Multi-chain effective sample size per dimension, clipped to
/// `[1, num_chains * num_draws]`.
pub fn effective_sample_size(stack: &ChainStack) -> Result<Vec<f64>> {
    let mut planner = FftPlanner::new();
    (0..stack.dim())
        .map(|j| ess_1d(&stack.coordinate(j), j, &mut planner))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DimSummary {
    pub mean: f64,
    pub std: f64,
    /// `None` when the dimension has zero variance.
    pub ess: Option<f64>,
    pub rhat: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub per_dim: Vec<DimSummary>,
    /// `None` when there are no info records.
    pub acceptance_mean: Option<f64>,
    pub divergences: usize,
}

/// Pooled moments, diagnostics and acceptance statistics.
pub fn summarize<I: AcceptanceInfo>(stack: &ChainStack, infos: &[I]) -> Summary {
    let mut planner = FftPlanner::new();
    let per_dim = (0..stack.dim())
        .map(|j| {
            let chains = stack.coordinate(j);
            let pooled: Vec<f64> = chains.concat();
            DimSummary {
                mean: mean(&pooled),
                std: variance(&pooled).sqrt(),
                ess: ess_1d(&chains, j, &mut planner).ok(),
                rhat: rhat_1d(&chains, j).ok(),
            }
        })
        .collect();
    let acceptance_mean = (!infos.is_empty())
        .then(|| infos.iter().map(|i| i.acceptance_rate()).sum::<f64>() / infos.len() as f64);
    Summary {
        per_dim,
        acceptance_mean,
        divergences: infos.iter().filter(|i| i.is_divergent()).count(),
    }
}
