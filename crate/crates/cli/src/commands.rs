//! The `run`, `run-smc` and `run-vi` pipelines and their file outputs.
//!
//! Keys: the run seed's child 1 generates synthetic data, child 0 drives
//! the algorithm. Chains use `child(chain)` of the algorithm key, so results
//! do not depend on how many threads run them.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use bayeskit::adaptation::{
    dual_averaging_warmup, find_reasonable_step_size, window_adaptation, DualAveragingParams,
    KernelFamily, MassMatrixKind, WindowOptions,
};
use bayeskit::algorithm::run_chain;
use bayeskit::diagnostics::{summarize, ChainStack, DimSummary};
use bayeskit::mcmc::{Ghmc, GradientState, Hmc, Kernel, Mala, McmcInfo, Nuts, RandomWalk};
use bayeskit::smc::{run_tempered_smc, SmcOptions, SmcOutput, TemperedTarget};
use bayeskit::vi::{elbo_estimate, vi_sample, Adam, MeanFieldState, MeanFieldVi, Optimizer, Sgd};
use bayeskit::{LogDensity, Metric, RngKey};

use crate::config::{Algorithm, OptimizerKind, RunConfig, SmcConfig, ViConfig};
use crate::error::CliError;
use crate::targets::{builtin, BuiltinTarget};

pub const SAMPLES_FILE: &str = "samples.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const ELBO_FILE: &str = "elbo.csv";

pub fn data_key(seed: u64) -> RngKey {
    RngKey::new(seed).child(1)
}

pub fn algorithm_key(seed: u64) -> RngKey {
    RngKey::new(seed).child(0)
}

fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Config(format!("cannot build thread pool: {e}")))?;
    Ok(pool.install(f))
}

/// Starting point for chain initialization: uniform on `[-2, 2]^d`.
fn initial_position(key: RngKey, dim: usize) -> Vec<f64> {
    key.uniforms(dim).iter().map(|u| 4.0 * u - 2.0).collect()
}

fn sample_with<K: Kernel>(
    key: RngKey,
    kernel: &K,
    target: &dyn LogDensity,
    state: K::State,
    num_samples: usize,
) -> Result<(Vec<Vec<f64>>, Vec<McmcInfo>), CliError> {
    let trace = run_chain(
        key,
        |k, s| Ok(kernel.step(k, s, target)),
        state,
        num_samples,
    )?;
    Ok((trace.positions, trace.infos))
}

/// Warmup with step-size-only dual averaging, then sampling.
fn tuned_chain<K: bayeskit::mcmc::StepSizeKernel>(
    keys: (RngKey, RngKey),
    kernel: K,
    target: &dyn LogDensity,
    init: &[f64],
    cfg: &RunConfig,
) -> Result<ChainResult, CliError> {
    let state = kernel.init(init, target)?;
    let params = DualAveragingParams::with_target(cfg.target_accept);
    let (kernel, state, _) =
        dual_averaging_warmup(keys.0, &kernel, target, state, cfg.num_warmup, &params);
    let step_size = kernel.step_size();
    let (draws, infos) = sample_with(keys.1, &kernel, target, state, cfg.num_samples)?;
    Ok(ChainResult {
        draws,
        infos,
        step_size,
    })
}

pub struct ChainResult {
    pub draws: Vec<Vec<f64>>,
    pub infos: Vec<McmcInfo>,
    pub step_size: f64,
}

fn run_one_chain(
    cfg: &RunConfig,
    target: &dyn LogDensity,
    key: RngKey,
) -> Result<ChainResult, CliError> {
    let (k_init, k_warm, k_sample) = key.split3();
    let init = initial_position(k_init, target.dim());
    match cfg.algorithm {
        Algorithm::Rwm => tuned_chain(
            (k_warm, k_sample),
            RandomWalk::isotropic(cfg.step_size)?,
            target,
            &init,
            cfg,
        ),
        Algorithm::Mala => tuned_chain(
            (k_warm, k_sample),
            Mala::new(cfg.step_size)?,
            target,
            &init,
            cfg,
        ),
        Algorithm::Ghmc => {
            let kernel = Ghmc::new(
                cfg.step_size,
                cfg.persistence,
                Metric::identity(target.dim()),
            )?
            .with_slice_jitter(cfg.slice_jitter)?;
            tuned_chain((k_warm, k_sample), kernel, target, &init, cfg)
        }
        Algorithm::Hmc | Algorithm::Nuts => {
            let family = if cfg.algorithm == Algorithm::Hmc {
                KernelFamily::Hmc {
                    num_integration_steps: cfg.num_integration_steps,
                }
            } else {
                KernelFamily::Nuts {
                    max_depth: cfg.max_depth,
                }
            };
            let (step_size, metric, state) = if cfg.num_warmup == 0 {
                let state = GradientState::new(&init, target)?;
                let metric = Metric::identity(target.dim());
                let eps =
                    find_reasonable_step_size(k_warm, target, &state, &metric, cfg.step_size)?;
                (eps, metric, state)
            } else {
                let options = WindowOptions {
                    mass_matrix: if cfg.mass_matrix == "dense" {
                        MassMatrixKind::Dense
                    } else {
                        MassMatrixKind::Diagonal
                    },
                    initial_step_size: cfg.step_size,
                    ..Default::default()
                }
                .with_target_accept(cfg.target_accept);
                let w = window_adaptation(k_warm, target, &init, cfg.num_warmup, family, &options)?;
                (w.step_size, w.metric, w.state)
            };
            let (draws, infos) = match family {
                KernelFamily::Hmc {
                    num_integration_steps,
                } => sample_with(
                    k_sample,
                    &Hmc::new(step_size, num_integration_steps, metric)?,
                    target,
                    state,
                    cfg.num_samples,
                )?,
                KernelFamily::Nuts { max_depth } => sample_with(
                    k_sample,
                    &Nuts::new(step_size, metric)?.with_max_depth(max_depth),
                    target,
                    state,
                    cfg.num_samples,
                )?,
            };
            Ok(ChainResult {
                draws,
                infos,
                step_size,
            })
        }
    }
}

pub struct McmcRun {
    pub target: BuiltinTarget,
    pub chains: Vec<ChainResult>,
}

/// Warmup and sampling for every chain, in parallel.
pub fn run_mcmc(cfg: &RunConfig) -> Result<McmcRun, CliError> {
    let target = builtin(&cfg.target, cfg.dim, data_key(cfg.common.seed))?;
    let key = algorithm_key(cfg.common.seed);
    let chains = with_threads(cfg.common.threads, || {
        (0..cfg.num_chains)
            .into_par_iter()
            .map(|c| run_one_chain(cfg, &*target.density, key.child(c as u64)))
            .collect::<Result<Vec<_>, _>>()
    })??;
    Ok(McmcRun { target, chains })
}

fn write_samples<'a>(
    path: &Path,
    dim: usize,
    rows: impl Iterator<Item = (usize, usize, &'a [f64])>,
) -> Result<(), CliError> {
    let mut out = BufWriter::new(File::create(path)?);
    let mut header = String::from("chain,draw");
    for j in 0..dim {
        header.push_str(&format!(",dim_{j}"));
    }
    writeln!(out, "{header}")?;
    for (chain, draw, x) in rows {
        write!(out, "{chain},{draw}")?;
        for v in x {
            write!(out, ",{v:.16e}")?;
        }
        writeln!(out)?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct Metadata {
    runtime_seconds: f64,
}

fn write_summary(dir: &Path, mut summary: Value, started: Instant) -> Result<(), CliError> {
    summary["metadata"] = serde_json::to_value(Metadata {
        runtime_seconds: started.elapsed().as_secs_f64(),
    })?;
    let mut text = serde_json::to_string_pretty(&summary)?;
    text.push('\n');
    fs::write(dir.join(SUMMARY_FILE), text)?;
    Ok(())
}

fn per_dim(draws: Vec<Vec<Vec<f64>>>) -> Result<Vec<DimSummary>, CliError> {
    let stack = ChainStack::new(draws)?;
    Ok(summarize::<McmcInfo>(&stack, &[]).per_dim)
}

/// `run`: MCMC with warmup; writes samples and summary.
pub fn execute_run(cfg: &RunConfig) -> Result<(), CliError> {
    let started = Instant::now();
    let run = run_mcmc(cfg)?;
    let dir = &cfg.common.output_dir;
    fs::create_dir_all(dir)?;
    write_samples(
        &dir.join(SAMPLES_FILE),
        run.target.dim(),
        run.chains.iter().enumerate().flat_map(|(c, r)| {
            r.draws
                .iter()
                .enumerate()
                .map(move |(d, x)| (c, d, x.as_slice()))
        }),
    )?;
    let stack = ChainStack::new(run.chains.iter().map(|c| c.draws.clone()).collect())?;
    let infos: Vec<McmcInfo> = run
        .chains
        .iter()
        .flat_map(|c| c.infos.iter().copied())
        .collect();
    let summary = summarize(&stack, &infos);
    let value = json!({
        "command": "run",
        "config": cfg,
        "per_dim": summary.per_dim,
        "acceptance_mean": summary.acceptance_mean,
        "divergences": summary.divergences,
        "step_sizes": run.chains.iter().map(|c| c.step_size).collect::<Vec<_>>(),
    });
    write_summary(dir, value, started)
}

/// Gaussian reference `N(0, scale^2 I)` and likelihood `pi / reference`.
pub struct ReferenceTempering<'a> {
    pub density: &'a dyn LogDensity,
    pub scale: f64,
}

impl ReferenceTempering<'_> {
    fn log_reference(&self, x: &[f64]) -> f64 {
        let s2 = self.scale * self.scale;
        -x.iter().map(|v| 0.5 * v * v / s2).sum::<f64>()
            - x.len() as f64 * (self.scale.ln() + 0.5 * (2.0 * std::f64::consts::PI).ln())
    }
}

impl TemperedTarget for ReferenceTempering<'_> {
    fn dim(&self) -> usize {
        self.density.dim()
    }
    fn log_prior(&self, x: &[f64]) -> f64 {
        self.log_reference(x)
    }
    fn log_prior_gradient(&self, x: &[f64]) -> Vec<f64> {
        let s2 = self.scale * self.scale;
        x.iter().map(|v| -v / s2).collect()
    }
    fn log_likelihood(&self, x: &[f64]) -> f64 {
        self.density.logdensity(x) - self.log_reference(x)
    }
    fn log_likelihood_gradient(&self, x: &[f64]) -> Vec<f64> {
        let s2 = self.scale * self.scale;
        self.density
            .gradient(x)
            .iter()
            .zip(x)
            .map(|(g, v)| g + v / s2)
            .collect()
    }
}

pub struct SmcRun {
    pub target: BuiltinTarget,
    pub output: SmcOutput,
}

pub fn run_smc(cfg: &SmcConfig) -> Result<SmcRun, CliError> {
    let target = builtin(&cfg.target, cfg.dim, data_key(cfg.common.seed))?;
    let scale = cfg.prior_scale.unwrap_or(target.default_prior_scale);
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(CliError::Config("prior_scale must be positive".into()));
    }
    if !(cfg.target_ess_ratio > 0.0 && cfg.target_ess_ratio < 1.0) {
        return Err(CliError::Config(
            "target_ess_ratio must lie in (0, 1)".into(),
        ));
    }
    let tempered = ReferenceTempering {
        density: &*target.density,
        scale,
    };
    let dim = target.dim();
    let options = SmcOptions {
        num_mutation_steps: cfg.num_mutation_steps,
        resample_method: cfg.resample_method.parse()?,
        target_ess_ratio: cfg.target_ess_ratio,
        max_stages: cfg.max_stages,
    };
    let key = algorithm_key(cfg.common.seed);
    let prior = |k: RngKey| {
        k.normal_vector(dim)
            .into_iter()
            .map(|z| scale * z)
            .collect::<Vec<f64>>()
    };
    let n = cfg.num_particles;
    let output = with_threads(cfg.common.threads, || match cfg.kernel {
        Algorithm::Rwm => run_tempered_smc(
            key,
            &tempered,
            prior,
            n,
            &RandomWalk::isotropic(cfg.step_size)?,
            &options,
        ),
        Algorithm::Mala => run_tempered_smc(
            key,
            &tempered,
            prior,
            n,
            &Mala::new(cfg.step_size)?,
            &options,
        ),
        _ => run_tempered_smc(
            key,
            &tempered,
            prior,
            n,
            &Hmc::new(
                cfg.step_size,
                cfg.num_integration_steps,
                Metric::identity(dim),
            )?,
            &options,
        ),
    })??;
    Ok(SmcRun { target, output })
}

/// `run-smc`: tempered SMC from a Gaussian reference; writes the final
/// particles and a summary with the ladder and `log_z`.
pub fn execute_smc(cfg: &SmcConfig) -> Result<(), CliError> {
    let started = Instant::now();
    let run = run_smc(cfg)?;
    let dir = &cfg.common.output_dir;
    fs::create_dir_all(dir)?;
    let particles = &run.output.ensemble.particles;
    write_samples(
        &dir.join(SAMPLES_FILE),
        run.target.dim(),
        particles
            .iter()
            .enumerate()
            .map(|(d, x)| (0, d, x.as_slice())),
    )?;
    let accepts: Vec<f64> = run
        .output
        .infos
        .iter()
        .filter_map(|i| i.acceptance_mean)
        .collect();
    let acceptance_mean =
        (!accepts.is_empty()).then(|| accepts.iter().sum::<f64>() / accepts.len() as f64);
    let value = json!({
        "command": "run-smc",
        "config": cfg,
        "per_dim": per_dim(vec![particles.clone()])?,
        "acceptance_mean": acceptance_mean,
        "divergences": 0,
        "smc": {
            "ladder": run.output.ladder,
            "log_z": run.output.log_z,
            "ess": run.output.infos.iter().map(|i| i.ess).collect::<Vec<_>>(),
        },
    });
    write_summary(dir, value, started)
}

pub struct ViRun {
    pub target: BuiltinTarget,
    pub mu: Vec<f64>,
    pub sigma: Vec<f64>,
    pub elbos: Vec<f64>,
    pub final_elbo: f64,
    pub draws: Vec<Vec<f64>>,
}

/// Samples used for the reported final ELBO.
pub const FINAL_ELBO_SAMPLES: usize = 1000;

fn fit_with<O: Optimizer>(
    cfg: &ViConfig,
    target: BuiltinTarget,
    optimizer: O,
) -> Result<ViRun, CliError> {
    let density = &*target.density;
    let (k_fit, k_draws, k_eval) = algorithm_key(cfg.common.seed).split3();
    let vi = MeanFieldVi::new(density, optimizer, cfg.num_elbo_samples)?;
    let (state, elbos): (MeanFieldState<O::State>, Vec<f64>) =
        vi.fit(k_fit, &vec![0.0; density.dim()], cfg.num_steps)?;
    let final_elbo = elbo_estimate(k_eval, &state, density, FINAL_ELBO_SAMPLES)?;
    let draws = vi_sample(k_draws, &state, cfg.num_draws);
    let sigma = state.sigma();
    Ok(ViRun {
        target,
        mu: state.mu,
        sigma,
        elbos,
        final_elbo,
        draws,
    })
}

pub fn run_vi(cfg: &ViConfig) -> Result<ViRun, CliError> {
    let target = builtin(&cfg.target, cfg.dim, data_key(cfg.common.seed))?;
    match cfg.optimizer {
        OptimizerKind::Adam => fit_with(cfg, target, Adam::new(cfg.learning_rate)?),
        OptimizerKind::Sgd => fit_with(cfg, target, Sgd::new(cfg.learning_rate)?),
    }
}

/// `run-vi`: mean-field VI from the origin; writes the ELBO trace,
/// posterior draws and a summary.
pub fn execute_vi(cfg: &ViConfig) -> Result<(), CliError> {
    let started = Instant::now();
    let run = run_vi(cfg)?;
    let dir = &cfg.common.output_dir;
    fs::create_dir_all(dir)?;
    write_samples(
        &dir.join(SAMPLES_FILE),
        run.target.dim(),
        run.draws
            .iter()
            .enumerate()
            .map(|(d, x)| (0, d, x.as_slice())),
    )?;
    let mut out = BufWriter::new(File::create(dir.join(ELBO_FILE))?);
    writeln!(out, "step,elbo")?;
    for (i, e) in run.elbos.iter().enumerate() {
        writeln!(out, "{i},{e:.16e}")?;
    }
    out.flush()?;
    let value = json!({
        "command": "run-vi",
        "config": cfg,
        "per_dim": per_dim(vec![run.draws.clone()])?,
        "acceptance_mean": Value::Null,
        "divergences": 0,
        "vi": {
            "final_elbo": run.final_elbo,
            "mu": run.mu,
            "sigma": run.sigma,
        },
    });
    write_summary(dir, value, started)
}
