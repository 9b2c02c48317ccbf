//! Command-line definition.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::Settings;
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "bayeskit",
    version,
    about = "Run samplers and approximate inference on built-in targets"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// MCMC with warmup.
    Run(RunArgs),
    /// Tempered sequential Monte Carlo.
    RunSmc(SmcArgs),
    /// Mean-field variational inference.
    RunVi(ViArgs),
    /// Built-in targets.
    Targets {
        #[command(subcommand)]
        action: TargetsAction,
    },
    /// Quick invariant checks.
    Selftest {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Debug, Subcommand)]
pub enum TargetsAction {
    List,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Root seed (required, here or in the config file).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Directory for output files [default: ./out].
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
    /// Worker threads; 0 uses all cores.
    #[arg(long)]
    pub threads: Option<usize>,
    /// `key = value` file; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Target name [default depends on command].
    #[arg(long)]
    pub target: Option<String>,
    #[arg(long)]
    pub dim: Option<usize>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// rwm, mala, hmc, nuts or ghmc [default: nuts].
    #[arg(long)]
    pub algorithm: Option<String>,
    #[arg(long)]
    pub step_size: Option<f64>,
    #[arg(long)]
    pub num_integration_steps: Option<usize>,
    #[arg(long)]
    pub num_warmup: Option<usize>,
    #[arg(long)]
    pub num_samples: Option<usize>,
    #[arg(long)]
    pub num_chains: Option<usize>,
    #[arg(long)]
    pub max_depth: Option<usize>,
    #[arg(long)]
    pub persistence: Option<f64>,
    #[arg(long)]
    pub slice_jitter: Option<f64>,
    #[arg(long)]
    pub target_accept: Option<f64>,
    /// diagonal or dense.
    #[arg(long)]
    pub mass_matrix: Option<String>,
}

#[derive(Debug, Args)]
pub struct SmcArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub num_particles: Option<usize>,
    /// Mutation kernel: rwm, mala or hmc.
    #[arg(long)]
    pub kernel: Option<String>,
    #[arg(long)]
    pub step_size: Option<f64>,
    #[arg(long)]
    pub num_integration_steps: Option<usize>,
    #[arg(long)]
    pub num_mutation_steps: Option<usize>,
    /// multinomial, systematic, stratified or residual.
    #[arg(long)]
    pub resample_method: Option<String>,
    #[arg(long)]
    pub target_ess_ratio: Option<f64>,
    #[arg(long)]
    pub prior_scale: Option<f64>,
    #[arg(long)]
    pub max_stages: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ViArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub num_steps: Option<usize>,
    #[arg(long)]
    pub num_elbo_samples: Option<usize>,
    /// adam or sgd.
    #[arg(long)]
    pub optimizer: Option<String>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub num_draws: Option<usize>,
}

macro_rules! overlay {
    ($settings:expr, $args:expr, $($field:ident),* $(,)?) => {
        $(if let Some(v) = &$args.$field {
            $settings.set(stringify!($field), v.clone());
        })*
    };
}

impl CommonArgs {
    fn settings(&self) -> Result<Settings, CliError> {
        let mut s = match &self.config {
            Some(path) => Settings::from_file(path)?,
            None => Settings::default(),
        };
        overlay!(s, self, seed, threads, target, dim);
        if let Some(dir) = &self.output_dir {
            s.set("output_dir", dir.display());
        }
        Ok(s)
    }
}

impl RunArgs {
    pub fn settings(&self) -> Result<Settings, CliError> {
        let mut s = self.common.settings()?;
        overlay!(
            s,
            self,
            algorithm,
            step_size,
            num_integration_steps,
            num_warmup,
            num_samples,
            num_chains,
            max_depth,
            persistence,
            slice_jitter,
            target_accept,
            mass_matrix
        );
        Ok(s)
    }
}

impl SmcArgs {
    pub fn settings(&self) -> Result<Settings, CliError> {
        let mut s = self.common.settings()?;
        overlay!(
            s,
            self,
            num_particles,
            kernel,
            step_size,
            num_integration_steps,
            num_mutation_steps,
            resample_method,
            target_ess_ratio,
            prior_scale,
            max_stages
        );
        Ok(s)
    }
}

impl ViArgs {
    pub fn settings(&self) -> Result<Settings, CliError> {
        let mut s = self.common.settings()?;
        overlay!(
            s,
            self,
            num_steps,
            num_elbo_samples,
            optimizer,
            learning_rate,
            num_draws
        );
        Ok(s)
    }
}
