//! Run configuration: a `key = value` file overlaid by command-line flags,
//! resolved into typed configs with documented defaults.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use bayeskit::mcmc::DEFAULT_SLICE_JITTER;
use serde::Serialize;

use crate::error::CliError;

/// Raw settings keyed by snake_case name.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

fn normalize_key(key: &str) -> String {
    key.trim().trim_start_matches("--").replace('-', "_")
}

impl Settings {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut values = BTreeMap::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::Config(format!("config line {}: expected `key = value`", n + 1))
            })?;
            values.insert(normalize_key(key), value.trim().to_string());
        }
        Ok(Settings { values })
    }

    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::Config(format!("cannot read config file {}: {e}", path.display()))
        })?;
        Settings::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: impl Display) {
        self.values.insert(normalize_key(key), value.to_string());
    }

    fn take<T: FromStr>(&mut self, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: Display,
    {
        match self.values.remove(key) {
            None => Ok(None),
            Some(raw) => raw
                .parse()
                .map(Some)
                .map_err(|e| CliError::Config(format!("invalid value `{raw}` for {key}: {e}"))),
        }
    }

    fn take_or<T: FromStr>(&mut self, key: &str, default: T) -> Result<T, CliError>
    where
        T::Err: Display,
    {
        Ok(self.take(key)?.unwrap_or(default))
    }

    fn positive(&mut self, key: &str, default: usize) -> Result<usize, CliError> {
        let v = self.take_or(key, default)?;
        if v == 0 {
            return Err(CliError::Config(format!("{key} must be positive")));
        }
        Ok(v)
    }

    fn finish(self) -> Result<(), CliError> {
        if let Some(key) = self.values.keys().next() {
            return Err(CliError::Config(format!("unknown setting `{key}`")));
        }
        Ok(())
    }
}

fn choice<T: Copy>(key: &str, raw: &str, options: &[(&str, T)]) -> Result<T, CliError> {
    options
        .iter()
        .find(|(name, _)| *name == raw)
        .map(|(_, v)| *v)
        .ok_or_else(|| {
            let names: Vec<&str> = options.iter().map(|(n, _)| *n).collect();
            CliError::Config(format!(
                "unknown {key} `{raw}`; valid choices: {}",
                names.join(", ")
            ))
        })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Rwm,
    Mala,
    Hmc,
    Nuts,
    Ghmc,
}

pub const ALGORITHMS: [(&str, Algorithm); 5] = [
    ("rwm", Algorithm::Rwm),
    ("mala", Algorithm::Mala),
    ("hmc", Algorithm::Hmc),
    ("nuts", Algorithm::Nuts),
    ("ghmc", Algorithm::Ghmc),
];

impl Algorithm {
    pub fn default_target_accept(self) -> f64 {
        match self {
            Algorithm::Rwm => 0.234,
            Algorithm::Mala => 0.574,
            _ => 0.8,
        }
    }

    pub fn default_step_size(self) -> f64 {
        match self {
            Algorithm::Rwm => 0.5,
            Algorithm::Mala | Algorithm::Ghmc => 0.1,
            Algorithm::Hmc | Algorithm::Nuts => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CommonConfig {
    pub seed: u64,
    pub output_dir: PathBuf,
    /// 0 uses every available core.
    pub threads: usize,
}

impl CommonConfig {
    fn take(s: &mut Settings) -> Result<Self, CliError> {
        let seed = s
            .take("seed")?
            .ok_or_else(|| CliError::Config("--seed is required".into()))?;
        Ok(CommonConfig {
            seed,
            output_dir: s.take_or("output_dir", PathBuf::from("./out"))?,
            threads: s.take_or("threads", 0)?,
        })
    }
}

fn take_target(s: &mut Settings, default: &str) -> Result<(String, Option<usize>), CliError> {
    let target: String = s.take_or("target", default.to_string())?;
    let dim = s.take("dim")?;
    Ok((target, dim))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    #[serde(flatten)]
    pub common: CommonConfig,
    pub algorithm: Algorithm,
    pub target: String,
    pub dim: Option<usize>,
    pub num_warmup: usize,
    pub num_samples: usize,
    pub num_chains: usize,
    /// Initial step size (searched or adapted from here during warmup).
    pub step_size: f64,
    pub num_integration_steps: usize,
    pub max_depth: usize,
    pub persistence: f64,
    pub slice_jitter: f64,
    pub target_accept: f64,
    pub mass_matrix: String,
}

impl RunConfig {
    pub fn from_settings(mut s: Settings) -> Result<Self, CliError> {
        let common = CommonConfig::take(&mut s)?;
        let algorithm: String = s.take_or("algorithm", "nuts".to_string())?;
        let algorithm = choice("algorithm", &algorithm, &ALGORITHMS)?;
        let (target, dim) = take_target(&mut s, "std_normal")?;
        let mass_matrix: String = s.take_or("mass_matrix", "diagonal".to_string())?;
        choice(
            "mass_matrix",
            &mass_matrix,
            &[("diagonal", ()), ("dense", ())],
        )?;
        let num_samples = s.positive("num_samples", 1000)?;
        if num_samples < 4 {
            return Err(CliError::Config("num_samples must be at least 4".into()));
        }
        let cfg = RunConfig {
            common,
            algorithm,
            target,
            dim,
            num_warmup: s.take_or("num_warmup", 1000)?,
            num_samples,
            num_chains: s.positive("num_chains", 4)?,
            step_size: s.take_or("step_size", algorithm.default_step_size())?,
            num_integration_steps: s.positive("num_integration_steps", 10)?,
            max_depth: s.positive("max_depth", 10)?,
            persistence: s.take_or("persistence", 0.9)?,
            slice_jitter: s.take_or("slice_jitter", DEFAULT_SLICE_JITTER)?,
            target_accept: s.take_or("target_accept", algorithm.default_target_accept())?,
            mass_matrix,
        };
        s.finish()?;
        if !(cfg.target_accept > 0.0 && cfg.target_accept < 1.0) {
            return Err(CliError::Config("target_accept must lie in (0, 1)".into()));
        }
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SmcConfig {
    #[serde(flatten)]
    pub common: CommonConfig,
    pub target: String,
    pub dim: Option<usize>,
    pub num_particles: usize,
    pub kernel: Algorithm,
    pub step_size: f64,
    pub num_integration_steps: usize,
    pub num_mutation_steps: usize,
    pub resample_method: String,
    pub target_ess_ratio: f64,
    /// Standard deviation of the Gaussian reference; the target's default when absent.
    pub prior_scale: Option<f64>,
    pub max_stages: usize,
}

pub const SMC_KERNELS: [(&str, Algorithm); 3] = [
    ("rwm", Algorithm::Rwm),
    ("mala", Algorithm::Mala),
    ("hmc", Algorithm::Hmc),
];

impl SmcConfig {
    pub fn from_settings(mut s: Settings) -> Result<Self, CliError> {
        let common = CommonConfig::take(&mut s)?;
        let (target, dim) = take_target(&mut s, "conjugate_gauss")?;
        let kernel: String = s.take_or("kernel", "rwm".to_string())?;
        let kernel = choice("kernel", &kernel, &SMC_KERNELS)?;
        let resample_method: String = s.take_or("resample_method", "systematic".to_string())?;
        resample_method
            .parse::<bayeskit::smc::ResampleMethod>()
            .map_err(|e| CliError::Config(e.to_string()))?;
        let default_step = match kernel {
            Algorithm::Rwm => 0.5,
            Algorithm::Mala => 0.1,
            _ => 0.2,
        };
        let num_particles = s.positive("num_particles", 1000)?;
        if num_particles < 4 {
            return Err(CliError::Config("num_particles must be at least 4".into()));
        }
        let cfg = SmcConfig {
            common,
            target,
            dim,
            num_particles,
            kernel,
            step_size: s.take_or("step_size", default_step)?,
            num_integration_steps: s.positive("num_integration_steps", 5)?,
            num_mutation_steps: s.take_or("num_mutation_steps", 5)?,
            resample_method,
            target_ess_ratio: s.take_or("target_ess_ratio", 0.5)?,
            prior_scale: s.take("prior_scale")?,
            max_stages: s.positive("max_stages", 1000)?,
        };
        s.finish()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Adam,
    Sgd,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ViConfig {
    #[serde(flatten)]
    pub common: CommonConfig,
    pub target: String,
    pub dim: Option<usize>,
    pub num_steps: usize,
    pub num_elbo_samples: usize,
    pub optimizer: OptimizerKind,
    pub learning_rate: f64,
    /// Posterior draws written to the sample file.
    pub num_draws: usize,
}

impl ViConfig {
    pub fn from_settings(mut s: Settings) -> Result<Self, CliError> {
        let common = CommonConfig::take(&mut s)?;
        let (target, dim) = take_target(&mut s, "aniso_gauss")?;
        let optimizer: String = s.take_or("optimizer", "adam".to_string())?;
        let optimizer = choice(
            "optimizer",
            &optimizer,
            &[("adam", OptimizerKind::Adam), ("sgd", OptimizerKind::Sgd)],
        )?;
        let num_draws = s.positive("num_draws", 1000)?;
        if num_draws < 4 {
            return Err(CliError::Config("num_draws must be at least 4".into()));
        }
        let cfg = ViConfig {
            common,
            target,
            dim,
            num_steps: s.positive("num_steps", 5000)?,
            num_elbo_samples: s.positive("num_elbo_samples", 32)?,
            optimizer,
            learning_rate: s.take_or("learning_rate", 0.01)?,
            num_draws,
        };
        s.finish()?;
        Ok(cfg)
    }
}
