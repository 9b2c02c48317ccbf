//! Built-in targets with closed-form densities and gradients.
//!
//! All densities are normalized except `logistic_synth`, so an SMC run from
//! a normalized Gaussian reference estimates `log_z = 0` for them, and the
//! model evidence for `conjugate_gauss`.

use std::f64::consts::PI;

use bayeskit::target::Target;
use bayeskit::{LogDensity, RngKey};

use crate::error::CliError;

pub const TARGET_NAMES: [&str; 6] = [
    "std_normal",
    "aniso_gauss",
    "banana",
    "funnel",
    "logistic_synth",
    "conjugate_gauss",
];

/// Observations per coordinate of `conjugate_gauss`.
pub const CONJUGATE_OBSERVATIONS: usize = 10;
pub const LOGISTIC_POINTS: usize = 200;
pub const LOGISTIC_FEATURES: usize = 5;
const BANANA_CURVATURE: f64 = 0.1;
const BANANA_SCALE: f64 = 10.0;
const FUNNEL_SCALE: f64 = 3.0;

fn half_log_2pi() -> f64 {
    0.5 * (2.0 * PI).ln()
}

pub struct BuiltinTarget {
    pub name: &'static str,
    pub density: Box<dyn LogDensity>,
    /// Exact `(mean, variance)` per coordinate.
    pub analytic_moments: Option<Vec<(f64, f64)>>,
    /// Exact log normalizing constant of `density`, when known.
    pub log_normalizer: Option<f64>,
    /// Standard deviation of the Gaussian reference SMC starts from.
    pub default_prior_scale: f64,
}

impl BuiltinTarget {
    pub fn dim(&self) -> usize {
        self.density.dim()
    }
}

pub fn default_dim(name: &str) -> Option<usize> {
    Some(match name {
        "std_normal" | "aniso_gauss" | "funnel" => 10,
        "banana" => 2,
        "logistic_synth" => LOGISTIC_FEATURES,
        "conjugate_gauss" => 1,
        _ => return None,
    })
}

fn unknown(name: &str) -> CliError {
    CliError::Config(format!(
        "unknown target `{name}`; valid choices: {}",
        TARGET_NAMES.join(", ")
    ))
}

/// Builds target `name`. Synthetic data is drawn from `data_key`.
pub fn builtin(
    name: &str,
    dim: Option<usize>,
    data_key: RngKey,
) -> Result<BuiltinTarget, CliError> {
    let dim = dim.unwrap_or(default_dim(name).ok_or_else(|| unknown(name))?);
    if dim == 0 {
        return Err(CliError::Config("dim must be positive".into()));
    }
    let target = match name {
        "std_normal" => std_normal(dim),
        "aniso_gauss" => aniso_gauss(dim),
        "banana" => {
            if dim < 2 {
                return Err(CliError::Config("banana needs dim >= 2".into()));
            }
            banana(dim)
        }
        "funnel" => {
            if dim < 2 {
                return Err(CliError::Config("funnel needs dim >= 2".into()));
            }
            funnel(dim)
        }
        "logistic_synth" => {
            if dim != LOGISTIC_FEATURES {
                return Err(CliError::Config(format!(
                    "logistic_synth has fixed dim {LOGISTIC_FEATURES}"
                )));
            }
            logistic_synth(data_key)
        }
        "conjugate_gauss" => conjugate_gauss(dim, data_key),
        _ => return Err(unknown(name)),
    };
    Ok(target)
}

fn gaussian(name: &'static str, variances: Vec<f64>, mean: Vec<f64>) -> BuiltinTarget {
    let dim = variances.len();
    let norm: f64 = variances
        .iter()
        .map(|v| 0.5 * v.ln() + half_log_2pi())
        .sum();
    let (v1, m1) = (variances.clone(), mean.clone());
    let (v2, m2) = (variances.clone(), mean.clone());
    let scale = variances.iter().cloned().fold(0.0, f64::max).sqrt();
    BuiltinTarget {
        name,
        density: Box::new(Target::new(
            dim,
            move |x: &[f64]| {
                -x.iter()
                    .zip(&m1)
                    .zip(&v1)
                    .map(|((x, m), v)| 0.5 * (x - m).powi(2) / v)
                    .sum::<f64>()
                    - norm
            },
            move |x: &[f64]| {
                x.iter()
                    .zip(&m2)
                    .zip(&v2)
                    .map(|((x, m), v)| -(x - m) / v)
                    .collect()
            },
        )),
        analytic_moments: Some(mean.into_iter().zip(variances).collect()),
        log_normalizer: Some(0.0),
        default_prior_scale: scale.max(1.0),
    }
}

pub fn std_normal(dim: usize) -> BuiltinTarget {
    gaussian("std_normal", vec![1.0; dim], vec![0.0; dim])
}

/// Variances log-spaced from 1 to 100.
pub fn aniso_gauss(dim: usize) -> BuiltinTarget {
    gaussian("aniso_gauss", aniso_variances(dim), vec![0.0; dim])
}

pub fn aniso_variances(dim: usize) -> Vec<f64> {
    if dim == 1 {
        return vec![1.0];
    }
    (0..dim)
        .map(|i| 100f64.powf(i as f64 / (dim - 1) as f64))
        .collect()
}

/// Twisted Gaussian: `x0 ~ N(0, 100)`, `x1 + b (x0^2 - 100) ~ N(0, 1)`, the
/// remaining coordinates standard normal.
pub fn banana(dim: usize) -> BuiltinTarget {
    let (b, s2) = (BANANA_CURVATURE, BANANA_SCALE * BANANA_SCALE);
    let norm = 0.5 * s2.ln() + dim as f64 * half_log_2pi();
    let twist = move |x: &[f64]| x[1] + b * (x[0] * x[0] - s2);
    let mut moments = vec![(0.0, s2), (0.0, 1.0 + 2.0 * b * b * s2 * s2)];
    moments.extend(std::iter::repeat_n((0.0, 1.0), dim - 2));
    BuiltinTarget {
        name: "banana",
        density: Box::new(Target::new(
            dim,
            move |x: &[f64]| {
                -0.5 * x[0] * x[0] / s2
                    - 0.5 * twist(x).powi(2)
                    - 0.5 * x[2..].iter().map(|v| v * v).sum::<f64>()
                    - norm
            },
            move |x: &[f64]| {
                let t = twist(x);
                let mut g: Vec<f64> = x.iter().map(|v| -v).collect();
                g[0] = -x[0] / s2 - t * 2.0 * b * x[0];
                g[1] = -t;
                g
            },
        )),
        analytic_moments: Some(moments),
        log_normalizer: Some(0.0),
        default_prior_scale: 15.0,
    }
}

/// `v ~ N(0, 9)`, `x_i | v ~ N(0, e^v)` for the remaining coordinates.
pub fn funnel(dim: usize) -> BuiltinTarget {
    let s2 = FUNNEL_SCALE * FUNNEL_SCALE;
    let k = (dim - 1) as f64;
    let norm = 0.5 * s2.ln() + dim as f64 * half_log_2pi();
    let mut moments = vec![(0.0, s2)];
    moments.extend(std::iter::repeat_n((0.0, (s2 / 2.0).exp()), dim - 1));
    BuiltinTarget {
        name: "funnel",
        density: Box::new(Target::new(
            dim,
            move |x: &[f64]| {
                let v = x[0];
                let ss: f64 = x[1..].iter().map(|x| x * x).sum();
                -0.5 * v * v / s2 - 0.5 * ss * (-v).exp() - 0.5 * k * v - norm
            },
            move |x: &[f64]| {
                let v = x[0];
                let inv = (-v).exp();
                let ss: f64 = x[1..].iter().map(|x| x * x).sum();
                let mut g = vec![-v / s2 + 0.5 * ss * inv - 0.5 * k];
                g.extend(x[1..].iter().map(|x| -x * inv));
                g
            },
        )),
        analytic_moments: Some(moments),
        log_normalizer: Some(0.0),
        default_prior_scale: 5.0,
    }
}

/// Design rows, labels and true weights of the synthetic logistic problem.
pub struct LogisticData {
    pub design: Vec<Vec<f64>>,
    pub labels: Vec<f64>,
    pub true_weights: Vec<f64>,
}

/// Standard-normal design, `N(0, 1)` true weights, Bernoulli labels.
pub fn logistic_data(key: RngKey) -> LogisticData {
    let (k_x, k_w, k_y) = key.split3();
    let true_weights = k_w.normal_vector(LOGISTIC_FEATURES);
    let design: Vec<Vec<f64>> = (0..LOGISTIC_POINTS)
        .map(|i| k_x.child(i as u64).normal_vector(LOGISTIC_FEATURES))
        .collect();
    let labels = design
        .iter()
        .enumerate()
        .map(|(i, x)| {
            let eta: f64 = x.iter().zip(&true_weights).map(|(x, w)| x * w).sum();
            let p = 1.0 / (1.0 + (-eta).exp());
            if k_y.child(i as u64).uniform() < p {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    LogisticData {
        design,
        labels,
        true_weights,
    }
}

fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Bayesian logistic regression with a `N(0, I)` prior on the weights.
pub fn logistic_synth(key: RngKey) -> BuiltinTarget {
    let data = std::sync::Arc::new(logistic_data(key));
    let d2 = data.clone();
    let norm = LOGISTIC_FEATURES as f64 * half_log_2pi();
    let eta = |x: &[f64], w: &[f64]| x.iter().zip(w).map(|(x, w)| x * w).sum::<f64>();
    BuiltinTarget {
        name: "logistic_synth",
        density: Box::new(Target::new(
            LOGISTIC_FEATURES,
            move |w: &[f64]| {
                let lik: f64 = data
                    .design
                    .iter()
                    .zip(&data.labels)
                    .map(|(x, y)| {
                        let e = eta(x, w);
                        // log sigma(e) = -softplus(-e), log(1 - sigma(e)) = -softplus(e)
                        -y * softplus(-e) - (1.0 - y) * softplus(e)
                    })
                    .sum();
                lik - 0.5 * w.iter().map(|w| w * w).sum::<f64>() - norm
            },
            move |w: &[f64]| {
                let mut g: Vec<f64> = w.iter().map(|w| -w).collect();
                for (x, y) in d2.design.iter().zip(&d2.labels) {
                    let r = y - 1.0 / (1.0 + (-eta(x, w)).exp());
                    g.iter_mut().zip(x).for_each(|(g, x)| *g += r * x);
                }
                g
            },
        )),
        analytic_moments: None,
        log_normalizer: None,
        default_prior_scale: 1.0,
    }
}

/// Observations of `conjugate_gauss`: `CONJUGATE_OBSERVATIONS` draws per
/// coordinate from `N(theta_j, 1)` with `theta_j ~ N(0, 1)`.
pub fn conjugate_observations(dim: usize, key: RngKey) -> Vec<Vec<f64>> {
    let (k_theta, k_y) = key.split2();
    let theta = k_theta.normal_vector(dim);
    (0..dim)
        .map(|j| {
            k_y.child(j as u64)
                .normal_vector(CONJUGATE_OBSERVATIONS)
                .iter()
                .map(|z| theta[j] + z)
                .collect()
        })
        .collect()
}

/// Log evidence of observations `y` under `theta ~ N(0, 1)`, `y_i ~ N(theta, 1)`.
pub fn conjugate_log_evidence(y: &[f64]) -> f64 {
    let k = y.len() as f64;
    let sum: f64 = y.iter().sum();
    let sq: f64 = y.iter().map(|v| v * v).sum();
    -k * half_log_2pi() - 0.5 * (1.0 + k).ln() - 0.5 * (sq - sum * sum / (1.0 + k))
}

/// Prior `N(0, I)` times unit-variance Gaussian likelihoods, one independent
/// block per coordinate. The density includes both normalizers, so its
/// integral is the model evidence.
pub fn conjugate_gauss(dim: usize, key: RngKey) -> BuiltinTarget {
    let obs = conjugate_observations(dim, key);
    let k = CONJUGATE_OBSERVATIONS as f64;
    let log_z: f64 = obs.iter().map(|y| conjugate_log_evidence(y)).sum();
    let moments = obs
        .iter()
        .map(|y| (y.iter().sum::<f64>() / (1.0 + k), 1.0 / (1.0 + k)))
        .collect();
    let sums: Vec<f64> = obs.iter().map(|y| y.iter().sum()).collect();
    let o1 = obs.clone();
    let norm = dim as f64 * (1.0 + k) * half_log_2pi();
    BuiltinTarget {
        name: "conjugate_gauss",
        density: Box::new(Target::new(
            dim,
            move |x: &[f64]| {
                x.iter()
                    .zip(&o1)
                    .map(|(t, y)| {
                        -0.5 * t * t - 0.5 * y.iter().map(|y| (y - t).powi(2)).sum::<f64>()
                    })
                    .sum::<f64>()
                    - norm
            },
            move |x: &[f64]| x.iter().zip(&sums).map(|(t, s)| -t + s - k * t).collect(),
        )),
        analytic_moments: Some(moments),
        log_normalizer: Some(log_z),
        default_prior_scale: 1.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use bayeskit::target::gradient_error;

    fn all(key: RngKey) -> Vec<BuiltinTarget> {
        TARGET_NAMES
            .iter()
            .map(|n| builtin(n, None, key).unwrap())
            .collect()
    }

    #[test]
    fn gradients_pass_finite_difference_audit() {
        for t in all(RngKey::new(1)) {
            for i in 0..100 {
                let x: Vec<f64> = RngKey::new(2)
                    .child(i)
                    .uniforms(t.dim())
                    .iter()
                    .map(|u| 4.0 * u - 2.0)
                    .collect();
                let err = gradient_error(&t.density, &x).unwrap();
                assert!(err < 1e-6, "{} at {x:?}: {err}", t.name);
            }
        }
    }

    #[test]
    fn moments_present_for_gaussians() {
        for name in ["std_normal", "aniso_gauss"] {
            assert!(builtin(name, Some(3), RngKey::new(0))
                .unwrap()
                .analytic_moments
                .is_some());
        }
        let v = aniso_variances(5);
        assert_eq!(v[0], 1.0);
        assert!((v[4] - 100.0).abs() < 1e-12);
        assert!((v[2] - 10.0).abs() < 1e-12);
    }

    #[test]
    fn one_dimensional_densities_are_normalized() {
        // Trapezoid rule over a wide grid.
        for t in [
            std_normal(1),
            aniso_gauss(1),
            conjugate_gauss(1, RngKey::new(3)),
        ] {
            let h = 1e-3;
            let total: f64 = (-20_000..=20_000)
                .map(|i| t.density.logdensity(&[i as f64 * h]).exp() * h)
                .sum();
            assert!(
                (total.ln() - t.log_normalizer.unwrap()).abs() < 1e-8,
                "{}",
                t.name
            );
        }
    }

    #[test]
    fn banana_and_funnel_are_normalized() {
        let h = 0.02;
        let b = banana(2);
        let mut total = 0.0;
        for i in -2500..=2500 {
            for j in -12_600..=1500 {
                total += b.density.logdensity(&[i as f64 * h, j as f64 * h]).exp() * h * h;
            }
        }
        assert!((total - 1.0).abs() < 1e-4, "{total}");
        // Substitute x = exp(v / 2) u so the grid follows the neck.
        let f = funnel(2);
        let mut total = 0.0;
        for i in -1350..=1350 {
            let v = i as f64 * h;
            for j in -400..=400 {
                let u = j as f64 * h;
                total += (f.density.logdensity(&[v, (0.5 * v).exp() * u]) + 0.5 * v).exp() * h * h;
            }
        }
        assert!((total - 1.0).abs() < 1e-4, "{total}");
    }

    #[test]
    fn logistic_data_is_deterministic() {
        let a = logistic_data(RngKey::new(4));
        let b = logistic_data(RngKey::new(4));
        assert_eq!(a.design, b.design);
        assert_eq!(a.labels, b.labels);
        assert_eq!(a.design.len(), 200);
        assert!(a.labels.contains(&1.0) && a.labels.contains(&0.0));
        assert_ne!(a.true_weights, logistic_data(RngKey::new(5)).true_weights);
    }

    #[test]
    fn conjugate_evidence_matches_quadrature() {
        let y = [0.3, -1.1, 0.8];
        // Integrate prior * likelihood over theta.
        let h = 1e-3;
        let f = |t: f64| {
            -0.5 * t * t - half_log_2pi()
                + y.iter()
                    .map(|v| -0.5 * (v - t).powi(2) - half_log_2pi())
                    .sum::<f64>()
        };
        let total: f64 = (-10_000..=10_000).map(|i| f(i as f64 * h).exp() * h).sum();
        assert!((total.ln() - conjugate_log_evidence(&y)).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(matches!(
            builtin("nope", None, RngKey::new(0)),
            Err(CliError::Config(_))
        ));
        assert!(builtin("logistic_synth", Some(3), RngKey::new(0)).is_err());
        assert!(builtin("banana", Some(1), RngKey::new(0)).is_err());
        assert!(builtin("std_normal", Some(0), RngKey::new(0)).is_err());
    }
}
