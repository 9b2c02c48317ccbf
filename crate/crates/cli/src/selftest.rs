//! Quick invariant suite behind `bayeskit selftest`.

use std::collections::HashSet;

use bayeskit::integrator::{trajectory, IntegratorState};
use bayeskit::mcmc::{Ghmc, Hmc, Kernel, Mala, Nuts, RandomWalk};
use bayeskit::smc::{normalize, resample, run_tempered_smc, ResampleMethod, SmcOptions};
use bayeskit::target::gradient_error;
use bayeskit::{LogDensity, Metric, RngKey};

use crate::commands::ReferenceTempering;
use crate::targets::{banana, builtin, conjugate_gauss, std_normal, TARGET_NAMES};

pub struct Check {
    pub name: &'static str,
    pub outcome: Result<(), String>,
}

fn gradient_audit(key: RngKey) -> Result<(), String> {
    for name in TARGET_NAMES {
        let t = builtin(name, None, key).map_err(|e| e.to_string())?;
        for i in 0..100 {
            let x: Vec<f64> = key
                .child(i)
                .uniforms(t.dim())
                .iter()
                .map(|u| 4.0 * u - 2.0)
                .collect();
            let err = gradient_error(&t.density, &x).map_err(|e| e.to_string())?;
            if err >= 1e-6 {
                return Err(format!("{name}: gradient error {err:e} at {x:?}"));
            }
        }
    }
    Ok(())
}

fn pure<K: Kernel>(
    name: &str,
    kernel: K,
    target: &dyn LogDensity,
    key: RngKey,
) -> Result<(), String> {
    let state = kernel
        .init(&[0.3, -0.7, 1.1], target)
        .map_err(|e| e.to_string())?;
    let (a, ia) = kernel.step(key, &state, target);
    let (b, ib) = kernel.step(key, &state, target);
    let bits = |p: &[f64]| p.iter().map(|v| v.to_bits()).collect::<Vec<_>>();
    use bayeskit::HasPosition;
    if bits(a.position()) != bits(b.position()) || ia != ib {
        return Err(format!("{name} is not pure"));
    }
    Ok(())
}

fn kernel_purity(key: RngKey) -> Result<(), String> {
    let t = std_normal(3);
    let target = &*t.density;
    let m = Metric::identity(3);
    let err = |e: bayeskit::Error| e.to_string();
    pure("rwm", RandomWalk::isotropic(0.5).map_err(err)?, target, key)?;
    pure("mala", Mala::new(0.2).map_err(err)?, target, key)?;
    pure(
        "hmc",
        Hmc::new(0.2, 8, m.clone()).map_err(err)?,
        target,
        key,
    )?;
    pure("nuts", Nuts::new(0.2, m.clone()).map_err(err)?, target, key)?;
    pure("ghmc", Ghmc::new(0.2, 0.9, m).map_err(err)?, target, key)
}

fn leapfrog_reversibility(key: RngKey) -> Result<(), String> {
    let t = banana(2);
    let metric = Metric::identity(2);
    for i in 0..20 {
        let k = key.child(i);
        let start = IntegratorState::new(
            k.child(0).normal_vector(2),
            k.child(1).normal_vector(2),
            &*t.density,
        )
        .map_err(|e| e.to_string())?;
        let forward = trajectory(&start, 0.01, &metric, &*t.density, 25).flip_momentum();
        let back = trajectory(&forward, 0.01, &metric, &*t.density, 25).flip_momentum();
        let err = start
            .position
            .iter()
            .zip(&back.position)
            .chain(start.momentum.iter().zip(&back.momentum))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if err >= 1e-10 {
            return Err(format!("round trip error {err:e}"));
        }
    }
    Ok(())
}

fn resampler_bounds(key: RngKey) -> Result<(), String> {
    for i in 0..200 {
        let k = key.child(i);
        let lw = k
            .child(0)
            .normal_vector(7)
            .iter()
            .map(|z| 2.0 * z)
            .collect::<Vec<_>>();
        let w = normalize(&lw).map_err(|e| e.to_string())?;
        let n = 50;
        for method in [ResampleMethod::Systematic, ResampleMethod::Residual] {
            let idx = resample(k.child(1), &lw, n, method).map_err(|e| e.to_string())?;
            for (j, wj) in w.iter().enumerate() {
                let c = idx.iter().filter(|&&a| a == j).count() as f64;
                let expected = n as f64 * wj;
                let ok = match method {
                    ResampleMethod::Systematic => {
                        c >= expected.floor() - 1e-9 && c <= expected.ceil() + 1e-9
                    }
                    _ => c >= expected.floor() - 1e-9,
                };
                if !ok {
                    return Err(format!("{method:?}: count {c} for expected {expected}"));
                }
            }
        }
    }
    Ok(())
}

fn key_distinctness(key: RngKey) -> Result<(), String> {
    let keys: HashSet<_> = key.split(10_000).into_iter().collect();
    if keys.len() != 10_000 {
        return Err("split keys collide".into());
    }
    Ok(())
}

fn conjugate_smc(key: RngKey) -> Result<(), String> {
    let t = conjugate_gauss(1, key.child(0));
    let tempered = ReferenceTempering {
        density: &*t.density,
        scale: 1.0,
    };
    let kernel = RandomWalk::isotropic(0.5).map_err(|e| e.to_string())?;
    let out = run_tempered_smc(
        key.child(1),
        &tempered,
        |k| vec![k.normal()],
        1000,
        &kernel,
        &SmcOptions::default(),
    )
    .map_err(|e| e.to_string())?;
    let truth = t.log_normalizer.unwrap_or(0.0);
    if (out.log_z - truth).abs() > 0.25 {
        return Err(format!("log_z {} vs analytic {truth}", out.log_z));
    }
    if *out.ladder.last().unwrap() != 1.0 || !out.ladder.windows(2).all(|w| w[0] < w[1]) {
        return Err("ladder is not strictly increasing to 1".into());
    }
    Ok(())
}

pub fn run_selftest(seed: u64) -> Vec<Check> {
    let key = RngKey::new(seed);
    vec![
        Check {
            name: "target gradients",
            outcome: gradient_audit(key.child(0)),
        },
        Check {
            name: "kernel purity",
            outcome: kernel_purity(key.child(1)),
        },
        Check {
            name: "leapfrog reversibility",
            outcome: leapfrog_reversibility(key.child(2)),
        },
        Check {
            name: "resampler count bounds",
            outcome: resampler_bounds(key.child(3)),
        },
        Check {
            name: "key distinctness",
            outcome: key_distinctness(key.child(4)),
        },
        Check {
            name: "conjugate smc evidence",
            outcome: conjugate_smc(key.child(5)),
        },
    ]
}
