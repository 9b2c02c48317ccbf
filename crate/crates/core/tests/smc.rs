use bayeskit::mcmc::{Hmc, Mala};
use bayeskit::smc::{
    adaptive_next_lambda, ess, resample, reweight, run_tempered_smc, ParticleEnsemble,
    PriorLikelihood, ResampleMethod, SmcOptions,
};
use bayeskit::{Metric, RngKey, Target};
use proptest::prelude::*;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// theta ~ N(0, 1)^d and y_jk ~ N(theta_j, 1) for k < per_dim.
fn conjugate(dim: usize, per_dim: usize, seed: u64) -> (Vec<Vec<f64>>, f64) {
    let key = RngKey::new(seed);
    let y: Vec<Vec<f64>> = (0..dim)
        .map(|j| {
            key.child(j as u64)
                .normal_vector(per_dim)
                .iter()
                .map(|z| 0.5 + 1.5 * z)
                .collect()
        })
        .collect();
    let n = per_dim as f64;
    let log_z = y
        .iter()
        .map(|c| {
            let (s, sq) = (c.iter().sum::<f64>(), c.iter().map(|v| v * v).sum::<f64>());
            -0.5 * n * LN_2PI - 0.5 * (1.0 + n).ln() - 0.5 * (sq - s * s / (1.0 + n))
        })
        .sum();
    (y, log_z)
}

fn model(
    y: Vec<Vec<f64>>,
) -> PriorLikelihood<impl bayeskit::LogDensity, impl bayeskit::LogDensity> {
    let dim = y.len();
    let prior = Target::new(
        dim,
        move |x: &[f64]| -0.5 * x.iter().map(|v| v * v + LN_2PI).sum::<f64>(),
        |x: &[f64]| x.iter().map(|v| -v).collect(),
    );
    let y2 = y.clone();
    let like = Target::new(
        dim,
        move |x: &[f64]| {
            y.iter()
                .zip(x)
                .map(|(c, t)| {
                    c.iter()
                        .map(|v| -0.5 * ((v - t).powi(2) + LN_2PI))
                        .sum::<f64>()
                })
                .sum()
        },
        move |x: &[f64]| {
            y2.iter()
                .zip(x)
                .map(|(c, t)| c.iter().map(|v| v - t).sum())
                .collect()
        },
    );
    PriorLikelihood::new(prior, like).unwrap()
}

#[test]
fn evidence_and_posterior_match_the_conjugate_answer() {
    let (y, exact) = conjugate(3, 8, 11);
    let post: Vec<(f64, f64)> = y
        .iter()
        .map(|c| (c.iter().sum::<f64>() / 9.0, 1.0 / 9.0))
        .collect();
    let target = model(y);
    let kernel = Mala::new(0.25).unwrap();
    let opts = SmcOptions::default();
    let runs: Vec<_> = (0..10u64)
        .map(|r| {
            run_tempered_smc(
                RngKey::new(12).child(r),
                &target,
                |k| k.normal_vector(3),
                500,
                &kernel,
                &opts,
            )
            .unwrap()
        })
        .collect();
    let estimates: Vec<f64> = runs.iter().map(|o| o.log_z).collect();
    let n = estimates.len() as f64;
    let mean = estimates.iter().sum::<f64>() / n;
    let se = (estimates.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt();
    assert!(
        (mean - exact).abs() < 3.0 * se.max(0.01),
        "{mean} +- {se} vs {exact}"
    );

    let out = &runs[0];
    let m = out.ensemble.mean().unwrap();
    for (j, (pm, pv)) in post.iter().enumerate() {
        let v = out
            .ensemble
            .particles
            .iter()
            .map(|p| (p[j] - m[j]).powi(2))
            .sum::<f64>()
            / 500.0;
        assert!(
            (m[j] - pm).abs() < 4.0 * (pv / 500.0f64).sqrt() + 0.02,
            "mean {j}: {} vs {pm}",
            m[j]
        );
        assert!((v / pv - 1.0).abs() < 0.3, "variance {j}: {v} vs {pv}");
    }
}

#[test]
fn runs_are_reproducible_and_ladders_increase() {
    let (y, _) = conjugate(2, 20, 13);
    let target = model(y);
    let kernel = Hmc::new(0.1, 5, Metric::identity(2)).unwrap();
    let opts = SmcOptions {
        resample_method: ResampleMethod::Residual,
        ..SmcOptions::default()
    };
    let run = || {
        run_tempered_smc(
            RngKey::new(14),
            &target,
            |k| k.normal_vector(2),
            300,
            &kernel,
            &opts,
        )
        .unwrap()
    };
    let (a, b) = (run(), run());
    assert_eq!(a, b);
    assert_eq!(a.ladder[0], 0.0);
    assert_eq!(*a.ladder.last().unwrap(), 1.0);
    assert!(a.ladder.windows(2).all(|w| w[1] > w[0]));
    assert_eq!(a.infos.len() + 1, a.ladder.len());
    for info in &a.infos[..a.infos.len() - 1] {
        assert!((info.ess - 150.0).abs() < 1.0, "{}", info.ess);
    }
}

fn loglik(seed: u64, n: usize, scale: f64) -> Vec<f64> {
    RngKey::new(seed)
        .normal_vector(n)
        .iter()
        .map(|z| scale * z - scale * scale)
        .collect()
}

proptest! {
    #[test]
    fn next_lambda_hits_the_ess_target(seed in any::<u64>(), n in 10usize..200, scale in 0.1f64..30.0, ratio in 0.1f64..0.9, start in 0.0f64..0.9) {
        let ll = loglik(seed, n, scale);
        // Freshly resampled: equal weights at the current temperature.
        let ens = ParticleEnsemble { lambda: start, ..ParticleEnsemble::new(vec![vec![0.0]; n]).unwrap() };
        let next = adaptive_next_lambda(&ens, &ll, ratio).unwrap();
        prop_assert!(next > start && next <= 1.0);
        let after = ess(&reweight(&ens, &ll, next).unwrap().log_weights).unwrap();
        if next < 1.0 {
            prop_assert!(after >= ratio * n as f64 - 1e-9);
            let beyond = ess(&reweight(&ens, &ll, (next + 2e-6).min(1.0)).unwrap().log_weights).unwrap();
            prop_assert!(beyond < ratio * n as f64 + 1e-6 * n as f64 * scale, "{beyond}");
        }
    }

    #[test]
    fn reweighting_composes(seed in any::<u64>(), n in 2usize..100, a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let (a, b) = (a.min(b), a.max(b));
        let ll = loglik(seed, n, 3.0);
        let base = ParticleEnsemble::new(vec![vec![0.0]; n]).unwrap();
        let two = reweight(&reweight(&base, &ll, a).unwrap(), &ll, b).unwrap();
        let one = reweight(&base, &ll, b).unwrap();
        prop_assert!((two.log_z - one.log_z).abs() < 1e-9 * (1.0 + one.log_z.abs()));
        for (x, y) in two.log_weights.iter().zip(&one.log_weights) {
            prop_assert!((x - y).abs() < 1e-9 * (1.0 + y.abs()));
        }
    }

    #[test]
    fn resampled_indices_are_valid(seed in any::<u64>(), n in 1usize..50, out in 1usize..200, m in 0usize..4) {
        let method = [ResampleMethod::Multinomial, ResampleMethod::Systematic, ResampleMethod::Stratified, ResampleMethod::Residual][m];
        let lw = loglik(seed, n, 2.0);
        let idx = resample(RngKey::new(seed ^ 1), &lw, out, method).unwrap();
        prop_assert_eq!(idx.len(), out);
        prop_assert!(idx.iter().all(|&i| i < n));
    }
}
