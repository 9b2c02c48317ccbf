use bayeskit::algorithm::sample_chain;
use bayeskit::integrator::{trajectory, IntegratorState};
use bayeskit::mcmc::{Ghmc, Hmc, Kernel, Mala, Nuts, RandomWalk, Sampler};
use bayeskit::{HasPosition, LogDensity, Metric, RngKey, Target};
use nalgebra::DMatrix;
use proptest::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};

fn gaussian(dim: usize) -> impl LogDensity {
    Target::new(
        dim,
        |x: &[f64]| -0.5 * x.iter().map(|v| v * v).sum::<f64>(),
        |x: &[f64]| x.iter().map(|v| -v).collect(),
    )
}

/// Large-sample KS p-value against N(0, 1).
fn ks_pvalue(sample: &[f64]) -> f64 {
    let normal = Normal::new(0.0, 1.0).unwrap();
    let mut x = sample.to_vec();
    x.sort_by(f64::total_cmp);
    let n = x.len() as f64;
    let d = x.iter().enumerate().fold(0.0f64, |d, (i, v)| {
        let f = normal.cdf(*v);
        d.max(f - i as f64 / n).max((i + 1) as f64 / n - f)
    });
    let lambda = (n.sqrt() + 0.12 + 0.11 / n.sqrt()) * d;
    let p: f64 = (1..=100)
        .map(|k| {
            let k = k as f64;
            let sign = if k as u64 % 2 == 1 { 2.0 } else { -2.0 };
            sign * (-2.0 * k * k * lambda * lambda).exp()
        })
        .sum();
    p.clamp(0.0, 1.0)
}

fn every_fifth<K: Kernel>(kernel: K, seed: u64) -> Vec<f64> {
    let target = gaussian(1);
    let sampler = Sampler::new(kernel, &target);
    let init = sampler.kernel.init(&[0.0], &target).unwrap();
    let trace = sample_chain(RngKey::new(seed), &sampler, init, 1000 + 5 * 20_000).unwrap();
    trace.positions[1000..]
        .iter()
        .skip(4)
        .step_by(5)
        .map(|p| p[0])
        .collect()
}

#[test]
fn samplers_pass_ks_on_thinned_draws() {
    let m = || Metric::identity(1);
    let results = [
        ("rwm", every_fifth(RandomWalk::isotropic(2.4).unwrap(), 1)),
        ("mala", every_fifth(Mala::new(1.4).unwrap(), 2)),
        ("hmc", every_fifth(Hmc::new(0.3, 5, m()).unwrap(), 3)),
        ("ghmc", every_fifth(Ghmc::new(0.9, 0.3, m()).unwrap(), 4)),
        ("nuts", every_fifth(Nuts::new(0.8, m()).unwrap(), 5)),
    ];
    for (name, xs) in results {
        assert_eq!(xs.len(), 20_000);
        let p = ks_pvalue(&xs);
        assert!(p >= 0.01, "{name}: p = {p}");
    }
}

#[test]
fn chains_from_split_keys_are_uncorrelated() {
    let target = gaussian(1);
    let kernel = Mala::new(1.0).unwrap();
    let keys = RngKey::new(17).split(4);
    let traces: Vec<Vec<f64>> = keys
        .iter()
        .map(|k| {
            let init = kernel.init(&[0.0], &target).unwrap();
            let sampler = Sampler::new(kernel, &target);
            sample_chain(*k, &sampler, init, 10_000)
                .unwrap()
                .positions
                .iter()
                .map(|p| p[0])
                .collect()
        })
        .collect();
    let corr = |a: &[f64], b: &[f64]| {
        let n = a.len() as f64;
        let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
        let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
        let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
        let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
        cov / (va * vb).sqrt()
    };
    for i in 0..4 {
        for j in i + 1..4 {
            let c = corr(&traces[i], &traces[j]);
            assert!(c.abs() < 0.05, "chains {i},{j}: {c}");
        }
    }
}

#[test]
fn gradient_kernels_handle_a_dense_metric() {
    // Correlated Gaussian with covariance S; the matching metric uses M^{-1} = S.
    let s = DMatrix::from_row_slice(2, 2, &[2.0, 1.2, 1.2, 1.0]);
    let p = s.clone().try_inverse().unwrap();
    let (p1, p2) = (p.clone(), p.clone());
    let target = Target::new(
        2,
        move |x: &[f64]| {
            let v = nalgebra::DVector::from_column_slice(x);
            -0.5 * v.dot(&(&p1 * &v))
        },
        move |x: &[f64]| {
            let v = nalgebra::DVector::from_column_slice(x);
            (-(&p2 * v)).iter().copied().collect()
        },
    );
    let metric = Metric::dense(s.clone()).unwrap();
    let kernel = Nuts::new(0.7, metric).unwrap();
    let sampler = Sampler::new(kernel, &target);
    let init = sampler.kernel.init(&[0.0, 0.0], &target).unwrap();
    let trace = sample_chain(RngKey::new(8), &sampler, init, 20_000).unwrap();
    let n = trace.positions.len() as f64;
    let mean: Vec<f64> = (0..2)
        .map(|j| trace.positions.iter().map(|x| x[j]).sum::<f64>() / n)
        .collect();
    for i in 0..2 {
        assert!(mean[i].abs() < 0.05, "{mean:?}");
        for j in 0..2 {
            let c = trace
                .positions
                .iter()
                .map(|x| (x[i] - mean[i]) * (x[j] - mean[j]))
                .sum::<f64>()
                / n;
            assert!((c - s[(i, j)]).abs() < 0.1, "cov[{i}][{j}] = {c}");
        }
    }
    assert!(trace.infos.iter().all(|i| !i.is_divergent));
}

#[test]
fn positions_are_copied_from_the_returned_states() {
    let target = gaussian(3);
    let kernel = Hmc::new(0.2, 4, Metric::identity(3)).unwrap();
    let sampler = Sampler::new(kernel, &target);
    let init = sampler.kernel.init(&[1.0, 0.0, -1.0], &target).unwrap();
    let trace = sample_chain(RngKey::new(3), &sampler, init.clone(), 20).unwrap();
    let mut state = init;
    for (i, pos) in trace.positions.iter().enumerate() {
        state = sampler
            .kernel
            .step(RngKey::new(3).child(i as u64), &state, &target)
            .0;
        assert_eq!(state.position(), pos.as_slice());
    }
    assert_eq!(trace.final_state, state);
}

/// Gaussian plus a quartic coupling, a generic smooth non-quadratic target.
fn coupled(dim: usize, scale: Vec<f64>) -> impl LogDensity {
    let s2 = scale.clone();
    Target::new(
        dim,
        move |x: &[f64]| {
            let r2: f64 = x.iter().zip(&scale).map(|(v, s)| v * v / s).sum();
            -0.5 * r2 - 0.05 * r2 * r2
        },
        move |x: &[f64]| {
            let r2: f64 = x.iter().zip(&s2).map(|(v, s)| v * v / s).sum();
            x.iter()
                .zip(&s2)
                .map(|(v, s)| -(v / s) * (1.0 + 0.2 * r2))
                .collect()
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn leapfrog_reverses_under_random_metrics(
        seed in any::<u64>(),
        dim in 1usize..6,
        eps in 0.01f64..0.3,
        n in 1usize..60,
        dense in any::<bool>(),
    ) {
        let key = RngKey::new(seed);
        let scale: Vec<f64> = key.child(0).uniforms(dim).iter().map(|u| 0.5 + 2.0 * u).collect();
        let target = coupled(dim, scale);
        let metric = if dense {
            let a = DMatrix::from_vec(dim, dim, key.child(1).normal_vector(dim * dim));
            Metric::dense((&a * a.transpose() / dim as f64 + DMatrix::identity(dim, dim)) / 2.0).unwrap()
        } else {
            Metric::diagonal(key.child(1).uniforms(dim).iter().map(|u| 0.2 + 3.0 * u).collect()).unwrap()
        };
        let start = IntegratorState::new(key.child(2).normal_vector(dim), key.child(3).normal_vector(dim), &target).unwrap();
        let forward = trajectory(&start, eps, &metric, &target, n).flip_momentum();
        // Unstable trajectories amplify rounding chaotically; exact reversal
        // is only meaningful on stable ones.
        prop_assume!((forward.energy(&metric) - start.energy(&metric)).abs() < 10.0);
        let back = trajectory(&forward, eps, &metric, &target, n).flip_momentum();
        for (a, b) in start.position.iter().chain(&start.momentum).zip(back.position.iter().chain(&back.momentum)) {
            prop_assert!((a - b).abs() < 1e-9 * (1.0 + a.abs()), "{a} vs {b}");
        }
    }

    #[test]
    fn nuts_respects_max_depth(seed in any::<u64>(), max_depth in 0usize..6) {
        let target = gaussian(2);
        let kernel = Nuts::new(0.05, Metric::identity(2)).unwrap().with_max_depth(max_depth);
        let state = kernel.init(&[0.3, -0.2], &target).unwrap();
        let (_, info) = kernel.step(RngKey::new(seed), &state, &target);
        prop_assert!(info.tree_depth <= max_depth);
        prop_assert!(info.num_integration_steps <= (1usize << max_depth).max(1));
    }
}
