use bayeskit::adaptation::{
    dual_averaging_warmup, window_adaptation, DualAveragingParams, KernelFamily, WindowOptions,
};
use bayeskit::diagnostics::{effective_sample_size, ChainStack};
use bayeskit::mcmc::{Kernel, Mala, Nuts, RandomWalk};
use bayeskit::{HasPosition, LogDensity, Metric, RngKey, Target};

fn aniso(variances: Vec<f64>) -> impl LogDensity {
    let v2 = variances.clone();
    Target::new(
        variances.len(),
        move |x: &[f64]| {
            -0.5 * x
                .iter()
                .zip(&variances)
                .map(|(x, v)| x * x / v)
                .sum::<f64>()
        },
        move |x: &[f64]| x.iter().zip(&v2).map(|(x, v)| -x / v).collect(),
    )
}

fn variances(dim: usize) -> Vec<f64> {
    (0..dim)
        .map(|i| 100f64.powf(i as f64 / (dim - 1) as f64))
        .collect()
}

/// Post-warmup NUTS draws, one chain per key.
fn nuts_draws(
    kernel: &Nuts,
    target: &dyn LogDensity,
    start: &[f64],
    key: RngKey,
    n: usize,
) -> Vec<Vec<f64>> {
    let mut state = kernel.init(start, target).unwrap();
    (0..n as u64)
        .map(|i| {
            state = kernel.step(key.child(i), &state, target).0;
            state.position().to_vec()
        })
        .collect()
}

#[test]
fn adapted_metric_improves_the_worst_ess_threefold() {
    let vars = variances(5);
    let target = aniso(vars);
    let (mut adapted, mut identity) = (Vec::new(), Vec::new());
    for c in 0..4u64 {
        let (k_warm, k_a, k_b) = RngKey::new(31).child(c).split3();
        let tuned = window_adaptation(
            k_warm,
            &target,
            &[1.0; 5],
            1000,
            KernelFamily::Nuts { max_depth: 10 },
            &WindowOptions::default(),
        )
        .unwrap();
        let kernel = Nuts::new(tuned.step_size, tuned.metric.clone()).unwrap();
        adapted.push(nuts_draws(
            &kernel,
            &target,
            &tuned.state.position,
            k_a,
            1000,
        ));

        // Identity metric with the step size tuned for it over the same warmup length.
        let base = Nuts::new(1.0, Metric::identity(5)).unwrap();
        let state = base.init(&[1.0; 5], &target).unwrap();
        let (tuned_base, state, _) = dual_averaging_warmup(
            k_warm,
            &base,
            &target,
            state,
            1000,
            &DualAveragingParams::default(),
        );
        identity.push(nuts_draws(&tuned_base, &target, &state.position, k_b, 1000));
    }
    let worst = |chains: Vec<Vec<Vec<f64>>>| {
        effective_sample_size(&ChainStack::new(chains).unwrap())
            .unwrap()
            .into_iter()
            .fold(f64::INFINITY, f64::min)
    };
    let (a, b) = (worst(adapted), worst(identity));
    assert!(a >= 3.0 * b, "adapted min ESS {a}, identity min ESS {b}");
}

#[test]
fn hmc_window_adaptation_learns_the_scales() {
    let vars = variances(4);
    let target = aniso(vars.clone());
    let tuned = window_adaptation(
        RngKey::new(32),
        &target,
        &[0.0; 4],
        1000,
        KernelFamily::Hmc {
            num_integration_steps: 16,
        },
        &WindowOptions::default(),
    )
    .unwrap();
    for (m, v) in tuned.metric.inverse_mass_diagonal().iter().zip(&vars) {
        assert!((0.5..2.0).contains(&(m / v)), "{m} vs {v}");
    }
    assert_eq!(tuned.infos.len(), 1000);
}

#[test]
fn tuned_values_are_pure() {
    let target = aniso(variances(3));
    let run = || {
        let t = window_adaptation(
            RngKey::new(33),
            &target,
            &[0.3; 3],
            300,
            KernelFamily::Nuts { max_depth: 8 },
            &WindowOptions::default(),
        )
        .unwrap();
        (t.step_size.to_bits(), t.metric, t.state)
    };
    assert_eq!(run(), run());
}

#[test]
fn step_size_warmup_reaches_the_requested_acceptance() {
    let target = aniso(vec![1.0; 10]);
    for (target_accept, kernel_accept) in [(0.234, "rwm"), (0.574, "mala")] {
        let params = DualAveragingParams::with_target(target_accept);
        let start = [0.0; 10];
        let mean = |infos: &[bayeskit::mcmc::McmcInfo]| {
            infos.iter().map(|i| i.p_accept).sum::<f64>() / infos.len() as f64
        };
        let observed = if kernel_accept == "rwm" {
            let k = RandomWalk::isotropic(1.0).unwrap();
            let s = k.init(&start, &target).unwrap();
            let (k, s, _) = dual_averaging_warmup(RngKey::new(34), &k, &target, s, 2000, &params);
            let mut state = s;
            let infos: Vec<_> = (0..5000u64)
                .map(|i| {
                    let (n, info) = k.step(RngKey::new(35).child(i), &state, &target);
                    state = n;
                    info
                })
                .collect();
            mean(&infos)
        } else {
            let k = Mala::new(0.1).unwrap();
            let s = k.init(&start, &target).unwrap();
            let (k, s, _) = dual_averaging_warmup(RngKey::new(36), &k, &target, s, 2000, &params);
            let mut state = s;
            let infos: Vec<_> = (0..5000u64)
                .map(|i| {
                    let (n, info) = k.step(RngKey::new(37).child(i), &state, &target);
                    state = n;
                    info
                })
                .collect();
            mean(&infos)
        };
        assert!(
            (observed - target_accept).abs() < 0.1,
            "{kernel_accept}: {observed} vs {target_accept}"
        );
    }
}

#[test]
fn nuts_warmup_hits_the_acceptance_target_across_seeds() {
    let target = aniso(vec![1.0; 10]);
    for seed in 40..44u64 {
        let tuned = window_adaptation(
            RngKey::new(seed),
            &target,
            &[0.5; 10],
            1000,
            KernelFamily::Nuts { max_depth: 10 },
            &WindowOptions::default(),
        )
        .unwrap();
        let kernel = Nuts::new(tuned.step_size, tuned.metric.clone()).unwrap();
        let mut state = tuned.state.clone();
        let mut total = 0.0;
        for i in 0..2000u64 {
            let (next, info) = kernel.step(RngKey::new(seed).child(i + 1_000_000), &state, &target);
            state = next;
            total += info.p_accept;
        }
        let mean = total / 2000.0;
        assert!((mean - 0.8).abs() < 0.05, "seed {seed}: {mean}");
    }
}
