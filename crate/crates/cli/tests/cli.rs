use std::path::Path;
use std::process::{Command, Output};

use bayeskit_cli::commands::{data_key, ELBO_FILE, SAMPLES_FILE, SUMMARY_FILE};
use bayeskit_cli::targets::{aniso_variances, conjugate_observations};
use serde_json::Value;

fn bayeskit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bayeskit"))
        .args(args)
        .output()
        .unwrap()
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    let mut all: Vec<&str> = args.to_vec();
    let dir = dir.to_str().unwrap();
    all.extend(["--output-dir", dir]);
    bayeskit(&all)
}

fn summary(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join(SUMMARY_FILE)).unwrap()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn nuts_on_the_standard_normal_recovers_the_mean() {
    let tmp = tempfile::tempdir().unwrap();
    let args = [
        "run",
        "--algorithm",
        "nuts",
        "--target",
        "std_normal",
        "--dim",
        "10",
        "--seed",
        "42",
        "--num-warmup",
        "1000",
        "--num-samples",
        "2000",
    ];
    let out = run_in(tmp.path(), &args);
    assert!(out.status.success(), "{}", stderr(&out));
    let s = summary(tmp.path());
    let per_dim = s["per_dim"].as_array().unwrap();
    assert_eq!(per_dim.len(), 10);
    for d in per_dim {
        assert!(d["mean"].as_f64().unwrap().abs() < 0.05, "{d}");
        assert!((d["std"].as_f64().unwrap() - 1.0).abs() < 0.05, "{d}");
        assert!((d["rhat"].as_f64().unwrap() - 1.0).abs() < 0.01, "{d}");
    }
    assert_eq!(s["divergences"], 0);
    assert_eq!(s["config"]["seed"], 42);
    assert!(s["metadata"]["runtime_seconds"].as_f64().unwrap() >= 0.0);
}

#[test]
fn sample_file_layout() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_in(
        tmp.path(),
        &[
            "run",
            "--algorithm",
            "mala",
            "--target",
            "banana",
            "--seed",
            "3",
            "--num-warmup",
            "100",
            "--num-samples",
            "50",
            "--num-chains",
            "3",
        ],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let text = std::fs::read_to_string(tmp.path().join(SAMPLES_FILE)).unwrap();
    assert!(!text.contains('\r'));
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("chain,draw,dim_0,dim_1"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 150);
    for (i, row) in rows.iter().enumerate() {
        assert_eq!(row[0].parse::<usize>().unwrap(), i / 50);
        assert_eq!(row[1].parse::<usize>().unwrap(), i % 50);
        for v in &row[2..] {
            let x: f64 = v.parse().unwrap();
            // Seventeen significant digits round-trip exactly.
            assert_eq!(format!("{x:.16e}"), *v);
        }
    }
}

#[test]
fn repeated_runs_are_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let args = [
        "run",
        "--algorithm",
        "ghmc",
        "--target",
        "funnel",
        "--dim",
        "3",
        "--seed",
        "9",
        "--num-warmup",
        "200",
        "--num-samples",
        "200",
    ];
    assert!(run_in(a.path(), &args).status.success());
    let mut threaded = args.to_vec();
    threaded.extend(["--threads", "3"]);
    assert!(run_in(b.path(), &threaded).status.success());
    let read = |d: &Path| std::fs::read(d.join(SAMPLES_FILE)).unwrap();
    assert_eq!(read(a.path()), read(b.path()));
}

#[test]
fn unknown_algorithm_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_in(tmp.path(), &["run", "--algorithm", "gibbs", "--seed", "1"]);
    assert_eq!(out.status.code(), Some(2));
    let msg = stderr(&out);
    for name in ["rwm", "mala", "hmc", "nuts", "ghmc"] {
        assert!(msg.contains(name), "{msg}");
    }
}

#[test]
fn missing_seed_and_bad_values_are_config_errors() {
    let tmp = tempfile::tempdir().unwrap();
    for args in [
        &["run"][..],
        &["run", "--seed", "1", "--target", "nope"],
        &["run", "--seed", "1", "--num-samples", "0"],
        &["run-vi", "--seed", "1", "--optimizer", "lbfgs"],
        &["run-smc", "--seed", "1", "--kernel", "nuts"],
    ] {
        let out = run_in(tmp.path(), args);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", stderr(&out));
        assert!(stderr(&out).starts_with("error:"), "{args:?}");
    }
}

#[test]
fn numerical_failure_exits_with_three() {
    // An infinite learning rate drives the variational scale out of range.
    let tmp = tempfile::tempdir().unwrap();
    let out = run_in(
        tmp.path(),
        &[
            "run-vi",
            "--seed",
            "1",
            "--target",
            "std_normal",
            "--optimizer",
            "sgd",
            "--learning-rate",
            "1e300",
            "--num-steps",
            "10",
        ],
    );
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
}

#[test]
fn config_file_with_flag_override() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.cfg");
    std::fs::write(&cfg, "# warmup settings\nseed = 5\nalgorithm = hmc\nnum_warmup = 100\nnum-samples = 40\nnum_chains = 2\ntarget = banana\n").unwrap();
    let out_dir = tmp.path().join("out");
    let out = run_in(
        &out_dir,
        &[
            "run",
            "--config",
            cfg.to_str().unwrap(),
            "--num-samples",
            "30",
            "--algorithm",
            "rwm",
        ],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let s = summary(&out_dir);
    assert_eq!(s["config"]["algorithm"], "rwm");
    assert_eq!(s["config"]["num_samples"], 30);
    assert_eq!(s["config"]["num_warmup"], 100);
    assert_eq!(s["config"]["seed"], 5);

    std::fs::write(&cfg, "seed = 5\nnot_a_key = 1\n").unwrap();
    let out = run_in(&out_dir, &["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("not_a_key"));
}

/// Evidence of `y_jk ~ N(theta_j, 1)`, `theta_j ~ N(0, 1)`, by completing
/// the square coordinate by coordinate; `y[j]` holds coordinate `j`'s data.
fn exact_evidence(y: &[Vec<f64>]) -> f64 {
    y.iter()
        .map(|col| {
            let n = col.len() as f64;
            let sum: f64 = col.iter().sum();
            let sq: f64 = col.iter().map(|v| v * v).sum();
            -0.5 * n * (2.0 * std::f64::consts::PI).ln()
                - 0.5 * (1.0 + n).ln()
                - 0.5 * (sq - sum * sum / (1.0 + n))
        })
        .sum()
}

#[test]
fn smc_on_the_conjugate_target_matches_the_evidence() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_in(
        tmp.path(),
        &[
            "run-smc",
            "--target",
            "conjugate_gauss",
            "--dim",
            "2",
            "--seed",
            "21",
        ],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let s = summary(tmp.path());
    let y = conjugate_observations(2, data_key(21));
    let exact = exact_evidence(&y);
    let log_z = s["smc"]["log_z"].as_f64().unwrap();
    assert!((log_z - exact).abs() < 0.15, "{log_z} vs {exact}");

    let ladder: Vec<f64> = s["smc"]["ladder"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    assert_eq!(ladder[0], 0.0);
    assert_eq!(*ladder.last().unwrap(), 1.0);
    assert!(ladder.windows(2).all(|w| w[1] > w[0]));

    let text = std::fs::read_to_string(tmp.path().join(SAMPLES_FILE)).unwrap();
    assert_eq!(text.lines().count(), 1 + 1000);
}

#[test]
fn vi_on_the_anisotropic_gaussian_recovers_the_scales() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_in(
        tmp.path(),
        &["run-vi", "--target", "aniso_gauss", "--seed", "42"],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let s = summary(tmp.path());
    let sigma: Vec<f64> = s["vi"]["sigma"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    for (got, var) in sigma.iter().zip(aniso_variances(10)) {
        assert!(
            (got / var.sqrt() - 1.0).abs() < 0.05,
            "{got} vs {}",
            var.sqrt()
        );
    }
    assert!(s["vi"]["final_elbo"].as_f64().unwrap().is_finite());

    let trace = std::fs::read_to_string(tmp.path().join(ELBO_FILE)).unwrap();
    let mut lines = trace.lines();
    assert_eq!(lines.next(), Some("step,elbo"));
    assert_eq!(lines.count(), 5000);
}

#[test]
fn targets_list_names_every_target() {
    let out = bayeskit(&["targets", "list"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in [
        "std_normal",
        "aniso_gauss",
        "banana",
        "funnel",
        "logistic_synth",
    ] {
        assert!(text.contains(name), "{text}");
    }
}

#[test]
fn selftest_passes() {
    let out = bayeskit(&["selftest", "--seed", "4"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(out.status.success(), "{text}");
    assert!(text.lines().all(|l| l.starts_with("PASS")), "{text}");
}
