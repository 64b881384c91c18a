use std::fs;

use fedadmm::sim::experiment::{CONFIG_FILE, ROUNDS_FILE, SUMMARY_FILE};
use fedadmm::sim::rng::{stream, Purpose};
use fedadmm::sim::{
    draw_local_epochs, load_run, read_rounds, rounds_to_target, run_experiment, sample_clients, simulate,
    ExperimentConfig, SamplingScheme, World,
};
use fedadmm::Error;

fn config(pairs: &[(&str, &str)]) -> ExperimentConfig {
    ExperimentConfig::from_pairs(pairs.iter().map(|(k, v)| (k.to_string(), v.to_string()))).unwrap()
}

fn small(extra: &[(&str, &str)]) -> ExperimentConfig {
    let mut pairs = vec![("clients", "10"), ("participation", "0.3"), ("data.per_class", "40"), ("data.dim", "8"), ("rounds", "6")];
    pairs.extend_from_slice(extra);
    config(&pairs)
}

#[test]
fn uniform_sampling_draws_exact_count() {
    let mut rng = stream(1, Purpose::Sampling, 1, 0);
    let ids = sample_clients(100, 0.1, SamplingScheme::Uniform, &mut rng);
    assert_eq!(ids.len(), 10);
    assert!(ids.windows(2).all(|w| w[0] < w[1]));
    assert_eq!(sample_clients(7, 1.0, SamplingScheme::Uniform, &mut rng), (0..7).collect::<Vec<_>>());
}

#[test]
fn bernoulli_activation_frequency() {
    let (m, p, rounds) = (1000, 0.1, 10_000);
    let mut counts = vec![0usize; m];
    for t in 0..rounds {
        for id in sample_clients(m, p, SamplingScheme::Bernoulli, &mut stream(3, Purpose::Sampling, t, 0)) {
            counts[id] += 1;
        }
    }
    let sigma = (p * (1.0 - p) / rounds as f64).sqrt();
    let worst = counts.iter().map(|&c| (c as f64 / rounds as f64 - p).abs()).fold(0.0, f64::max);
    // Max of 1000 deviations; 4.5σ leaves room for the extreme-value tail.
    assert!(worst <= 4.5 * sigma, "worst deviation {worst} vs σ {sigma}");
    let within = counts.iter().filter(|&&c| (c as f64 / rounds as f64 - p).abs() <= 3.0 * sigma).count();
    assert!(within >= 990, "{within} of {m} clients within 3σ");
}

#[test]
fn local_epoch_draws() {
    let mut rng = stream(0, Purpose::Epochs, 0, 0);
    assert!((0..100).all(|_| draw_local_epochs(1, true, &mut rng) == 1));
    assert_eq!(draw_local_epochs(20, false, &mut rng), 20);
    let mut freq = [0usize; 11];
    let n = 100_000;
    for _ in 0..n {
        freq[draw_local_epochs(10, true, &mut rng)] += 1;
    }
    assert_eq!(freq[0], 0);
    for (e, &c) in freq.iter().enumerate().skip(1) {
        assert!((c as f64 / n as f64 - 0.1).abs() <= 0.01, "epoch {e}: {c}");
    }
}

#[test]
fn zero_gradient_world_stays_put() {
    let cfg = config(&[
        ("data.kind", "quadratic"),
        ("quadratic.center_scale", "0"),
        ("clients", "8"),
        ("participation", "0.5"),
        ("strategy.eta", "participation"),
        ("client.batch_size", "full"),
        ("verify.enabled", "true"),
    ]);
    let mut world = World::new(&cfg).unwrap();
    let theta0 = world.server().theta.clone();
    for _ in 0..5 {
        let r = world.run_round().unwrap();
        assert_eq!(r.v_t, Some(0.0));
        assert!(world.server().theta.bits_eq(&theta0));
    }
}

#[test]
fn early_stop_keeps_earlier_records() {
    let full = simulate(&small(&[("rounds", "12")])).unwrap();
    let target = full[4].test_acc.unwrap();
    let stop = rounds_to_target(&full, target).reached().unwrap();
    let stopped = simulate(&small(&[("rounds", "12"), ("early_stop", "true"), ("target_accuracy", &target.to_string())])).unwrap();
    assert_eq!(stopped.len(), stop);
    for (a, b) in stopped.iter().zip(&full) {
        assert_eq!(serde_json::to_string(a).unwrap(), serde_json::to_string(b).unwrap());
    }
}

#[test]
fn run_directory_round_trips() {
    let root = tempfile::tempdir().unwrap();
    let cfg = small(&[("seed", "4"), ("strategy.rho", "0.05")]);
    let run = run_experiment(&cfg, root.path()).unwrap();
    assert_eq!(run.dir, root.path().join(cfg.run_name()));
    for f in [CONFIG_FILE, ROUNDS_FILE, SUMMARY_FILE] {
        assert!(run.dir.join(f).is_file(), "{f}");
    }
    let loaded = load_run(&run.dir).unwrap();
    assert_eq!(loaded.config, cfg);
    assert_eq!(loaded.records, run.records);
    let csv = fs::read_to_string(run.dir.join(SUMMARY_FILE)).unwrap();
    assert!(csv.starts_with("round,train_loss,test_acc,V_t,bytes_up_cum,bytes_down_cum\n"));
    assert_eq!(csv.lines().count(), cfg.rounds + 1);
}

#[test]
fn seeds_get_separate_directories() {
    let root = tempfile::tempdir().unwrap();
    for seed in 0..5 {
        run_experiment(&small(&[("seed", &seed.to_string()), ("rounds", "2")]), root.path()).unwrap();
    }
    assert_eq!(fs::read_dir(root.path()).unwrap().count(), 5);
}

#[test]
fn corrupt_rounds_report_offset() {
    let dir = tempfile::tempdir().unwrap();
    let run = run_experiment(&small(&[("rounds", "3")]), dir.path()).unwrap();
    let path = run.dir.join(ROUNDS_FILE);
    let text = fs::read_to_string(&path).unwrap();
    let first_len = text.lines().next().unwrap().len() + 1;
    let mut lines: Vec<&str> = text.lines().collect();
    lines[1] = "{\"round\": oops}";
    fs::write(&path, lines.join("\n")).unwrap();
    match read_rounds(&path) {
        Err(Error::Parse { offset, .. }) => assert_eq!(offset, first_len as u64),
        other => panic!("expected parse error, got {other:?}"),
    }
    fs::write(&path, "").unwrap();
    assert!(matches!(read_rounds(&path), Err(Error::Parse { .. })));
}

#[test]
fn theorem_mode_rejects_small_rho() {
    let cfg = config(&[
        ("data.kind", "quadratic"),
        ("clients", "4"),
        ("strategy.eta", "participation"),
        ("strategy.rho", "0.5"),
        ("quadratic.curvature_max", "1"),
        ("verify.enabled", "true"),
        ("verify.theorem", "true"),
    ]);
    let err = World::new(&cfg).unwrap_err();
    assert_eq!(err.exit_code(), 2, "{err}");
}

#[test]
fn empty_bernoulli_round_is_skipped() {
    let cfg = small(&[("sampling.scheme", "bernoulli"), ("participation", "0.05"), ("rounds", "30")]);
    let records = simulate(&cfg).unwrap();
    let empty: Vec<_> = records.iter().filter(|r| r.active.is_empty()).collect();
    assert!(!empty.is_empty(), "expected at least one empty draw");
    for r in empty {
        assert!(r.skipped);
        assert_eq!(r.bytes_up, 0);
        let prev = records.iter().find(|p| p.round + 1 == r.round);
        if let Some(p) = prev {
            assert_eq!(p.train_loss, r.train_loss);
        }
    }
}

#[test]
fn bytes_follow_active_set() {
    for strategy in ["fedsgd", "fedavg", "fedprox", "fedadmm", "scaffold"] {
        let records = simulate(&small(&[("strategy", strategy)])).unwrap();
        let per_client = records[0].bytes_up / records[0].active.len() as u64;
        let mut cum = 0;
        for r in &records {
            assert_eq!(r.bytes_up, per_client * r.active.len() as u64, "{strategy}");
            cum += r.bytes_up;
            assert_eq!(r.bytes_up_cum, cum);
        }
    }
}
