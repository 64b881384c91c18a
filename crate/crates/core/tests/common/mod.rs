//! Desk-scale comparison setup shared by the acceptance and tuning tests.

#![allow(dead_code)]

use fedadmm::sim::{rounds_to_target, simulate, ExperimentConfig};

pub fn config(pairs: &[(&str, &str)]) -> ExperimentConfig {
    ExperimentConfig::from_pairs(pairs.iter().map(|(k, v)| (k.to_string(), v.to_string()))).unwrap()
}

/// 10-class Gaussian mixture, n = 10,000, d = 50, m = 100, C = 0.1,
/// 2 label shards per client, E = 5 (the config defaults) with these overrides.
pub const DESK_SCALE: [(&str, &str); 3] = [("data.separation", "1.5"), ("client.batch_size", "10"), ("rounds", "100")];

pub const SEEDS: u64 = 5;

/// Accuracy margin below the centralized optimum that defines the target.
pub const TARGET_MARGIN: f64 = 0.02;

pub const LR_GRID: [&str; 4] = ["0.01", "0.1", "0.2", "0.5"];
pub const RHO_GRID: [&str; 4] = ["0.001", "0.01", "0.1", "1"];

/// Per-strategy settings chosen from `LR_GRID × RHO_GRID` by median
/// rounds-to-target over `SEEDS`; `tuning.rs` re-derives them.
pub const TUNED: [(&str, &[(&str, &str)]); 4] = [
    ("fedsgd", &[("strategy.server_lr", "0.5")]),
    ("fedavg", &[("client.lr", "0.01")]),
    ("fedprox", &[("client.lr", "0.1"), ("strategy.rho", "1")]),
    ("fedadmm", &[("client.lr", "0.2"), ("strategy.rho", "0.1")]),
];

/// Best held-out accuracy of single-client full-data training.
pub fn centralized_accuracy() -> f64 {
    let mut pairs = DESK_SCALE.to_vec();
    pairs.extend([
        ("clients", "1"),
        ("participation", "1"),
        ("partition.scheme", "iid"),
        ("strategy", "fedavg"),
        ("client.epochs", "1"),
        ("client.heterogeneous", "false"),
        ("client.lr", "0.05"),
    ]);
    simulate(&config(&pairs)).unwrap().iter().filter_map(|r| r.test_acc).fold(0.0, f64::max)
}

/// Median rounds-to-target over `SEEDS`, with per-seed outcomes. Runs that
/// never reach the target rank above any run that does.
pub fn median_rounds(strategy: &str, settings: &[(&str, &str)], target: f64) -> (f64, Vec<String>) {
    let mut rounds = Vec::new();
    let mut outcomes = Vec::new();
    let target_str = target.to_string();
    for seed in 0..SEEDS {
        let seed = seed.to_string();
        let mut pairs = DESK_SCALE.to_vec();
        pairs.extend_from_slice(settings);
        pairs.extend([("strategy", strategy), ("seed", &seed), ("early_stop", "true"), ("target_accuracy", &target_str)]);
        let outcome = rounds_to_target(&simulate(&config(&pairs)).unwrap(), target);
        rounds.push(outcome.reached().map_or(f64::INFINITY, |r| r as f64));
        outcomes.push(outcome.to_string());
    }
    rounds.sort_by(f64::total_cmp);
    (rounds[rounds.len() / 2], outcomes)
}
