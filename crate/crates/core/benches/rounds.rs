use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use fedadmm::sim::{ExperimentConfig, World};

fn config(workers: usize) -> ExperimentConfig {
    ExperimentConfig::from_pairs([
        ("clients", "100".to_string()),
        ("participation", "0.2".to_string()),
        ("client.heterogeneous", "false".to_string()),
        ("data.per_class", "500".to_string()),
        ("workers", workers.to_string()),
    ])
    .unwrap()
}

fn bench_rounds(c: &mut Criterion) {
    let threads = std::thread::available_parallelism().map_or(4, |n| n.get()).max(2);
    let mut group = c.benchmark_group("fedadmm_round");
    group.sample_size(20);
    // workers = 1 takes the sequential path even with the `parallel` feature.
    for workers in [1, threads] {
        let mut world = World::new(&config(workers)).unwrap();
        let id = if workers == 1 { BenchmarkId::new("sequential", 1) } else { BenchmarkId::new("rayon", workers) };
        group.bench_function(id, |b| b.iter(|| world.run_round().unwrap()));
    }
    group.finish();
}

criterion_group!(benches, bench_rounds);
criterion_main!(benches);
