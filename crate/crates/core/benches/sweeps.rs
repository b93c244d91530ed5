// Bellman sweeps, kernel construction and replications. Run once with the
// default features and once with `--no-default-features` to compare the
// rayon and sequential paths:
//
//   cargo bench -p offload-core
//   cargo bench -p offload-core --no-default-features

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use std::hint::black_box;

use offload_core::kernel::build_problem;
use offload_core::policy::Baseline;
use offload_core::simulator::{simulate, SimConfig};
use offload_core::solver::bellman_backup;
use offload_core::{Discount, ModelParams};

fn mode() -> &'static str {
    if offload_core::par::is_parallel() {
        "rayon"
    } else {
        "sequential"
    }
}

fn config_a() -> ModelParams {
    ModelParams::from_utilization(0.4, 1.0, 8.0, 0.4).unwrap()
}

fn bench_backup(c: &mut Criterion) {
    let mut group = c.benchmark_group(format!("bellman_backup/{}", mode()));
    for n_max in [30u32, 60, 120] {
        let kernel = build_problem(&config_a(), n_max, Discount::Alpha(0.999)).unwrap();
        let values: Vec<f64> = (0..kernel.num_states()).map(|i| i as f64 * 1e-3).collect();
        group.throughput(Throughput::Elements(kernel.num_states() as u64));
        group.bench_with_input(BenchmarkId::from_parameter(n_max), &n_max, |b, _| {
            b.iter(|| bellman_backup(black_box(&kernel), black_box(&values)).unwrap())
        });
    }
    group.finish();
}

fn bench_kernel(c: &mut Criterion) {
    let mut group = c.benchmark_group(format!("build_kernel/{}", mode()));
    for n_max in [60u32, 120] {
        group.bench_with_input(BenchmarkId::from_parameter(n_max), &n_max, |b, &n| {
            b.iter(|| build_problem(black_box(&config_a()), n, Discount::Alpha(0.999)).unwrap())
        });
    }
    group.finish();
}

fn bench_replications(c: &mut Criterion) {
    let mut group = c.benchmark_group(format!("simulate/{}", mode()));
    group.sample_size(10);
    let cfg = SimConfig {
        horizon: 1e4,
        warmup: 1e3,
        replications: 8,
        ..Default::default()
    };
    for b in Baseline::ALL {
        group.bench_function(b.as_str(), |bench| {
            bench.iter(|| simulate(&b, black_box(&config_a()), &cfg).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, bench_backup, bench_kernel, bench_replications);
criterion_main!(benches);
