use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use ucn_bench::{example_panel, random_panel};
use ucn_core::entropy::{causal_entropy, EstimatorConfig};
use ucn_core::hce::{discover_with, KsgSource};
use ucn_core::{HceConfig, LaggedVar};

fn bench_causal_entropy(c: &mut Criterion) {
    let panel = example_panel(2000, 1);
    let cfg = EstimatorConfig::default();
    let mut group = c.benchmark_group("causal_entropy");
    for dz in [0usize, 2, 4] {
        let x = panel.target_column(0, 5).unwrap();
        let y = panel.lagged_column(LaggedVar::new(4, 1), 5).unwrap();
        let z: Vec<&[f64]> = (0..dz)
            .map(|j| panel.lagged_column(LaggedVar::new(j, 1), 5).unwrap())
            .collect();
        group.bench_with_input(BenchmarkId::from_parameter(dz), &z, |b, z| {
            b.iter(|| causal_entropy(x, y, z, &cfg).unwrap())
        });
    }
    group.finish();
}

fn bench_discover(c: &mut Criterion) {
    let mut group = c.benchmark_group("discover");
    group.sample_size(10);
    let config = HceConfig { parallel: false, ..Default::default() };
    let example = example_panel(2000, 2);
    group.bench_function("example_n5", |b| {
        let src = KsgSource::new(&example, &config).unwrap();
        b.iter(|| discover_with(&src, example.names().to_vec(), &config).unwrap())
    });
    let random = random_panel(10, 2000, 3);
    group.bench_function("random_n10", |b| {
        let src = KsgSource::new(&random, &config).unwrap();
        b.iter(|| discover_with(&src, random.names().to_vec(), &config).unwrap())
    });
    group.finish();
}

criterion_group!(benches, bench_causal_entropy, bench_discover);
criterion_main!(benches);
