use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use slope_bench::standardized_instance;
use slope_core::{
    fit_path, BetaScheme, DesignKind, Family, GenSpec, PathConfig, ScreeningMode, SolverConfig,
};

fn bench_path_screening(c: &mut Criterion) {
    let spec = GenSpec {
        n: 100,
        p: 1_000,
        k: 20,
        rho: 0.3,
        design_kind: DesignKind::Equicorrelated,
        family: Family::Gaussian,
        beta_scheme: BetaScheme::GaussianUnit,
        noise_scale: 1.0,
        seed: 21,
        classes: 1,
    };
    let (design, response) = standardized_instance(&spec);
    let base = PathConfig {
        length: 30,
        solver: SolverConfig {
            max_iterations: 10_000,
            ..SolverConfig::default()
        },
        ..PathConfig::default()
    };

    let mut group = c.benchmark_group("path_fit");
    group.sample_size(10);
    for (label, mode) in [("strong", ScreeningMode::Strong), ("none", ScreeningMode::None)] {
        let config = PathConfig {
            screening: mode,
            ..base.clone()
        };
        group.bench_with_input(BenchmarkId::from_parameter(label), &config, |b, cfg| {
            b.iter(|| fit_path(black_box(&design), black_box(&response), black_box(cfg)).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, bench_path_screening);
criterion_main!(benches);
