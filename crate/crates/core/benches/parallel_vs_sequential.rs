//! Sequential vs rayon execution for fitting and prediction. Without the
//! `parallel` feature both groups run the sequential code.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use survboost::survival_boost::fit_with;
use survboost::synth::{generate, SynthConfig};
use survboost::{Exec, SurvivalBoostConfig, TimeGrid};

fn bench_fit(c: &mut Criterion) {
    let (data, _) = generate(&SynthConfig {
        n_samples: 5000,
        ..SynthConfig::default()
    })
    .unwrap();
    let mut cfg = SurvivalBoostConfig::default();
    cfg.gbt.n_iterations = 10;

    let mut group = c.benchmark_group("fit_5k_10_rounds");
    group.sample_size(10);
    for exec in [Exec::Sequential, Exec::Parallel] {
        group.bench_with_input(BenchmarkId::from_parameter(format!("{exec:?}")), &exec, |b, &exec| {
            b.iter(|| fit_with(black_box(&data), &cfg, exec).unwrap())
        });
    }
    group.finish();

    let (model, _) = fit_with(&data, &cfg, Exec::Parallel).unwrap();
    let grid = TimeGrid::evenly_spaced(data.t_max, 50).unwrap();
    let mut group = c.benchmark_group("predict_5k_rows_50_horizons");
    group.sample_size(10);
    for exec in [Exec::Sequential, Exec::Parallel] {
        group.bench_with_input(BenchmarkId::from_parameter(format!("{exec:?}")), &exec, |b, &exec| {
            b.iter(|| model.predict_cif_with(black_box(&data.features), &grid, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, bench_fit);
criterion_main!(benches);
