use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use qfw_core::lmo_vector::duerr_hoyer_max_find;
use qfw_core::par::{map_range, Parallelism};
use qfw_core::{ErrorModel, NoiseMode, SmoothObjective, Vector};

const MODES: [(&str, Parallelism); 2] = [("sequential", Parallelism::Sequential), ("parallel", Parallelism::Parallel)];

// Finite-difference axis increments on an objective without a closed form,
// so every coordinate costs one full evaluation.
fn fd_increments(c: &mut Criterion) {
    let mut group = c.benchmark_group("fd_axis_increments");
    for d in [256usize, 1024] {
        let x = Vector::from_fn(d, |i, _| ((i as f64) * 0.37).sin() / d as f64);
        for (name, mode) in MODES {
            let f = SmoothObjective::new(
                |x: &Vector| x.iter().map(|v| (v * v + 1.0).ln()).sum::<f64>(),
                2.0,
                2.0,
            )
            .unwrap()
            .with_parallelism(mode);
            group.bench_with_input(BenchmarkId::new(name, d), &x, |b, x| {
                b.iter(|| black_box(f.axis_increments_uncharged(x, 1e-4)))
            });
        }
    }
    group.finish();
}

// Independent seeded trials of maximum finding, as in the success-rate checks.
fn monte_carlo_trials(c: &mut Criterion) {
    let mut group = c.benchmark_group("max_find_trials");
    group.sample_size(20);
    let d = 256;
    let values: Vec<f64> = (0..d).map(|i| ((i * 7919) % d) as f64).collect();
    for (name, mode) in MODES {
        group.bench_function(BenchmarkId::new(name, 1000), |b| {
            b.iter(|| {
                let hits = map_range(1000, mode, |s| {
                    let m = ErrorModel::new(NoiseMode::Uniform, s as u64);
                    (duerr_hoyer_max_find(&values, 0.01, &m).unwrap().index == 0) as u32
                });
                black_box(hits.iter().sum::<u32>())
            })
        });
    }
    group.finish();
}

criterion_group!(benches, fd_increments, monte_carlo_trials);
criterion_main!(benches);
