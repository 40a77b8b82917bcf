//! Parallel vs sequential throughput of the Monte-Carlo heavy paths:
//! Gaussian width estimation and phase-transition cell batches.
//!
//! The sequential lane exercises the same code the `parallel` feature
//! fallback compiles to (worker count 1 short-circuits the pool);
//! build with `--no-default-features` to benchmark the rayon-free
//! binary itself.

use std::hint::black_box;
use std::time::Duration;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use atomic_recovery::atoms::AtomicSet;
use atomic_recovery::experiments::{run_phase_transition, ExperimentConfig, ExperimentKind};
use atomic_recovery::io::AtomicSetSpec;
use atomic_recovery::measure::gaussian_width;
use atomic_recovery::Parallelism;

fn worker_lanes() -> Vec<(String, Parallelism)> {
    // always include a 2-worker lane (on a single core it measures the
    // pool overhead); wider lanes only where the hardware has them
    let mut lanes = vec![
        ("seq".to_string(), Parallelism::sequential()),
        ("par2".to_string(), Parallelism::with_workers(2)),
    ];
    let hw = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    for w in [4usize, 8] {
        if w <= hw {
            lanes.push((format!("par{w}"), Parallelism::with_workers(w)));
        }
    }
    lanes
}

fn bench_gaussian_width(c: &mut Criterion) {
    let mut group = c.benchmark_group("gaussian_width_srho_d16_s2");
    group.sample_size(10);
    group.measurement_time(Duration::from_secs(8));
    let set = AtomicSet::canonical(16);
    for (name, par) in worker_lanes() {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| {
                let w = gaussian_width(black_box(&set), 0.9, 2, 2_000, 7, par).unwrap();
                black_box(w.mean)
            })
        });
    }
    group.finish();
}

fn bench_phase_cells(c: &mut Criterion) {
    let mut group = c.benchmark_group("phase_transition_d16");
    group.sample_size(10);
    group.measurement_time(Duration::from_secs(12));
    for (name, par) in worker_lanes() {
        let workers = par.workers();
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            let mut cfg = ExperimentConfig::defaults(
                ExperimentKind::PhaseTransition,
                AtomicSetSpec::Canonical { dim: 16 },
            );
            cfg.m_grid = vec![4, 8, 12];
            cfg.s_grid = vec![1, 2];
            cfg.trials = 8;
            cfg.seed = 3;
            cfg.workers = workers;
            b.iter(|| {
                let grid = run_phase_transition(black_box(&cfg)).unwrap();
                black_box(grid.cells.len())
            })
        });
    }
    group.finish();
}

criterion_group!(benches, bench_gaussian_width, bench_phase_cells);
criterion_main!(benches);
