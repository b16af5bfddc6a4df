//! Sequential against data-parallel execution of the replicate, row and
//! cell loops. On a single core the two should tie; the gap on a multi-core
//! machine is the payoff of the parallel feature.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use kwalk::certify::{monte_carlo_tail, DenseRows};
use kwalk::chains::Generator;
use kwalk::density::{compute_density, compute_density_materialized};
use kwalk::experiment::{run_with_density, ExperimentConfig};
use kwalk::phantom::shepp_logan_8bit;
use kwalk::transforms::{MeasurementSystem, WaveletSpec};
use kwalk::Execution;

const POLICIES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn tail(c: &mut Criterion) {
    let sys = MeasurementSystem::full(1, 64, "haar:4".parse::<WaveletSpec>().unwrap()).unwrap();
    let density = compute_density(&sys).unwrap();
    let rows = DenseRows::new(&sys, Execution::Parallel).unwrap();
    let chain = Generator::Iid.prepare(&density).unwrap();
    let grid: Vec<f64> = (1..=20).map(|k| k as f64 * 0.05).collect();
    let mut g = c.benchmark_group("monte_carlo_tail");
    g.sample_size(10);
    for (name, exec) in POLICIES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| black_box(monte_carlo_tail(&chain, &rows, &density, 256, &grid, 1000, 1, exec).unwrap()))
        });
    }
    g.finish();
}

fn density_rows(c: &mut Criterion) {
    let sys = MeasurementSystem::full(64, 64, "db4:3".parse::<WaveletSpec>().unwrap()).unwrap();
    let mut g = c.benchmark_group("density_materialized");
    g.sample_size(10);
    for (name, exec) in POLICIES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| black_box(compute_density_materialized(&sys, exec).unwrap()))
        });
    }
    g.finish();
}

fn experiment_cells(c: &mut Criterion) {
    let dir = std::env::temp_dir().join("kwalk-bench-experiment");
    let image = shepp_logan_8bit(32, 32).unwrap();
    let cfg = ExperimentConfig {
        rows: Some(32),
        cols: Some(32),
        alphas: vec![1.0, 0.1],
        repetitions: 2,
        cell_files: false,
        output: dir.clone(),
        ..Default::default()
    };
    let sys = MeasurementSystem::full(32, 32, cfg.wavelet_for(32, 32)).unwrap();
    let density = compute_density(&sys).unwrap();
    let mut g = c.benchmark_group("experiment_cells");
    g.sample_size(10);
    for (name, exec) in POLICIES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| black_box(run_with_density(&cfg, &image, &sys, &density, exec).unwrap()))
        });
    }
    g.finish();
    let _ = std::fs::remove_dir_all(dir);
}

criterion_group!(benches, tail, density_rows, experiment_cells);
criterion_main!(benches);
