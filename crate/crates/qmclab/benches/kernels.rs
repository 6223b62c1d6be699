//! Benchmarks comparing the data-parallel scheduler (`ExecMode::Auto`, rayon
//! under the default `parallel` feature) against the sequential fallback
//! (`ExecMode::Sequential`) on the crate's hottest chunked kernels.
//!
//! Results are bit-identical across modes; only wall time differs. To compare
//! whole builds instead of schedulers, run once more with
//! `cargo bench -p qmclab --no-default-features`, which makes `Auto` fall
//! back to the sequential path as well.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use qmclab::exec::{chunk_rng, map_chunks, mean_ci95, plan_chunks, ExecMode};
use qmclab::instances::noisy_hypercube;
use qmclab::rounding::project_round;
use qmclab::sdp::{evaluate_assignment, Objective, UnitVectorAssignment};
use qmclab::spherical::zonal;
use rand::Rng;
use rand_distr::StandardNormal;

const MODES: [(&str, ExecMode); 2] = [
    ("sequential", ExecMode::Sequential),
    ("auto", ExecMode::Auto),
];

/// Mean normalized inner product of rho-correlated Gaussian pairs in R^3 —
/// the inner loop of the Borell stability checks.
fn correlated_stability(mode: ExecMode, samples: u64) -> f64 {
    let rho = -0.584f64;
    let tail = (1.0 - rho * rho).sqrt();
    let (chunks, sizes) = plan_chunks(samples);
    let partials = map_chunks(mode, chunks, |chunk| {
        let mut rng = chunk_rng(17, 0, chunk);
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for _ in 0..sizes[chunk as usize] {
            let mut dot = 0.0;
            let mut nx = 0.0;
            let mut ny = 0.0;
            for _ in 0..3 {
                let g1: f64 = rng.sample(StandardNormal);
                let g2: f64 = rng.sample(StandardNormal);
                let y = rho * g1 + tail * g2;
                dot += g1 * y;
                nx += g1 * g1;
                ny += y * y;
            }
            let v = dot / (nx.sqrt() * ny.sqrt()).max(1e-300);
            sum += v;
            sumsq += v * v;
        }
        (sum, sumsq)
    });
    let (sum, sumsq) = partials
        .iter()
        .fold((0.0, 0.0), |(s, q), (ps, pq)| (s + ps, q + pq));
    mean_ci95(sum, sumsq, samples).0
}

/// One batch of projection-rounding trials on the n=8 noisy hypercube:
/// project the identity embedding to k=3 and score the PRODUCT objective.
fn rounding_trials(mode: ExecMode, trials: u64) -> f64 {
    let graph = noisy_hypercube(8, -0.584, false).unwrap();
    let identity = UnitVectorAssignment::hypercube_identity(graph.labels()).unwrap();
    let values = map_chunks(mode, trials, |t| {
        let rounded = project_round(&identity, 3, 900 + t).unwrap();
        evaluate_assignment(&graph, Objective::PRODUCT, &rounded).unwrap()
    });
    values.iter().sum::<f64>() / trials as f64
}

/// Sphere average of a degree-d zonal harmonic times a smooth weight —
/// the sampling loop behind the Funk–Hecke spot check (n = 4, d = 3).
fn zonal_sphere_average(mode: ExecMode, samples: u64) -> f64 {
    let n = 4usize;
    let d = 3usize;
    let (chunks, sizes) = plan_chunks(samples);
    let partials = map_chunks(mode, chunks, |chunk| {
        let mut rng = chunk_rng(23, 1, chunk);
        let mut sum = 0.0;
        for _ in 0..sizes[chunk as usize] {
            let mut norm2 = 0.0;
            let mut first = 0.0;
            for i in 0..n {
                let g: f64 = rng.sample(StandardNormal);
                if i == 0 {
                    first = g;
                }
                norm2 += g * g;
            }
            let t = first / norm2.sqrt().max(1e-300);
            sum += zonal(n, d, t).unwrap() * (-0.5 * t).exp();
        }
        sum
    });
    partials.iter().sum::<f64>() / samples as f64
}

fn bench_correlated_stability(c: &mut Criterion) {
    let samples = 1u64 << 20;
    let mut group = c.benchmark_group("correlated_stability_1m");
    group.sample_size(10);
    for (name, mode) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &mode, |b, &mode| {
            b.iter(|| correlated_stability(mode, samples));
        });
    }
    group.finish();
}

fn bench_rounding_trials(c: &mut Criterion) {
    let trials = 64u64;
    let mut group = c.benchmark_group("rounding_trials_n8_k3");
    group.sample_size(10);
    for (name, mode) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &mode, |b, &mode| {
            b.iter(|| rounding_trials(mode, trials));
        });
    }
    group.finish();
}

fn bench_zonal_average(c: &mut Criterion) {
    let samples = 1u64 << 18;
    let mut group = c.benchmark_group("zonal_sphere_average_256k");
    group.sample_size(10);
    for (name, mode) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &mode, |b, &mode| {
            b.iter(|| zonal_sphere_average(mode, samples));
        });
    }
    group.finish();
}

criterion_group!(
    kernels,
    bench_correlated_stability,
    bench_rounding_trials,
    bench_zonal_average
);
criterion_main!(kernels);
