//! Throughput of the row-parallel kernels on one worker versus the default
//! rayon pool. Build with `--no-default-features` to time the sequential path.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use falq::bench::{gen_stationary_field, tail_ratio_check, StationaryFieldSpec};
use falq::decompose::{fa_decompose, FaConfig};
use falq::polarquant::polar_quantize;
use falq::spectral::forward_dft2;
use rayon::ThreadPool;
use std::hint::black_box;

fn pools() -> Vec<(String, ThreadPool)> {
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let all = rayon::ThreadPoolBuilder::new().build().unwrap();
    let n = all.current_num_threads();
    vec![("single".into(), one), (format!("pool{n}"), all)]
}

fn field(n: usize) -> ndarray::Array2<f64> {
    gen_stationary_field(&StationaryFieldSpec { rows: n, cols: n, rho: 0.9, seed: 7 }).unwrap()
}

fn kernels(c: &mut Criterion) {
    let w = field(256);
    let spectrum = forward_dft2(&w).unwrap();
    let small = field(64);
    let config = FaConfig::for_shape(64, 64);

    let mut g = c.benchmark_group("kernels");
    g.sample_size(20);
    for (threads, pool) in pools() {
        g.bench_with_input(BenchmarkId::new("forward_dft2_256", &threads), &w, |b, w| {
            b.iter(|| pool.install(|| forward_dft2(black_box(w)).unwrap()))
        });
        g.bench_with_input(BenchmarkId::new("polar_quantize_256", &threads), spectrum.data(), |b, s| {
            b.iter(|| pool.install(|| polar_quantize(black_box(s), 4, 4).unwrap()))
        });
        g.bench_with_input(BenchmarkId::new("fa_decompose_64", &threads), &small, |b, w| {
            b.iter(|| pool.install(|| fa_decompose(black_box(w), None, &config).unwrap()))
        });
    }
    g.finish();
}

fn trials(c: &mut Criterion) {
    let spec = StationaryFieldSpec { rows: 64, cols: 64, rho: 0.7, seed: 0 };
    let mut g = c.benchmark_group("tail_ratio_trials");
    g.sample_size(10);
    for (threads, pool) in pools() {
        g.bench_function(BenchmarkId::from_parameter(&threads), |b| {
            b.iter(|| pool.install(|| tail_ratio_check(black_box(&spec), 4, 16).unwrap()))
        });
    }
    g.finish();
}

criterion_group!(benches, kernels, trials);
criterion_main!(benches);
