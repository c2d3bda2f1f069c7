use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use eqsens::local::solve_tridiagonal;
use eqsens::spectral::dft;
use eqsens::FrequencyGrid;
use eqsens_bench::{cube_engine, poly, ringing_series, tridiagonal};

fn engine_step(c: &mut Criterion) {
    let mut group = c.benchmark_group("engine_step");
    for n in [16, 32] {
        let (g, mut e) = cube_engine(n);
        group.throughput(Throughput::Elements(g.cell_count() as u64));
        let mut step = 0;
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| {
                e.step(step);
                step += 1;
            })
        });
    }
    group.finish();
}

fn dft_kernel(c: &mut Criterion) {
    let grid = FrequencyGrid::linspace(1e9, 2.5e10, 401).unwrap();
    let x = ringing_series(20480);
    let mut group = c.benchmark_group("dft");
    group.throughput(Throughput::Elements((x.len() * grid.len()) as u64));
    group.bench_function("20480x401", |b| b.iter(|| dft(black_box(&x), 4.41e-13, &grid).unwrap()));
    group.finish();
}

fn tridiagonal_kernel(c: &mut Criterion) {
    let mut group = c.benchmark_group("tridiagonal");
    for n in [64, 1024] {
        let [dl, d, du, rhs] = tridiagonal(n);
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| solve_tridiagonal(&dl, &d, &du, black_box(&rhs)).unwrap())
        });
    }
    group.finish();
}

fn polyvalue_kernel(c: &mut Criterion) {
    let mut group = c.benchmark_group("polyvalue");
    for m in [2, 5] {
        let (a, b) = (poly(m, 0.0), poly(m, 0.5));
        group.bench_with_input(BenchmarkId::new("mul", m), &m, |bch, _| bch.iter(|| black_box(&a) * black_box(&b)));
        group.bench_with_input(BenchmarkId::new("recip", m), &m, |bch, _| bch.iter(|| black_box(&a).recip().unwrap()));
    }
    group.finish();
}

criterion_group!(benches, engine_step, dft_kernel, tridiagonal_kernel, polyvalue_kernel);
criterion_main!(benches);
