use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use effcap::capacity::{ec_mg, ec_mog, ec_numeric};
use effcap::channels::{sample_composite, CompositeDensity};
use effcap::mixfit::{fit_mg, fit_mog, MogFitOptions};
use effcap::specfun::{bessel_i, gauss_laguerre, tricomi_u};
use effcap::{ChannelParams, EtaFormat};

fn canonical() -> ChannelParams {
    ChannelParams::new(2.0, 0.5, 1.0, 2.0, 1.0, EtaFormat::Format1).unwrap()
}

fn special_functions(c: &mut Criterion) {
    c.bench_function("tricomi_u(1.3, -2.2, 4.0)", |b| {
        b.iter(|| tricomi_u(black_box(1.3), black_box(-2.2), black_box(4.0)))
    });
    c.bench_function("tricomi_u(2.5, 3.5, 0.05)", |b| {
        b.iter(|| tricomi_u(black_box(2.5), black_box(3.5), black_box(0.05)))
    });
    c.bench_function("bessel_i(0.5, 12.0)", |b| {
        b.iter(|| bessel_i(black_box(0.5), black_box(12.0), true))
    });
    c.bench_function("gauss_laguerre(50)", |b| {
        b.iter(|| gauss_laguerre(black_box(50)))
    });
}

fn densities(c: &mut Criterion) {
    let params = canonical();
    let d = CompositeDensity::new(&params).unwrap();
    c.bench_function("composite_pdf(1.0)", |b| b.iter(|| d.pdf(black_box(1.0))));
    c.bench_function("fit_mg(S=50)", |b| {
        b.iter(|| fit_mg(black_box(&params), 50))
    });
}

fn capacity(c: &mut Criterion) {
    let params = canonical();
    let mg = fit_mg(&params, 50).unwrap();
    let samples = sample_composite(&params, 100_000, 1).unwrap();
    let mog = fit_mog(&samples, 6, &MogFitOptions::default())
        .unwrap()
        .model;
    let d = CompositeDensity::new(&params).unwrap();
    c.bench_function("ec_mg(S=50, A=1)", |b| {
        b.iter(|| ec_mg(black_box(&mg), 1.0))
    });
    c.bench_function("ec_mog(N=6, A=1)", |b| {
        b.iter(|| ec_mog(black_box(&mog), 1.0))
    });
    let mut group = c.benchmark_group("slow");
    group.sample_size(10);
    group.bench_function("ec_numeric(A=1)", |b| {
        b.iter(|| ec_numeric(|g| d.pdf(g), black_box(1.0)))
    });
    group.finish();
}

criterion_group!(benches, special_functions, densities, capacity);
criterion_main!(benches);
