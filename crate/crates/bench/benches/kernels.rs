//! Criterion benchmarks for the grid kernels that dominate suite runtimes:
//! direct mollification, the Hessian-determinant pairing, and degree maps.

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use std::hint::black_box;

use weakcurv::degree::{degree_map, DomainU};
use weakcurv::fields::calculus::gradient;
use weakcurv::fields::{Grid2D, ScalarField2D, TestFunction};
use weakcurv::mollifier::{mollify_with, MollifierKernel};
use weakcurv::weak_hessian::DetHessianPairer;

fn rough_field(n: usize) -> ScalarField2D {
    let grid = Grid2D::centered_square(n, 1.0).unwrap();
    ScalarField2D::sample(grid, |x, y| {
        0.5 * (x * x + y * y) + 0.1 * (31.0 * x + 17.0 * y).sin()
    })
    .unwrap()
}

fn bench_mollify(c: &mut Criterion) {
    let mut group = c.benchmark_group("mollify");
    for (n, eps) in [(257usize, 0.125), (513, 0.125)] {
        let f = rough_field(n);
        let kernel = MollifierKernel::new(eps, f.grid().h).unwrap();
        group.bench_function(format!("direct_{n}x{n}_eps{eps}"), |b| {
            b.iter(|| mollify_with(black_box(&f), black_box(&kernel)).unwrap())
        });
    }
    group.finish();
}

fn bench_pairing(c: &mut Criterion) {
    let mut group = c.benchmark_group("det_hessian_pairing");
    let f = rough_field(513);
    let phi = TestFunction::normalized([0.0, 0.0], 0.6);
    group.bench_function("pairer_build_513", |b| {
        b.iter_batched(
            || f.clone(),
            |f| DetHessianPairer::new(black_box(&f)).unwrap(),
            BatchSize::LargeInput,
        )
    });
    let pairer = DetHessianPairer::new(&f).unwrap();
    group.bench_function("pair_bump_513", |b| {
        b.iter(|| pairer.pair(black_box(&phi)).unwrap())
    });
    group.finish();
}

fn bench_degree_map(c: &mut Criterion) {
    let mut group = c.benchmark_group("degree_map");
    group.sample_size(10);
    let f = rough_field(257);
    let grad = gradient(&f);
    let domain = DomainU::disk([0.0, 0.0], 0.8);
    let y_grid = Grid2D::new(101, 101, -1.0, -1.0, 0.02).unwrap();
    group.bench_function("disk_101x101_targets", |b| {
        b.iter(|| degree_map(black_box(&grad), black_box(&domain), y_grid).unwrap())
    });
    group.finish();
}

criterion_group!(benches, bench_mollify, bench_pairing, bench_degree_map);
criterion_main!(benches);
