use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use hankel_core::form::{factorization_residual, identity_residual, TestFunction};
use hankel_core::galerkin::{assemble, certificate, laguerre_moments};
use hankel_core::transform::{mollifier_tn, GridFunction, LogGrid};
use hankel_core::{Kernel, C64};

fn perturbed() -> Kernel {
    Kernel::carleman().plus(&Kernel::perturbation(1.0, 1.5, 1.0, 0.0).unwrap()).unwrap()
}

fn sections(c: &mut Criterion) {
    let mut g = c.benchmark_group("sections");
    let k = perturbed();
    for n in [32, 128] {
        g.bench_with_input(BenchmarkId::new("moments", n), &n, |b, &n| {
            b.iter(|| laguerre_moments(black_box(&k), 2 * n - 1).unwrap())
        });
    }
    g.bench_function("assemble 64", |b| b.iter(|| assemble(black_box(&k), 64).unwrap()));
    g.bench_function("assemble carleman 512", |b| b.iter(|| assemble(&Kernel::carleman(), black_box(512)).unwrap()));
    g.finish();
}

fn identities(c: &mut Criterion) {
    let k = Kernel::quasi_carleman(1.0, 3.0, 1.0, 1.0).unwrap();
    let f = TestFunction::exp_poly(C64::new(1.0, 0.5), 2, 1.3);
    c.bench_function("identity residual", |b| b.iter(|| identity_residual(black_box(&k), black_box(&f)).unwrap()));
    c.bench_function("factorization residual", |b| {
        b.iter(|| factorization_residual(black_box(&f), LogGrid::default()).unwrap())
    });
}

fn mollifier(c: &mut Criterion) {
    let grid = LogGrid::new(-20.0, 20.0, 2048).unwrap();
    let g = GridFunction::from_fn(grid, |x| C64::new((-x * x / 2.0).exp(), 0.0));
    c.bench_function("mollifier T32", |b| b.iter(|| mollifier_tn(32, black_box(&g)).unwrap()));
}

fn certificates(c: &mut Criterion) {
    let mut g = c.benchmark_group("certificates");
    g.sample_size(10);
    let v = Kernel::perturbation(1.0, 1.5, 1.0, 0.0).unwrap();
    g.bench_function("window", |b| b.iter(|| certificate(&Kernel::carleman(), black_box(&v), 1, 0.1).unwrap()));
    let two = C64::new(2.0, 0.0);
    let v = Kernel::finite_rank(vec![two], C64::new(1.0, 1.0))
        .unwrap()
        .plus(&Kernel::finite_rank(vec![two], C64::new(1.0, -1.0)).unwrap())
        .unwrap();
    g.bench_function("interpolation", |b| b.iter(|| certificate(&Kernel::zero(), black_box(&v), 1, 0.1).unwrap()));
    g.finish();
}

criterion_group!(benches, sections, identities, mollifier, certificates);
criterion_main!(benches);
