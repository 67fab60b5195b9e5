//! Microbenchmarks of the numeric kernels on the synthetic-scenario shapes:
//! 50-sample episodes, a 50 -> 64 -> 16 extractor, 5-way heads.

use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use leadr_bench::{episode, matrix, mlp2};
use leadr_core::heads::fit_head;
use leadr_core::{HeadFitConfig, Targets, TaskKind};

fn bench_matmul(c: &mut Criterion) {
    let a = matrix(64, 64, 1);
    let b = matrix(64, 64, 2);
    c.bench_function("matmul 64x64x64", |bench| {
        bench.iter(|| black_box(&a).matmul(black_box(&b)).unwrap())
    });
}

fn bench_forward(c: &mut Criterion) {
    let f = mlp2(50, 64, 16, 3);
    let x = matrix(50, 50, 4);
    c.bench_function("mlp2 forward 50x(50-64-16)", |bench| {
        bench.iter(|| black_box(&f).forward(black_box(&x)).unwrap())
    });
}

fn bench_backward(c: &mut Criterion) {
    let f = mlp2(50, 64, 16, 5);
    let x = matrix(50, 50, 6);
    let (_, trace) = f.forward(&x).unwrap();
    let grad_out = matrix(50, 16, 7);
    c.bench_function("mlp2 backward 50x(50-64-16)", |bench| {
        bench.iter(|| {
            black_box(&f)
                .backward(&trace, black_box(&grad_out))
                .unwrap()
        })
    });
}

fn bench_logistic_fit(c: &mut Criterion) {
    let features = matrix(25, 16, 8);
    let labels = Targets::Classes((0..25).map(|i| i % 5).collect());
    let cfg = HeadFitConfig::default();
    c.bench_function("logistic fit 25x16, 5 classes", |bench| {
        bench.iter(|| {
            fit_head(
                TaskKind::Classification { num_classes: 5 },
                black_box(&features),
                &labels,
                &cfg,
            )
            .unwrap()
        })
    });
}

fn bench_ridge_fit(c: &mut Criterion) {
    let features = matrix(25, 16, 9);
    let ep = episode(25, 16, 5, 10);
    let values = Targets::Values(ep.inputs.data()[..25].to_vec());
    let cfg = HeadFitConfig::default();
    c.bench_function("ridge fit 25x16", |bench| {
        bench.iter(|| fit_head(TaskKind::Regression, black_box(&features), &values, &cfg).unwrap())
    });
}

criterion_group!(
    kernels,
    bench_matmul,
    bench_forward,
    bench_backward,
    bench_logistic_fit,
    bench_ridge_fit
);
criterion_main!(kernels);
