//! Hot kernels under the rayon backend and on a single thread.
//!
//! With default features each kernel is timed twice: on the global rayon pool
//! ("rayon") and inside a one-thread pool ("sequential"). Built with
//! `--no-default-features` only the sequential fallback exists and only that
//! variant is reported.

use std::hint::black_box;
use std::time::Duration;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use edlae::dataset::{gram, split_strong_generalization, GramMatrix, InteractionMatrix, SplitSpec};
use edlae::edlae::{train_closed_form, EdlaeConfig};
use edlae::evaluation::score_users;
use edlae::matrixops::{sym_inverse, top_k_eig};
use edlae::synthetic::{implicit_feedback, ImplicitFeedbackSpec};

const ITEMS: usize = 400;
const RANK: usize = 64;

struct Fixture {
    x: InteractionMatrix,
    g: GramMatrix,
    foldin: InteractionMatrix,
}

fn fixture() -> Fixture {
    let x = implicit_feedback(&ImplicitFeedbackSpec {
        users: 5000,
        items: ITEMS,
        ..Default::default()
    })
    .expect("synthetic data");
    let split = split_strong_generalization(&x, &SplitSpec::default()).expect("split");
    let g = gram(&split.train);
    Fixture {
        x: split.train,
        g,
        foldin: split.test.foldin,
    }
}

#[cfg(feature = "parallel")]
fn variants() -> Vec<(&'static str, Option<rayon::ThreadPool>)> {
    let single = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .expect("thread pool");
    vec![("rayon", None), ("sequential", Some(single))]
}

#[cfg(not(feature = "parallel"))]
fn variants() -> Vec<(&'static str, Option<()>)> {
    vec![("sequential", None)]
}

#[cfg(feature = "parallel")]
fn run<T: Send>(pool: &Option<rayon::ThreadPool>, f: impl FnOnce() -> T + Send) -> T {
    match pool {
        Some(p) => p.install(f),
        None => f(),
    }
}

#[cfg(not(feature = "parallel"))]
fn run<T>(_: &Option<()>, f: impl FnOnce() -> T) -> T {
    f()
}

fn kernels(c: &mut Criterion) {
    let fx = fixture();
    let a = fx.g.as_matrix().add_diag(&vec![10.0; ITEMS]).expect("square");
    let model = train_closed_form(&fx.g, &EdlaeConfig::new(10.0, 0.25, RANK)).expect("model");

    for (label, pool) in variants() {
        let mut group = c.benchmark_group("kernels");
        group.bench_function(BenchmarkId::new("gram", label), |b| {
            b.iter(|| run(&pool, || gram(black_box(&fx.x))))
        });
        group.bench_function(BenchmarkId::new("matmul", label), |b| {
            b.iter(|| run(&pool, || black_box(&a).matmul(&a).expect("square")))
        });
        group.bench_function(BenchmarkId::new("sym_inverse", label), |b| {
            b.iter(|| run(&pool, || sym_inverse(black_box(&a)).expect("positive definite")))
        });
        group.bench_function(BenchmarkId::new("top_k_eig", label), |b| {
            b.iter(|| run(&pool, || top_k_eig(black_box(&a), RANK, 1e-10).expect("converges")))
        });
        group.bench_function(BenchmarkId::new("train_closed_form", label), |b| {
            b.iter(|| run(&pool, || train_closed_form(&fx.g, &EdlaeConfig::new(10.0, 0.25, RANK)).expect("model")))
        });
        group.bench_function(BenchmarkId::new("score_users", label), |b| {
            b.iter(|| run(&pool, || score_users(black_box(&model), &fx.foldin).expect("scores")))
        });
        group.finish();
    }
}

criterion_group!(
    name = benches;
    config = Criterion::default().sample_size(10).measurement_time(Duration::from_secs(2));
    targets = kernels
);
criterion_main!(benches);
