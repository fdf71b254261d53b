use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use parisi_bench::{exemplars, frsb, p4};
use parisi_core::cs::{eval_q, gradient_q};
use parisi_core::landscape::{default_u_grid, landscape_profile};
use parisi_core::rsb::{classify, ClassifyOptions};
use parisi_core::{minimize_q, LandscapeOptions, SolverOptions};

fn objective(c: &mut Criterion) {
    let m = frsb(0.0);
    let mut g = c.benchmark_group("objective");
    for n in [256, 1024, 4096] {
        let nu = minimize_q(&m, n, &SolverOptions::default()).unwrap().nu_p;
        g.bench_with_input(BenchmarkId::new("eval_q", n), &nu, |b, nu| {
            b.iter(|| eval_q(black_box(nu), &m).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("gradient_q", n), &nu, |b, nu| {
            b.iter(|| gradient_q(black_box(nu), &m).unwrap())
        });
    }
    g.finish();
}

fn solve(c: &mut Criterion) {
    let mut g = c.benchmark_group("minimize_q");
    g.sample_size(10);
    for (name, m) in exemplars() {
        for n in [256, 1024] {
            g.bench_function(BenchmarkId::new(name, n), |b| {
                b.iter(|| minimize_q(black_box(&m), n, &SolverOptions::default()).unwrap())
            });
        }
    }
    g.finish();
}

fn closed_forms(c: &mut Criterion) {
    let mut g = c.benchmark_group("classify");
    for (name, m) in exemplars() {
        g.bench_function(name, |b| {
            b.iter(|| classify(black_box(&m), &ClassifyOptions::default()).unwrap())
        });
    }
    g.finish();
}

fn landscape(c: &mut Criterion) {
    let m = p4();
    let sol = minimize_q(&m, 1024, &SolverOptions::default()).unwrap();
    let u = default_u_grid(41);
    let mut g = c.benchmark_group("landscape");
    g.sample_size(10);
    g.bench_function("p4_41_points", |b| {
        b.iter(|| landscape_profile(&m, black_box(&sol), &u, &LandscapeOptions::default()).unwrap())
    });
    g.finish();
}

criterion_group!(benches, objective, solve, closed_forms, landscape);
criterion_main!(benches);
