use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use parisi_bench::{frsb, p4};
use parisi_core::sim::{ascend, overlap_census, random_start, Hamiltonian};
use parisi_core::SimConfig;

fn hamiltonian(c: &mut Criterion) {
    let mut g = c.benchmark_group("hamiltonian");
    for n in [32, 64] {
        let m = p4();
        g.bench_with_input(BenchmarkId::new("sample_p4", n), &n, |b, &n| {
            b.iter(|| Hamiltonian::sample(&m, n, 1, 0).unwrap())
        });
        let h = Hamiltonian::sample(&m, n, 1, 0).unwrap();
        let s = random_start(n, 1, 0, 0);
        g.bench_with_input(BenchmarkId::new("energy_and_gradient_p4", n), &s, |b, s| {
            b.iter(|| h.energy_and_gradient(black_box(s)))
        });
    }
    g.finish();
}

fn ascent(c: &mut Criterion) {
    let m = frsb(0.0);
    let n = 64;
    let h = Hamiltonian::sample(&m, n, 1, 0).unwrap();
    let cfg = SimConfig {
        n,
        ..Default::default()
    };
    let s0 = random_start(n, 1, 0, 0);
    let mut g = c.benchmark_group("ascent");
    g.sample_size(10);
    g.bench_function("frsb_N64", |b| b.iter(|| ascend(&h, black_box(&s0), &cfg)));
    let cfg = SimConfig {
        n,
        n_restarts: 10,
        ..Default::default()
    };
    g.bench_function("census_frsb_N64_10_restarts", |b| {
        b.iter(|| overlap_census(&h, &cfg, 0.05, 0).unwrap())
    });
    g.finish();
}

criterion_group!(benches, hamiltonian, ascent);
criterion_main!(benches);
