use citkit::{generate_greedy, generate_pso, PsoConfig};
use citkit_bench::{qemu, uniform};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

fn qemu_suites(c: &mut Criterion) {
    let model = qemu();
    let mut group = c.benchmark_group("qemu");
    for t in 2..=4 {
        group.bench_with_input(BenchmarkId::new("greedy", t), &t, |b, &t| {
            b.iter(|| generate_greedy(&model, t, black_box(1)).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("pso", t), &t, |b, &t| {
            b.iter(|| generate_pso(&model, t, &PsoConfig::with_seed(black_box(1))).unwrap())
        });
    }
    group.finish();
}

fn uniform_pairwise(c: &mut Criterion) {
    let mut group = c.benchmark_group("uniform-pairwise");
    group.sample_size(10);
    for k in [10, 20] {
        let model = uniform(k, 3);
        group.bench_with_input(BenchmarkId::new("greedy", k), &model, |b, m| {
            b.iter(|| generate_greedy(m, 2, black_box(1)).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("pso", k), &model, |b, m| {
            b.iter(|| generate_pso(m, 2, &PsoConfig::with_seed(black_box(1))).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, qemu_suites, uniform_pairwise);
criterion_main!(benches);
