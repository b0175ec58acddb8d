use citkit::{measure, missing_tuples, verify_coverage, TestSuite};
use citkit_bench::{qemu, uniform};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn exhaustive_measure(c: &mut Criterion) {
    let model = qemu();
    let suite = TestSuite::exhaustive(&model);
    c.bench_function("qemu/measure-1..5", |b| b.iter(|| measure(&suite, &model, &[1, 2, 3, 4, 5]).unwrap()));
    let empty = TestSuite::empty(&model);
    c.bench_function("qemu/missing-3", |b| b.iter(|| missing_tuples(&empty, &model, 3).unwrap()));
}

fn uniform_verify(c: &mut Criterion) {
    let mut group = c.benchmark_group("uniform-verify");
    for t in 2..=4 {
        let model = uniform(6, 4);
        let suite = TestSuite::exhaustive(&model);
        group.bench_with_input(BenchmarkId::from_parameter(t), &t, |b, &t| {
            b.iter(|| verify_coverage(&suite, &model, t).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, exhaustive_measure, uniform_verify);
criterion_main!(benches);
