use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use dtq_bench::fixture;
use dtq_core::counting::{count_labeled, count_shapes};
use dtq_core::sensitivity::{avg_sensitivity_bruteforce, avg_sensitivity_structural, truth_table};
use dtq_core::{Model, RandomStream, Sampler};

fn counting(c: &mut Criterion) {
    let mut g = c.benchmark_group("count");
    for d in [10usize, 16, 20] {
        g.bench_with_input(BenchmarkId::new("shapes", d), &d, |b, &d| {
            b.iter(|| count_shapes(black_box(d)))
        });
    }
    g.bench_function("labeled/d12_n16", |b| b.iter(|| count_labeled(black_box(12), 16)));
    g.finish();
}

fn sampling(c: &mut Criterion) {
    let mut g = c.benchmark_group("sample");
    for model in Model::ALL {
        let sampler = Sampler::new(model, 10, 12).unwrap();
        let mut rng = RandomStream::new(1);
        g.bench_function(model.name(), |b| b.iter(|| sampler.sample(&mut rng)));
    }
    g.finish();
}

fn sensitivity(c: &mut Criterion) {
    let mut g = c.benchmark_group("sensitivity");
    let trees = fixture(Model::FullUniform, 8, 12, 16);
    g.bench_function("structural/d8_n12", |b| {
        b.iter(|| trees.iter().map(avg_sensitivity_structural).count())
    });
    g.bench_function("brute/d8_n12", |b| {
        b.iter(|| {
            trees
                .iter()
                .map(|t| avg_sensitivity_bruteforce(&truth_table(t, 12).unwrap()))
                .count()
        })
    });
    let deep = fixture(Model::FullUniform, 12, 16, 4);
    g.sample_size(10);
    g.bench_function("structural/d12_n16", |b| {
        b.iter(|| deep.iter().map(avg_sensitivity_structural).count())
    });
    g.finish();
}

criterion_group!(benches, counting, sampling, sensitivity);
criterion_main!(benches);
