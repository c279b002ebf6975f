//! One worker against the full pool on the three parallel kernels. Build with
//! `--no-default-features` for the sequential code path.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use ustat_core::exact::Exact;
use ustat_core::mc::{sample_ustat, Source};
use ustat_core::model::{generate_instance, Family};
use ustat_core::par;
use ustat_core::suite::{run_suite, CorpusSpec, Grids};

fn workers() -> Vec<usize> {
    let all = std::thread::available_parallelism().map_or(1, |n| n.get());
    if all > 1 { vec![1, all] } else { vec![1] }
}

fn enumeration(c: &mut Criterion) {
    let inst = generate_instance(Family::Canonical, 2, 5, 3, 1).unwrap();
    let mut g = c.benchmark_group("exact_distribution");
    for t in workers() {
        g.bench_with_input(BenchmarkId::new("threads", t), &t, |b, &t| {
            b.iter(|| par::with_threads(t, || Exact::default().distribution(black_box(&inst)).unwrap()))
        });
    }
    g.finish();
}

fn sampling(c: &mut Criterion) {
    let src = Source::Instance(generate_instance(Family::GaussianChaosAnalog, 2, 20, 2, 3).unwrap());
    let mut g = c.benchmark_group("sample_ustat");
    g.sample_size(10);
    for t in workers() {
        g.bench_with_input(BenchmarkId::new("threads", t), &t, |b, &t| {
            b.iter(|| par::with_threads(t, || sample_ustat(black_box(&src), 100_000, 7).unwrap()))
        });
    }
    g.finish();
}

fn suite(c: &mut Criterion) {
    let corpus = CorpusSpec {
        families: vec![Family::Nonneg],
        m: vec![2],
        n: vec![2, 3],
        atoms: vec![2],
        seeds: 0..8,
    }
    .generate(Exact::default())
    .unwrap();
    let filter = vec!["MIXED_SUM_UPPER".to_string(), "MIXED_MAX_UPPER".to_string()];
    let mut g = c.benchmark_group("run_suite");
    g.sample_size(10);
    for t in workers() {
        g.bench_with_input(BenchmarkId::new("threads", t), &t, |b, &t| {
            b.iter(|| par::with_threads(t, || run_suite(black_box(&corpus), &filter, &Grids::default(), None, Exact::default()).unwrap()))
        });
    }
    g.finish();
}

criterion_group!(benches, enumeration, sampling, suite);
criterion_main!(benches);
