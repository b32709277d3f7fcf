use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use pave_iri_core::pipeline::{prepare, PrepOptions};
use pave_iri_core::synth::{generate_corpus, GeneratorProfile};

fn synth(c: &mut Criterion) {
    let profile = GeneratorProfile::default();
    let mut group = c.benchmark_group("synth");
    group.sample_size(20);
    group.bench_function("generate_default", |b| b.iter(|| generate_corpus(black_box(&profile)).unwrap()));
    let corpus = generate_corpus(&profile).unwrap();
    group.bench_function("aggregate_and_filter_default", |b| {
        b.iter(|| prepare(black_box(&corpus), PrepOptions::default()).unwrap())
    });
    group.finish();
}

criterion_group!(benches, synth);
criterion_main!(benches);
