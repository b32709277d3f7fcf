use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use pave_iri_bench::split;
use pave_iri_core::classifiers::{
    default_gamma, train_logit, train_nb, train_svm_binary, train_svm_ovo, KernelSpec, LogitConfig, SmoParams,
    DEFAULT_VARIANCE_FLOOR_SCALE,
};

fn smo(c: &mut Criterion) {
    let (train, _) = split(600, 1);
    let gamma = default_gamma(&train);
    let rows: Vec<&[f64]> = train.rows().collect();
    let ys: Vec<f64> = train
        .vectors
        .iter()
        .map(|v| if v.label_iri > 150.0 { 1.0 } else { -1.0 })
        .collect();
    let params = SmoParams::default();
    c.bench_function("smo_binary_rbf_480", |b| {
        b.iter(|| train_svm_binary(black_box(&rows), &ys, KernelSpec::Rbf { gamma }, &params, (0, 1)).unwrap())
    });
    c.bench_function("svm_ovo_poly3_480", |b| {
        b.iter(|| train_svm_ovo(black_box(&train), KernelSpec::Polynomial { degree: 3 }, &params).unwrap())
    });
}

fn nb(c: &mut Criterion) {
    let (train, test) = split(2520, 42);
    c.bench_function("nb_train_default", |b| {
        b.iter(|| train_nb(black_box(&train), DEFAULT_VARIANCE_FLOOR_SCALE).unwrap())
    });
    let model = train_nb(&train, DEFAULT_VARIANCE_FLOOR_SCALE).unwrap();
    c.bench_function("nb_predict_test_split", |b| {
        b.iter(|| test.rows().map(|x| model.predict(x).unwrap().0).sum::<usize>())
    });
}

fn logit(c: &mut Criterion) {
    let (train, _) = split(400, 3);
    let mut group = c.benchmark_group("logit");
    group.sample_size(10);
    group.bench_function("train_320", |b| {
        b.iter(|| train_logit(black_box(&train), &LogitConfig::default()).unwrap())
    });
    group.finish();
}

criterion_group!(benches, smo, nb, logit);
criterion_main!(benches);
