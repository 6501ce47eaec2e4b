use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;
use wso_bench::phantom;
use wso_core::features::{feature_vector, window_features, Window, FEATURES_PER_CONTRAST};

fn features(c: &mut Criterion) {
    let stack = phantom(128, 1);
    let w = Window::from_fn(|r, c| ((r * 8 + c) as f64 * 0.37).sin()).unwrap();
    let mut out = [0.0; FEATURES_PER_CONTRAST];
    c.bench_function("window_features", |b| b.iter(|| window_features(black_box(&w), &mut out)));
    c.bench_function("feature_vector_280", |b| b.iter(|| feature_vector(black_box(&stack), 64, 40).unwrap()));
}

criterion_group!(benches, features);
criterion_main!(benches);
