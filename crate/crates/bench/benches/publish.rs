use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use entropy_sentry::{
    publish_baseline, publish_limit, truncate_locations, LimitedTable, Mechanism, NoiseSource,
    PrivacyParams,
};
use entropy_sentry_bench::zipf_log;

fn publish(c: &mut Criterion) {
    let log = zipf_log(1_000, 10_000, 200_000);
    let params = PrivacyParams::default();

    let mut group = c.benchmark_group("publish");
    group.sample_size(20);
    group.bench_function("truncate", |b| b.iter(|| truncate_locations(black_box(&log), 5)));
    group.bench_function("baseline", |b| b.iter(|| publish_baseline(black_box(&log), &params).unwrap()));
    group.bench_function("limit", |b| b.iter(|| publish_limit(black_box(&log), &params).unwrap()));

    let limited = LimitedTable::new(&log, params.m, params.c);
    let cb = PrivacyParams {
        mechanism: Mechanism::LimitCb,
        ..params.clone()
    };
    let source = NoiseSource::new(1);
    group.bench_function("limit_cb/prepared", |b| {
        b.iter(|| limited.publish(black_box(&cb), None, &source).unwrap())
    });
    group.finish();
}

criterion_group!(benches, publish);
criterion_main!(benches);
