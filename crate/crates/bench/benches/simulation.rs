use std::hint::black_box;

use byzgrad_bench::corner_scenario;
use byzgrad_core::run;
use criterion::{criterion_group, criterion_main, Criterion};

fn bench_run(c: &mut Criterion) {
    let mut group = c.benchmark_group("run");
    group.sample_size(10);
    let small = corner_scenario(10, 2, 3, 1000);
    group.bench_function("n10_f2_d3_T1000", |b| b.iter(|| run(black_box(&small)).unwrap()));
    let wide = corner_scenario(30, 7, 10, 200);
    group.bench_function("n30_f7_d10_T200", |b| b.iter(|| run(black_box(&wide)).unwrap()));
    group.finish();
}

criterion_group!(benches, bench_run);
criterion_main!(benches);
