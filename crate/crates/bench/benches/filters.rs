use std::hint::black_box;

use byzgrad_bench::{random_points, random_values};
use byzgrad_core::{cge, fuse_points, trim, Hypercube, project_box};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn bench_trim(c: &mut Criterion) {
    let mut group = c.benchmark_group("trim");
    for n in [10, 100, 1000] {
        let values = random_values(n, 1);
        group.bench_with_input(BenchmarkId::from_parameter(n), &values, |b, v| {
            b.iter(|| trim(black_box(v), n / 5).unwrap())
        });
    }
    group.finish();
}

fn bench_cge(c: &mut Criterion) {
    let mut group = c.benchmark_group("cge");
    for (n, d) in [(10, 3), (50, 10), (200, 50)] {
        let grads = random_points(n, d, 5.0, 2);
        group.bench_with_input(BenchmarkId::new(format!("d{d}"), n), &grads, |b, g| {
            b.iter(|| cge(black_box(g), n / 5).unwrap())
        });
    }
    group.finish();
}

fn bench_fusion(c: &mut Criterion) {
    let (n, d) = (50, 10);
    let points = random_points(n, d, 5.0, 3);
    let received: Vec<_> = points[1..].iter().collect();
    c.bench_function("fuse_points/n50_d10", |b| {
        b.iter(|| fuse_points(black_box(&points[0]), black_box(&received), 10).unwrap())
    });
    let cube = Hypercube::new(1.0, d).unwrap();
    c.bench_function("project_box/d10", |b| {
        b.iter(|| project_box(black_box(&points[0]), &cube).unwrap())
    });
}

criterion_group!(benches, bench_trim, bench_cge, bench_fusion);
criterion_main!(benches);
