//! Accelerated Hausdorff distance against the exhaustive oracle. The grid
//! index should pull far ahead as the clouds grow; the oracle rows bound
//! how much.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use geogen::{brute_force_hausdorff, hausdorff};
use geogen_bench::uniform_cloud;
use std::hint::black_box;

fn bench_hausdorff(c: &mut Criterion) {
    let mut group = c.benchmark_group("hausdorff");
    group.sample_size(10);
    for &(len, dim) in &[(250usize, 2usize), (1000, 2), (3000, 2), (1000, 8)] {
        let x = uniform_cloud(len, dim, 0x5eed);
        let y = uniform_cloud(len, dim, 0x5eee);
        let tag = format!("{len}x{dim}d");
        group.bench_with_input(BenchmarkId::new("accelerated", &tag), &(), |b, _| {
            b.iter(|| hausdorff(black_box(&x), black_box(&y)).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("brute", &tag), &(), |b, _| {
            b.iter(|| brute_force_hausdorff(black_box(&x), black_box(&y)).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, bench_hausdorff);
criterion_main!(benches);
