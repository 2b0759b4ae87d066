//! Cost of the geodesic integrator as the step count grows. One RK4 step
//! evaluates the Christoffel symbols four times, so time should scale
//! linearly in the step count.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use geogen::{exp_map_numeric, ChartPoint, EmbeddedManifold};
use std::hint::black_box;

fn bench_exp_map(c: &mut Criterion) {
    let mut group = c.benchmark_group("exp_map");
    group.sample_size(10);
    let cases = [
        ("sphere", EmbeddedManifold::sphere(), vec![1.0, 0.5], vec![0.9, 1.1]),
        (
            "clifford-torus",
            EmbeddedManifold::clifford_torus(),
            vec![0.3, 5.0],
            vec![1.3, -0.7],
        ),
    ];
    for (name, manifold, q, v) in &cases {
        let q = ChartPoint::new(q.clone());
        for &steps in &[64usize, 512, 4096] {
            group.bench_with_input(
                BenchmarkId::new(*name, steps),
                &steps,
                |b, &steps| {
                    b.iter(|| {
                        exp_map_numeric(black_box(manifold), &q, black_box(v), Some(steps))
                            .unwrap()
                    })
                },
            );
        }
    }
    group.finish();
}

criterion_group!(benches, bench_exp_map);
criterion_main!(benches);
