//! Building explicit convolution matrices and measuring their rank. The
//! matrix has (spatial/stride)^2*out rows and spatial^2*in columns, so the
//! elimination dominates once the spatial size grows.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use geogen::{build_conv_matrix, numeric_rank, Activation, Layer, LayerKind};
use std::hint::black_box;

fn layer(spatial: usize) -> Layer {
    let kind = LayerKind::Conv {
        in_channels: 3,
        out_channels: 4,
        spatial,
        kernel: 3,
        stride: 1,
    };
    let mut rng = geogen::rng::seeded_rng(0xc0de);
    Layer::initialized(kind, Activation::Identity, &mut rng).expect("layer")
}

fn bench_conv_matrix(c: &mut Criterion) {
    let mut group = c.benchmark_group("conv_matrix");
    group.sample_size(10);
    for &spatial in &[4usize, 8, 12] {
        let l = layer(spatial);
        group.bench_with_input(BenchmarkId::new("build", spatial), &(), |b, _| {
            b.iter(|| build_conv_matrix(black_box(&l)).unwrap())
        });
        let m = build_conv_matrix(&l).unwrap();
        group.bench_with_input(BenchmarkId::new("rank", spatial), &(), |b, _| {
            b.iter(|| numeric_rank(black_box(&m.matrix.view()), None))
        });
    }
    group.finish();
}

criterion_group!(benches, bench_conv_matrix);
criterion_main!(benches);
