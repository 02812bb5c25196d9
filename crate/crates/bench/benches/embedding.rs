use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use flownet_bench::measure_cloud;
use flownet_core::classify::{diffusion_maps, kmeans, DiffusionParams};

fn embedding(c: &mut Criterion) {
    let cloud = measure_cloud(100, 51);
    let params = DiffusionParams::default();
    let emb = diffusion_maps(&cloud, 2, &params).unwrap();
    let coords = emb.coords.clone();
    let mut g = c.benchmark_group("classify/100x51");
    g.sample_size(10);
    g.bench_function("diffusion_maps", |b| {
        b.iter(|| diffusion_maps(black_box(&cloud), 2, &params).unwrap())
    });
    g.bench_function("kmeans/k7", |b| {
        b.iter(|| kmeans(black_box(&coords), emb.m, 7, 0).unwrap())
    });
    g.finish();
}

criterion_group!(benches, embedding);
criterion_main!(benches);
