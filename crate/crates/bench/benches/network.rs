use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use flownet_bench::{double_gyre, EPSILON};
use flownet_core::flows::generate_map_ensemble;
use flownet_core::measures::{betweenness_sampled, clustering, triangles};
use flownet_core::netbuild::build_adjacency;

fn construction(c: &mut Criterion) {
    let mut g = c.benchmark_group("build_adjacency");
    g.sample_size(10);
    for (ny, nz) in [(100, 51), (200, 101)] {
        let ens = double_gyre(ny, nz, 20.0);
        g.bench_with_input(BenchmarkId::new("double_gyre", format!("{ny}x{nz}")), &ens, |b, e| {
            b.iter(|| build_adjacency(black_box(e), EPSILON).unwrap())
        });
    }
    let map = generate_map_ensemble(1000, 100).unwrap();
    g.bench_function("map1d/1000x100", |b| {
        b.iter(|| build_adjacency(black_box(&map), 0.01).unwrap())
    });
    g.finish();
}

fn measures(c: &mut Criterion) {
    let ens = double_gyre(200, 101, 20.0);
    let a = build_adjacency(&ens, EPSILON).unwrap();
    let mut g = c.benchmark_group("measures/200x101");
    g.sample_size(10);
    g.bench_function("triangles", |b| b.iter(|| triangles(black_box(&a))));
    g.bench_function("clustering", |b| b.iter(|| clustering(black_box(&a))));
    if a.is_connected() {
        g.bench_function("betweenness_sampled/50", |b| {
            b.iter(|| betweenness_sampled(black_box(&a), 50, 0).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, construction, measures);
criterion_main!(benches);
