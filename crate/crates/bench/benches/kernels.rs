use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use mobses_core::indicators::{entropy, k_radius_of_gyration, radius_of_gyration, travel_diversity, Visit};
use mobses_core::pca::run_pca;
use mobses_core::ses::stratify_equal_sum;
use mobses_core::spatial::{dbscan, voronoi_cells, MergedId, Point, Polygon};
use mobses_core::VisitHistogram;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn points(rng: &mut ChaCha8Rng, n: usize, radius: f64) -> Vec<Point> {
    (0..n)
        .map(|_| {
            let r = radius * rng.random::<f64>().sqrt();
            let a = rng.random_range(0.0..std::f64::consts::TAU);
            Point::new(r * a.cos(), r * a.sin())
        })
        .collect()
}

fn indicators(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let h = VisitHistogram::new(points(&mut rng, 40, 20_000.0).into_iter().enumerate().map(|(i, pos)| Visit {
        id: MergedId(i as u32),
        pos,
        count: rng.random_range(1..100),
    }));
    let seq: Vec<MergedId> = (0..2000).map(|_| MergedId(rng.random_range(0..40))).collect();
    c.bench_function("radius_of_gyration/40", |b| b.iter(|| radius_of_gyration(black_box(&h))));
    c.bench_function("k_radius_of_gyration/40,k=2", |b| b.iter(|| k_radius_of_gyration(black_box(&h), 2)));
    c.bench_function("entropy/40", |b| b.iter(|| entropy(black_box(&h))));
    c.bench_function("travel_diversity/2000,k=2", |b| b.iter(|| travel_diversity(black_box(&seq), 2, true)));
}

fn spatial(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let sites = points(&mut rng, 3000, 25_000.0);
    c.bench_function("dbscan/3000,eps=100m", |b| b.iter(|| dbscan(black_box(&sites), 100.0, 1)));
    let boundary = Polygon::circle(Point::new(0.0, 0.0), 27_000.0, 360);
    let sites = points(&mut rng, 300, 25_000.0);
    c.bench_function("voronoi/300", |b| b.iter(|| voronoi_cells(black_box(&sites), &boundary).unwrap()));
}

fn analysis(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let data: Vec<Vec<f64>> = (0..60).map(|_| (0..60).map(|_| rng.random::<f64>()).collect()).collect();
    c.bench_function("pca/60x60", |b| b.iter(|| run_pca(black_box(&data)).unwrap()));
    let values: Vec<(usize, f64)> = (0..10_000).map(|i| (i, rng.random_range(2.0e5..1.2e6))).collect();
    c.bench_function("stratify_equal_sum/10000,q=10", |b| {
        b.iter_batched(|| values.clone(), |v| stratify_equal_sum(&v, 10).unwrap(), BatchSize::SmallInput)
    });
}

criterion_group!(benches, indicators, spatial, analysis);
criterion_main!(benches);
