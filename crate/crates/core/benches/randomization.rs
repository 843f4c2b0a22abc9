//! Throughput of the stability-selection loops under different worker
//! counts. One thread approximates the sequential build; the spread to
//! higher counts shows what the data-parallel repetitions buy.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use wardsel::{
    cut_tree, generate_dataset, lambda_max, randomized_lasso, randomized_ward_lasso,
    reduce_by_partition, ward_cluster, ClusterSource, RandomizationConfig, SimSpec, SpatialGrid,
};

struct Workload {
    x: wardsel::DesignMatrix,
    y: wardsel::TargetVector,
    grid: SpatialGrid,
    cfg: RandomizationConfig,
}

fn workload() -> Workload {
    let spec = SimSpec {
        rows: 16,
        cols: 32,
        n_samples: 96,
        support_size: 32,
        cluster_size: 8,
        smoothing: 1.5,
        beta_min: 0.2,
        explained_variance: 0.8,
        seed: 11,
    };
    let (x, y, _) = generate_dataset(&spec).unwrap();
    let grid = SpatialGrid::new(spec.rows, spec.cols).unwrap();
    let q = 64;
    let reduced = reduce_by_partition(&x, &cut_tree(&ward_cluster(&x, &grid).unwrap(), q).unwrap())
        .unwrap();
    let lambda = 0.3 * lambda_max(&reduced, &y).unwrap();
    let cfg = RandomizationConfig::new(lambda, 5).with_repetitions(40).with_clusters(q);
    Workload { x, y, grid, cfg }
}

fn stability_loops(c: &mut Criterion) {
    let w = workload();

    let mut group = c.benchmark_group("randomized_ward_lasso");
    group.sample_size(10);
    for threads in [1usize, 2, 4] {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(threads), &threads, |b, _| {
            b.iter(|| {
                pool.install(|| {
                    black_box(
                        randomized_ward_lasso(
                            &w.x,
                            &w.y,
                            &w.grid,
                            &w.cfg,
                            ClusterSource::Randomized,
                        )
                        .unwrap(),
                    )
                })
            })
        });
    }
    group.finish();

    let mut group = c.benchmark_group("randomized_lasso");
    group.sample_size(10);
    for threads in [1usize, 2, 4] {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(threads), &threads, |b, _| {
            b.iter(|| pool.install(|| black_box(randomized_lasso(&w.x, &w.y, &w.cfg).unwrap())))
        });
    }
    group.finish();
}

criterion_group!(benches, stability_loops);
criterion_main!(benches);
