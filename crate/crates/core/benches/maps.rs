//! Grid workloads: rayon pool vs a single-thread pool running the same
//! code path.
//!
//! `cargo bench` exercises the default parallel build; the "sequential"
//! rows install a one-thread rayon pool around the identical call, which
//! matches what the `--no-default-features` build does in a plain loop.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use spinres_core::dk::{dk_basins, dk_onset, BasinGrid, DkParams};
use spinres_core::rd::rd_stability_map;

fn single_thread_pool() -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .expect("pool")
}

fn bench_rd_map(c: &mut Criterion) {
    let mut group = c.benchmark_group("rd_stability_map_200x200");
    group.sample_size(10);
    group.bench_function(BenchmarkId::new("map", "parallel"), |b| {
        b.iter(|| rd_stability_map(3.0, (-2.0, 8.0), (0.0, 10.0), 200, 200).unwrap())
    });
    let pool = single_thread_pool();
    group.bench_function(BenchmarkId::new("map", "sequential"), |b| {
        b.iter(|| {
            pool.install(|| rd_stability_map(3.0, (-2.0, 8.0), (0.0, 10.0), 200, 200).unwrap())
        })
    });
    group.finish();
}

fn bench_dk_basins(c: &mut Criterion) {
    let p0 = DkParams {
        gamma_1: 0.4,
        gamma_2: 0.6,
        gamma_3: 0.01,
        omega_k: -0.1,
        omega_1: 0.0,
        omega_d: 0.0,
    };
    let onset = dk_onset(&p0).unwrap();
    let params = p0.with_drive(1.7 * onset.omega_dc, 3.0 * onset.omega_1c);
    let probe = dk_basins(&params, None, 2).unwrap();
    let grid = BasinGrid::auto(&probe.fixed_points, 32);
    let mut group = c.benchmark_group("dk_basins_32x32");
    group.sample_size(10);
    group.bench_function(BenchmarkId::new("basins", "parallel"), |b| {
        b.iter(|| dk_basins(&params, Some(grid), 32).unwrap())
    });
    let pool = single_thread_pool();
    group.bench_function(BenchmarkId::new("basins", "sequential"), |b| {
        b.iter(|| pool.install(|| dk_basins(&params, Some(grid), 32).unwrap()))
    });
    group.finish();
}

criterion_group!(benches, bench_rd_map, bench_dk_basins);
criterion_main!(benches);
