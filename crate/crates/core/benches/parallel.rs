use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use afgl_core::aero::SolverSpec;
use afgl_core::geometry::{build_dataset, discretize, GridRange, GridSpec, Naca4Params};
use afgl_core::latent::{tsne, TsneConfig};
use afgl_core::metrics::phi_mean;
use afgl_core::nn::Tensor;
use afgl_core::parallel::Execution;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn grid() -> GridSpec {
    GridSpec {
        m: GridRange::new(0.0, 0.06, 0.02),
        p: GridRange::new(0.3, 0.5, 0.1),
        t: GridRange::new(0.08, 0.16, 0.02),
        ..GridSpec::default()
    }
}

fn bench_dataset(c: &mut Criterion) {
    let mut group = c.benchmark_group("panel_dataset");
    group.sample_size(10);
    let grid = grid();
    let solver = SolverSpec::default();
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| build_dataset(&grid, &solver, 0, exec).unwrap())
        });
    }
    group.finish();
}

fn bench_phi(c: &mut Criterion) {
    let shapes: Vec<_> = grid()
        .sections()
        .unwrap()
        .iter()
        .map(|p| discretize(p, 248).unwrap())
        .collect();
    let mut group = c.benchmark_group("phi_mean");
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| b.iter(|| phi_mean(&shapes, exec).unwrap()));
    }
    group.finish();
}

fn bench_tsne(c: &mut Criterion) {
    let rows: Vec<Vec<f64>> = (0..300)
        .map(|i| {
            let p = Naca4Params::new(0.0, 0.0, 0.06 + 0.0005 * i as f64).unwrap();
            let a = discretize(&p, 248).unwrap();
            (0..4).map(|k| a.coords()[k * 40 + 10] + (i % 3) as f64).collect()
        })
        .collect();
    let points = Tensor::from_rows(&rows).unwrap();
    let cfg = TsneConfig { iterations: 50, ..TsneConfig::default() };
    let mut group = c.benchmark_group("tsne");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| b.iter(|| tsne(&points, &cfg, exec).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, bench_dataset, bench_phi, bench_tsne);
criterion_main!(benches);
