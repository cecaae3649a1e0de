use std::hint::black_box;

use bihscat::exec::Execution;
use bihscat::farfield::sweep;
use bihscat::forward::{GreenOperator, SolverOptions};
use bihscat::geometry::{sphere_quadrature, Dim, Grid};
use bihscat::inversion::{born_invert, gaussian_hat, synth_linear_dataset};
use bihscat::potential::{Nonlinearity, PotentialModel, Shape, Term};
use bihscat::Complex64;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

const MODES: [(&str, Execution); 2] = [
    ("sequential", Execution::Sequential),
    ("parallel", Execution::Parallel),
];

fn convolution(c: &mut Criterion) {
    let mut group = c.benchmark_group("green_convolution");
    for n in [128usize, 256] {
        let grid = Grid::new(Dim::Two, n, 2.0).unwrap();
        let op = GreenOperator::new(&grid, 12.0, Execution::Parallel).unwrap();
        let src: Vec<Complex64> = (0..grid.len())
            .map(|i| Complex64::new((i % 7) as f64, 0.0))
            .collect();
        for (name, exec) in MODES {
            group.bench_with_input(BenchmarkId::new(name, n), &n, |b, _| {
                b.iter(|| op.apply(black_box(&src), exec))
            });
        }
    }
    group.finish();
}

fn inversion(c: &mut Criterion) {
    let mut group = c.benchmark_group("born_invert");
    group.sample_size(10);
    let dirs = sphere_quadrature(Dim::Two, 64).unwrap();
    let ks: Vec<f64> = (1..=32).map(|i| 0.75 * i as f64).collect();
    let ds = synth_linear_dataset(
        gaussian_hat(Dim::Two, [0.0; 3], 1.0),
        &[1.0, 0.0, 0.0],
        &ks,
        &dirs,
        0.75,
    )
    .unwrap();
    let grid = Grid::new(Dim::Two, 64, 4.0).unwrap();
    for (name, exec) in MODES {
        group.bench_function(name, |b| {
            b.iter(|| born_invert(black_box(&ds), &grid, exec).unwrap())
        });
    }
    group.finish();
}

fn forward_sweep(c: &mut Criterion) {
    let mut group = c.benchmark_group("forward_sweep");
    group.sample_size(10);
    let grid = Grid::new(Dim::Two, 64, 1.5).unwrap();
    let model = PotentialModel::new(
        Dim::Two,
        vec![Term::new(
            Shape::Ball {
                center: [0.0; 3],
                radius: 0.5,
            },
            1.0,
        )],
        Nonlinearity::Power { gamma: 2.0 },
    )
    .unwrap();
    let dirs = sphere_quadrature(Dim::Two, 32).unwrap();
    let ks: Vec<f64> = (0..8).map(|i| 8.0 + 2.0 * i as f64).collect();
    let opts = SolverOptions::default();
    for (name, exec) in MODES {
        group.bench_function(name, |b| {
            b.iter(|| {
                sweep(
                    &model,
                    &[1.0, 0.0, 0.0],
                    black_box(&ks),
                    &dirs,
                    &grid,
                    8.0,
                    &opts,
                    exec,
                )
                .unwrap()
            })
        });
    }
    group.finish();
}

criterion_group!(benches, convolution, inversion, forward_sweep);
criterion_main!(benches);
