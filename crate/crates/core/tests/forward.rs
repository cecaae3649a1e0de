use std::f64::consts::PI;

use bihscat::forward::{
    born_step, ls_residual, solve_ls, FieldKind, ScatterField, SolverOptions, WaveContext,
};
use bihscat::geometry::{norm, sub, Dim, Grid};
use bihscat::potential::{Nonlinearity, PotentialModel, Shape, Term};
use bihscat::{Complex64, Error, Execution};

fn gaussian_model(dim: Dim, amplitude: f64, law: Nonlinearity) -> PotentialModel {
    let t = Term::new(
        Shape::Gaussian {
            center: [0.1, -0.05, 0.0],
            width: 0.25,
        },
        amplitude,
    );
    PotentialModel::new(dim, vec![t], law).unwrap()
}

/// 2-D kernel assembled from Bessel values computed independently below.
fn oracle_kernel_2d(k: f64, r: f64) -> Complex64 {
    if r == 0.0 {
        return Complex64::new(0.0, 1.0 / (8.0 * k * k));
    }
    let z = k * r;
    let (j0, y0, k0) = bessel_triplet(z);
    Complex64::new(0.0, 1.0 / (8.0 * k * k))
        * (Complex64::new(j0, y0) + Complex64::new(0.0, 2.0 / PI) * k0)
}

/// `(J0, Y0, K0)`: `J0` and `K0` by quadrature of their integral
/// representations, `Y0` from the ascending series (fine for `z < 15`).
fn bessel_triplet(z: f64) -> (f64, f64, f64) {
    // J0(z) = (1/pi) int_0^pi cos(z sin t) dt; the midpoint rule is spectrally accurate.
    let m = 400;
    let j0 = (0..m)
        .map(|i| (z * (PI * (i as f64 + 0.5) / m as f64).sin()).cos())
        .sum::<f64>()
        / m as f64;
    // K0(z) = int_0^inf exp(-z cosh t) dt.
    let upper = (60.0 / z).max(1.0).acosh() + 1.0;
    let steps = 20_000;
    let dt = upper / steps as f64;
    let k0 = (0..steps)
        .map(|i| (-z * ((i as f64 + 0.5) * dt).cosh()).exp())
        .sum::<f64>()
        * dt;
    (j0, y0_series(z), k0)
}

fn y0_series(z: f64) -> f64 {
    let q = z * z / 4.0;
    let (mut j, mut s, mut term, mut harmonic) = (0.0, 0.0, 1.0, 0.0);
    for k in 0..200 {
        if k > 0 {
            term *= -q / (k * k) as f64;
            harmonic += 1.0 / k as f64;
        }
        j += term;
        s -= harmonic * term;
    }
    2.0 / PI * (((z / 2.0).ln() + 0.5772156649015329) * j + s)
}

#[test]
fn born_step_matches_direct_sum() {
    let grid = Grid::new(Dim::Two, 64, 1.0).unwrap();
    let k = 4.0;
    let ctx = WaveContext::new(Dim::Two, k, [0.6, 0.8, 0.0], 1.0).unwrap();
    let model = gaussian_model(Dim::Two, 3.0, Nonlinearity::Power { gamma: 2.0 });
    let u0 = ScatterField::zeros(grid, FieldKind::Scattered);
    let step = born_step(&u0, &model, &ctx, Execution::Parallel).unwrap();
    let n = grid.n_per_axis;
    let probes = [grid.origin_index(), 0, n * n - 1, 17 * n + 40, 50 * n + 3];
    for &p in &probes {
        let x = grid.node(p);
        let mut acc = Complex64::default();
        for j in 0..grid.len() {
            let y = grid.node(j);
            let u = ctx.incident(&y);
            let v = model.eval_complex(&y, u.norm());
            if v == Complex64::default() {
                continue;
            }
            acc -= oracle_kernel_2d(k, norm(&sub(&x, &y))) * v * u;
        }
        acc *= grid.cell_volume();
        let got = step.values[p];
        assert!(
            (got - acc).norm() <= 1e-8 * acc.norm(),
            "probe {p}: {got} vs {acc}"
        );
    }
}

#[test]
fn negative_wavenumber_gives_conjugate_field() {
    for dim in [Dim::Two, Dim::Three] {
        let grid = Grid::new(dim, if dim == Dim::Two { 64 } else { 16 }, 1.0).unwrap();
        let model = gaussian_model(dim, 2.0, Nonlinearity::Power { gamma: 2.0 });
        let ctx = WaveContext::new(dim, 6.0, [1.0, 0.0, 0.0], 1.0).unwrap();
        let opts = SolverOptions::default();
        let (plus, _) = solve_ls(&model, &ctx, &grid, &opts, Execution::Sequential).unwrap();
        let (minus, _) =
            solve_ls(&model, &ctx.negated(), &grid, &opts, Execution::Sequential).unwrap();
        let scale = plus.sup_norm();
        for (a, b) in plus.values.iter().zip(&minus.values) {
            assert!((a.conj() - b).norm() <= 1e-12 * scale);
        }
    }
}

#[test]
fn solution_stays_in_ball_and_contracts() {
    let grid = Grid::new(Dim::Two, 64, 1.0).unwrap();
    let model = gaussian_model(Dim::Two, 20.0, Nonlinearity::Power { gamma: 2.0 });
    for k in [3.0, 6.0, 12.0] {
        let ctx = WaveContext::new(Dim::Two, k, [1.0, 0.0, 0.0], 1.0).unwrap();
        let (u, trace) = solve_ls(
            &model,
            &ctx,
            &grid,
            &SolverOptions::default(),
            Execution::Parallel,
        )
        .unwrap();
        assert!(trace.converged, "k = {k}");
        let first = born_step(
            &ScatterField::zeros(grid, FieldKind::Scattered),
            &model,
            &ctx,
            Execution::Parallel,
        )
        .unwrap();
        assert!(u.sup_norm() <= 2.0 * first.sup_norm(), "k = {k}");
        assert!(
            trace.ratios().iter().all(|r| *r < 1.0),
            "k = {k}: {:?}",
            trace.ratios()
        );
    }
}

#[test]
fn contraction_ratio_falls_with_k() {
    let grid = Grid::new(Dim::Two, 64, 1.0).unwrap();
    let model = gaussian_model(Dim::Two, 20.0, Nonlinearity::Linear);
    let mut prev = f64::INFINITY;
    for k in [3.0, 6.0, 12.0, 24.0] {
        let ctx = WaveContext::new(Dim::Two, k, [1.0, 0.0, 0.0], 1.0).unwrap();
        let (_, trace) = solve_ls(
            &model,
            &ctx,
            &grid,
            &SolverOptions::default(),
            Execution::Parallel,
        )
        .unwrap();
        let ratio = trace.max_ratio();
        assert!(ratio < prev, "k = {k}: {ratio} vs {prev}");
        prev = ratio;
    }
}

#[test]
fn residual_detects_perturbation() {
    let grid = Grid::new(Dim::Two, 64, 1.0).unwrap();
    let model = gaussian_model(Dim::Two, 5.0, Nonlinearity::Power { gamma: 2.0 });
    let ctx = WaveContext::new(Dim::Two, 8.0, [1.0, 0.0, 0.0], 1.0).unwrap();
    let (mut u, _) = solve_ls(
        &model,
        &ctx,
        &grid,
        &SolverOptions::default(),
        Execution::Sequential,
    )
    .unwrap();
    assert!(ls_residual(&u, &model, &ctx, Execution::Sequential).unwrap() < 1e-9);
    let bump = 1e-3 * u.sup_norm();
    u.values[grid.origin_index()] += bump;
    assert!(ls_residual(&u, &model, &ctx, Execution::Sequential).unwrap() > 1e-4);
}

#[test]
fn refinement_converges_for_smooth_potential() {
    // Value of the scattered field at a fixed physical point as the grid refines.
    let model = gaussian_model(Dim::Two, 5.0, Nonlinearity::Power { gamma: 2.0 });
    let ctx = WaveContext::new(Dim::Two, 5.0, [1.0, 0.0, 0.0], 1.0).unwrap();
    let probe = |n: usize| {
        let grid = Grid::new(Dim::Two, n, 1.0).unwrap();
        let (u, _) = solve_ls(
            &model,
            &ctx,
            &grid,
            &SolverOptions::default(),
            Execution::Parallel,
        )
        .unwrap();
        // x = (0, 0.5) is a node on every grid here.
        let i = n / 2;
        let j = 3 * n / 4;
        u.values[i * n + j]
    };
    let (a, b, c) = (probe(32), probe(64), probe(128));
    let (e1, e2) = ((a - c).norm(), (b - c).norm());
    assert!(e2 < 0.5 * e1, "{e1} {e2}");
    assert!(e2 < 1e-2 * c.norm());
}

#[test]
fn sequential_and_parallel_agree_bitwise() {
    let grid = Grid::new(Dim::Three, 16, 1.0).unwrap();
    let model = gaussian_model(Dim::Three, 10.0, Nonlinearity::Power { gamma: 2.0 });
    let ctx = WaveContext::new(Dim::Three, 7.0, [0.0, 0.0, 1.0], 1.0).unwrap();
    let opts = SolverOptions::default();
    let (a, ta) = solve_ls(&model, &ctx, &grid, &opts, Execution::Sequential).unwrap();
    let (b, tb) = solve_ls(&model, &ctx, &grid, &opts, Execution::Parallel).unwrap();
    assert_eq!(a, b);
    assert_eq!(ta, tb);
}

#[test]
fn strong_potential_names_wavenumber() {
    let grid = Grid::new(Dim::Two, 32, 1.0).unwrap();
    let model = gaussian_model(Dim::Two, 5000.0, Nonlinearity::Linear);
    let ctx = WaveContext::new(Dim::Two, 1.5, [1.0, 0.0, 0.0], 1.0).unwrap();
    let err = solve_ls(
        &model,
        &ctx,
        &grid,
        &SolverOptions::default(),
        Execution::Sequential,
    )
    .unwrap_err();
    assert!(matches!(err, Error::NonContraction { k, .. } if k == 1.5));
    assert!(err.to_string().contains("1.5"));
}
