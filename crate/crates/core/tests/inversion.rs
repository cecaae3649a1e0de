use std::f64::consts::PI;

use bihscat::geometry::{dot, norm, sphere_quadrature, Dim, Grid, Point};
use bihscat::inversion::{born_invert, gaussian_hat, sampled_linear_dataset, synth_linear_dataset};
use bihscat::{Complex64, Execution};

fn lattice() -> Vec<f64> {
    (1..=96).map(|i| 0.25 * i as f64).collect()
}

/// `J1(z) = (1/pi) int_0^pi cos(t - z sin t) dt`, midpoint rule on a periodic integrand.
fn bessel_j1(z: f64) -> f64 {
    let m = 256;
    (0..m)
        .map(|i| {
            let t = PI * (i as f64 + 0.5) / m as f64;
            (t - z * t.sin()).cos()
        })
        .sum::<f64>()
        / m as f64
}

#[test]
fn gaussian_is_recovered_from_linear_data() {
    let dirs = sphere_quadrature(Dim::Two, 128).unwrap();
    let theta0 = [1.0, 0.0, 0.0];
    let ds = synth_linear_dataset(
        gaussian_hat(Dim::Two, [0.0; 3], 1.0),
        &theta0,
        &lattice(),
        &dirs,
        0.25,
    )
    .unwrap();
    let grid = Grid::new(Dim::Two, 64, 2.0).unwrap();
    let rec = born_invert(&ds, &grid, Execution::Parallel).unwrap();
    let (mut num, mut den) = (0.0, 0.0);
    for (i, q) in rec.values.iter().enumerate() {
        let x = grid.node(i);
        let v = (-dot(&x, &x)).exp();
        num += (q - v).powi(2);
        den += v * v;
    }
    assert!(
        (num / den).sqrt() <= 0.05,
        "relative L2 error {}",
        (num / den).sqrt()
    );
    assert!(!rec.flagged());
}

#[test]
fn lattice_sum_matches_cartesian_band_integral() {
    // (2 pi)^-2 times the integral of V0_hat(xi) exp(i x.xi) over the xi covered by the k cells.
    let dirs = sphere_quadrature(Dim::Two, 128).unwrap();
    let theta0 = [1.0, 0.0, 0.0];
    let hat = gaussian_hat(Dim::Two, [0.2, -0.1, 0.0], 1.0);
    let ds = synth_linear_dataset(&hat, &theta0, &lattice(), &dirs, 0.25).unwrap();
    let grid = Grid::new(Dim::Two, 16, 2.0).unwrap();
    let rec = born_invert(&ds, &grid, Execution::Sequential).unwrap();
    let (k_lo, k_hi) = ds.k_band();
    let h = 0.01;
    let m = 1200;
    for idx in [grid.origin_index(), 0, 37, 130, 201] {
        let x = grid.node(idx);
        let mut acc = 0.0;
        for i in -m..m {
            for j in -m..m {
                let xi = [h * (i as f64 + 0.5), h * (j as f64 + 0.5), 0.0];
                let k = dot(&xi, &xi) / (2.0 * xi[0].abs());
                if k < k_lo || k > k_hi {
                    continue;
                }
                acc += (hat(&xi) * Complex64::cis(dot(&xi, &x))).re;
            }
        }
        let oracle = acc * h * h / (4.0 * PI * PI);
        let got = rec.values[idx];
        assert!((got - oracle).abs() < 5e-3, "node {idx}: {got} vs {oracle}");
    }
}

#[test]
fn reconstruction_commutes_with_translation() {
    let dirs = sphere_quadrature(Dim::Two, 64).unwrap();
    let theta0 = [0.6, 0.8, 0.0];
    let ks: Vec<f64> = (1..=48).map(|i| 0.5 * i as f64).collect();
    let grid = Grid::new(Dim::Two, 32, 2.0).unwrap();
    let shift = 4;
    let c: Point = [shift as f64 * grid.spacing(), 0.0, 0.0];
    let centred = synth_linear_dataset(
        gaussian_hat(Dim::Two, [0.0; 3], 0.5),
        &theta0,
        &ks,
        &dirs,
        0.5,
    )
    .unwrap();
    let moved =
        synth_linear_dataset(gaussian_hat(Dim::Two, c, 0.5), &theta0, &ks, &dirs, 0.5).unwrap();
    let a = born_invert(&centred, &grid, Execution::Sequential).unwrap();
    let b = born_invert(&moved, &grid, Execution::Sequential).unwrap();
    let n = grid.n_per_axis;
    let peak = a.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for i in 0..n - shift {
        for j in 0..n {
            let diff = (b.values[(i + shift) * n + j] - a.values[i * n + j]).abs();
            assert!(diff < 1e-10 * peak, "node ({i}, {j})");
        }
    }
}

#[test]
fn ball_reconstruction_has_correct_levels() {
    let a = 0.5;
    let hat = move |xi: &Point| {
        let r = norm(xi);
        let v = if r < 1e-12 {
            PI * a * a
        } else {
            2.0 * PI * a * bessel_j1(a * r) / r
        };
        Complex64::new(v, 0.0)
    };
    let dirs = sphere_quadrature(Dim::Two, 128).unwrap();
    let ds = synth_linear_dataset(hat, &[1.0, 0.0, 0.0], &lattice(), &dirs, 0.25).unwrap();
    let grid = Grid::new(Dim::Two, 32, 1.0).unwrap();
    let rec = born_invert(&ds, &grid, Execution::Parallel).unwrap();
    let centre = rec.values[grid.origin_index()];
    assert!((centre - 1.0).abs() < 0.05, "centre value {centre}");
    let exterior: Vec<f64> = rec
        .values
        .iter()
        .enumerate()
        .filter(|(i, _)| norm(&grid.node(*i)) > 0.8)
        .map(|(_, q)| *q)
        .collect();
    let rms = (exterior.iter().map(|q| q * q).sum::<f64>() / exterior.len() as f64).sqrt();
    // Streaks along theta0 from the unreachable slab |xi_1| < |xi|^2 / (2 k_max) remain.
    assert!(rms < 0.06, "exterior rms {rms}");
}

#[test]
fn sampled_data_reproduces_dtft() {
    let grid = Grid::new(Dim::Two, 16, 1.0).unwrap();
    let samples: Vec<f64> = (0..grid.len())
        .map(|i| ((i * 7) % 11) as f64 - 5.0)
        .collect();
    let dirs = sphere_quadrature(Dim::Two, 8).unwrap();
    let theta0 = [1.0, 0.0, 0.0];
    let ds = sampled_linear_dataset(
        &samples,
        &grid,
        &theta0,
        &[1.0, 3.0],
        &dirs,
        1.0,
        Execution::Parallel,
    )
    .unwrap();
    let d = dirs.directions[3];
    let xi = [3.0 * (d[0] - 1.0), 3.0 * d[1], 0.0];
    let mut expected = Complex64::default();
    for (i, s) in samples.iter().enumerate() {
        expected += Complex64::cis(-dot(&xi, &grid.node(i))) * s * grid.cell_volume();
    }
    assert!((ds.value(1, 3) - expected).norm() < 1e-12 * expected.norm().max(1.0));
}

#[test]
fn imaginary_part_cancels_and_execution_is_deterministic() {
    let dirs = sphere_quadrature(Dim::Two, 32).unwrap();
    let theta0 = [0.0, 1.0, 0.0];
    let ks: Vec<f64> = (1..=20).map(|i| 0.7 * i as f64).collect();
    let ds = synth_linear_dataset(
        gaussian_hat(Dim::Two, [0.3, -0.2, 0.0], 0.4),
        &theta0,
        &ks,
        &dirs,
        0.7,
    )
    .unwrap();
    let grid = Grid::new(Dim::Two, 32, 1.5).unwrap();
    let seq = born_invert(&ds, &grid, Execution::Sequential).unwrap();
    let par = born_invert(&ds, &grid, Execution::Parallel).unwrap();
    assert_eq!(seq, par);
    let peak = seq.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    assert!(seq.imag_residual <= 1e-12 * peak);
}

#[test]
fn three_dimensional_gaussian() {
    let dirs = sphere_quadrature(Dim::Three, 32).unwrap();
    let theta0 = [0.0, 0.0, 1.0];
    let ds = synth_linear_dataset(
        gaussian_hat(Dim::Three, [0.0; 3], 1.0),
        &theta0,
        &lattice(),
        &dirs,
        0.25,
    )
    .unwrap();
    let grid = Grid::new(Dim::Three, 16, 2.0).unwrap();
    let rec = born_invert(&ds, &grid, Execution::Parallel).unwrap();
    let centre = rec.values[grid.origin_index()];
    assert!((centre - 1.0).abs() < 0.05, "centre value {centre}");
}
