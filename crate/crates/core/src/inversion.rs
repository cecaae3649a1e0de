//! Inverse fixed-angle Born approximation
//!
//! `q_B(x) = (2 pi)^-n  int_R int_S  exp(i k (theta' - theta0, x)) A(k, theta') J dtheta' dk`
//!
//! with `J = |k|^(n-1) |theta' - theta0|^2 / 2`, evaluated by direct
//! quadrature over the stored `(k, theta')` lattice and its Hermitian mirror.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::exec::{map_indexed, Execution};
use crate::farfield::{validate_k_list, AmplitudeDataset, Provenance};
use crate::geometry::{
    check_unit, dot, jacobian_weight, scale, sub, Dim, DirectionSet, Grid, Point,
};

/// Reconstruction `q_B` on a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Reconstruction {
    pub grid: Grid,
    pub values: Vec<f64>,
    /// Largest imaginary part discarded from the two-sided sum.
    pub imag_residual: f64,
    /// Range of `|k|` covered by the data.
    pub k_band: (f64, f64),
    pub provenance: Provenance,
}

impl Reconstruction {
    /// True when the imaginary residual exceeds `1e-6 max|q_B|`.
    pub fn flagged(&self) -> bool {
        let peak = self.values.iter().map(|v| v.abs()).fold(0.0, f64::max);
        self.imag_residual > 1e-6 * peak
    }
}

struct QuadraturePoint {
    xi: Point,
    weight: f64,
    plus: Complex64,
    minus: Complex64,
}

/// Evaluates `q_B` at every node of `out_grid`.
///
/// Each node sums the quadrature points in k-major, direction-minor order,
/// with the `-k` half taken from the dataset's Hermitian query.
pub fn born_invert(
    ds: &AmplitudeDataset,
    out_grid: &Grid,
    exec: Execution,
) -> Result<Reconstruction> {
    if ds.dim != out_grid.dim {
        return Err(Error::DimensionMismatch {
            expected: format!("{}-D output grid", ds.dim.n()),
            found: format!("{}-D", out_grid.dim.n()),
        });
    }
    if ds.ks.is_empty() || ds.directions.is_empty() {
        return Err(Error::Config("cannot invert an empty dataset".into()));
    }
    if !ds.real_potential {
        return Err(Error::ComplexPotential);
    }
    let dk = ds.k_weights();
    let mut points = Vec::with_capacity(ds.values.len());
    for (ki, &k) in ds.ks.iter().enumerate() {
        for (di, (d, w)) in ds
            .directions
            .directions
            .iter()
            .zip(&ds.directions.weights)
            .enumerate()
        {
            let weight = dk[ki] * w * jacobian_weight(ds.dim, k, d, &ds.theta0);
            let plus = ds.query(k, di).unwrap_or_default();
            let minus = ds.query(-k, di).unwrap_or_default();
            if weight == 0.0 || (plus == Complex64::default() && minus == Complex64::default()) {
                continue;
            }
            points.push(QuadraturePoint {
                xi: scale(&sub(d, &ds.theta0), k),
                weight,
                plus,
                minus,
            });
        }
    }
    let norm = (2.0 * PI).powi(ds.dim.n() as i32).recip();
    let n = out_grid.n_per_axis;
    let last: Vec<Vec<Complex64>> = map_indexed(exec, points.len(), |q| {
        let axis = out_grid.dim.n() - 1;
        (0..n)
            .map(|j| Complex64::cis(points[q].xi[axis] * out_grid.coord(j)))
            .collect()
    });
    let mut values = vec![0.0; out_grid.len()];
    let mut imag = vec![0.0; out_grid.len() / n];
    let row_imag: Vec<(Vec<f64>, f64)> = map_indexed(exec, out_grid.len() / n, |row| {
        let x0 = out_grid.node(row * n);
        let lead: Vec<Complex64> = points
            .iter()
            .map(|p| {
                let partial = match out_grid.dim {
                    Dim::Two => p.xi[0] * x0[0],
                    Dim::Three => p.xi[0] * x0[0] + p.xi[1] * x0[1],
                };
                Complex64::cis(partial)
            })
            .collect();
        let mut out = vec![0.0; n];
        let mut worst: f64 = 0.0;
        for (j, o) in out.iter_mut().enumerate() {
            let mut acc = Complex64::default();
            for (q, p) in points.iter().enumerate() {
                let e = lead[q] * last[q][j];
                acc += p.weight * (e * p.plus + e.conj() * p.minus);
            }
            *o = norm * acc.re;
            worst = worst.max((norm * acc.im).abs());
        }
        (out, worst)
    });
    for (row, (vals, worst)) in row_imag.into_iter().enumerate() {
        values[row * n..(row + 1) * n].copy_from_slice(&vals);
        imag[row] = worst;
    }
    Ok(Reconstruction {
        grid: *out_grid,
        values,
        imag_residual: imag.into_iter().fold(0.0, f64::max),
        k_band: ds.k_band(),
        provenance: ds.provenance,
    })
}

/// Dataset with `A(k, theta') = v0_hat(k (theta' - theta0))`.
pub fn synth_linear_dataset<F>(
    v0_hat: F,
    theta0: &Point,
    ks: &[f64],
    dirs: &DirectionSet,
    k0: f64,
) -> Result<AmplitudeDataset>
where
    F: Fn(&Point) -> Complex64,
{
    check_unit(dirs.dim, theta0)?;
    validate_k_list(ks, k0)?;
    let mut values = Vec::with_capacity(ks.len() * dirs.len());
    for &k in ks {
        for d in &dirs.directions {
            values.push(v0_hat(&scale(&sub(d, theta0), k)));
        }
    }
    AmplitudeDataset::new(
        *theta0,
        k0,
        ks.to_vec(),
        dirs.clone(),
        values,
        Provenance::SyntheticLinear,
    )
}

/// Dataset of the grid transform `sum_y h^n V(y) exp(-i (xi, y))` of sampled
/// values, i.e. the exact first Born amplitudes of the sampled potential.
pub fn sampled_linear_dataset(
    samples: &[f64],
    grid: &Grid,
    theta0: &Point,
    ks: &[f64],
    dirs: &DirectionSet,
    k0: f64,
    exec: Execution,
) -> Result<AmplitudeDataset> {
    if samples.len() != grid.len() || dirs.dim != grid.dim {
        return Err(Error::DimensionMismatch {
            expected: format!("{} samples on a {}-D grid", grid.len(), grid.dim.n()),
            found: format!("{} samples, {}-D directions", samples.len(), dirs.dim.n()),
        });
    }
    check_unit(dirs.dim, theta0)?;
    validate_k_list(ks, k0)?;
    let support: Vec<(Point, f64)> = samples
        .iter()
        .enumerate()
        .filter(|(_, v)| **v != 0.0)
        .map(|(i, v)| (grid.node(i), *v))
        .collect();
    let w = grid.cell_volume();
    let m = dirs.len();
    let values = map_indexed(exec, ks.len() * m, |q| {
        let xi = scale(&sub(&dirs.directions[q % m], theta0), ks[q / m]);
        let mut acc = Complex64::default();
        for (y, v) in &support {
            acc += Complex64::cis(-dot(&xi, y)) * *v;
        }
        acc * w
    });
    AmplitudeDataset::new(
        *theta0,
        k0,
        ks.to_vec(),
        dirs.clone(),
        values,
        Provenance::SyntheticLinear,
    )
}

/// Fourier transform of `exp(-|x - c|^2 / width^2)`.
pub fn gaussian_hat(dim: Dim, center: Point, width: f64) -> impl Fn(&Point) -> Complex64 {
    let n = dim.n() as i32;
    let amp = (PI.sqrt() * width).powi(n);
    move |xi: &Point| {
        amp * (-0.25 * width * width * dot(xi, xi)).exp() * Complex64::cis(-dot(xi, &center))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::sphere_quadrature;

    #[test]
    fn zero_dataset_gives_zero_field() {
        let dirs = sphere_quadrature(Dim::Two, 8).unwrap();
        let ds = synth_linear_dataset(
            |_| Complex64::default(),
            &[1.0, 0.0, 0.0],
            &[1.0, 2.0],
            &dirs,
            1.0,
        )
        .unwrap();
        let grid = Grid::new(Dim::Two, 16, 1.0).unwrap();
        let r = born_invert(&ds, &grid, Execution::Sequential).unwrap();
        assert!(r.values.iter().all(|v| *v == 0.0));
        assert_eq!(r.imag_residual, 0.0);
    }

    #[test]
    fn dimension_mismatch() {
        let dirs = sphere_quadrature(Dim::Two, 8).unwrap();
        let ds = synth_linear_dataset(
            |_| Complex64::new(1.0, 0.0),
            &[1.0, 0.0, 0.0],
            &[1.0, 2.0],
            &dirs,
            1.0,
        )
        .unwrap();
        let grid = Grid::new(Dim::Three, 16, 1.0).unwrap();
        assert!(matches!(
            born_invert(&ds, &grid, Execution::Sequential),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn complex_potential_rejected() {
        let dirs = sphere_quadrature(Dim::Two, 8).unwrap();
        let mut ds = synth_linear_dataset(
            |_| Complex64::new(1.0, 0.0),
            &[1.0, 0.0, 0.0],
            &[1.0, 2.0],
            &dirs,
            1.0,
        )
        .unwrap();
        ds.real_potential = false;
        let grid = Grid::new(Dim::Two, 16, 1.0).unwrap();
        assert!(matches!(
            born_invert(&ds, &grid, Execution::Sequential),
            Err(Error::ComplexPotential)
        ));
    }
}
