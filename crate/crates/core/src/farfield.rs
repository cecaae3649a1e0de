//! Scattering amplitudes, fixed-angle datasets and the far-field expansion.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{map_indexed, Execution};
use crate::forward::{
    scattering_source, solve_with, GreenOperator, IterationTrace, ScatterField, SolverOptions,
    WaveContext,
};
use crate::geometry::{check_unit, dot, norm, sub, Dim, DirectionSet, Grid, Point};
use crate::potential::PotentialModel;
use crate::special::green_kernel;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Solver,
    SyntheticLinear,
    /// Read from a file without a sidecar.
    Unspecified,
}

/// `A(k, theta')` on a `k x theta'` lattice for one incident direction.
///
/// Values at negative `k` are the conjugates of the stored values and values
/// with `|k| < k0` are zero; neither is stored.
#[derive(Clone, Debug, PartialEq)]
pub struct AmplitudeDataset {
    pub dim: Dim,
    pub theta0: Point,
    pub k0: f64,
    pub ks: Vec<f64>,
    pub directions: DirectionSet,
    /// k-major: `values[ki * directions.len() + di]`.
    pub values: Vec<Complex64>,
    pub provenance: Provenance,
    pub real_potential: bool,
}

impl AmplitudeDataset {
    pub fn new(
        theta0: Point,
        k0: f64,
        ks: Vec<f64>,
        directions: DirectionSet,
        values: Vec<Complex64>,
        provenance: Provenance,
    ) -> Result<AmplitudeDataset> {
        let dim = directions.dim;
        check_unit(dim, &theta0)?;
        validate_k_list(&ks, k0)?;
        if values.len() != ks.len() * directions.len() {
            return Err(Error::DimensionMismatch {
                expected: format!("{} values", ks.len() * directions.len()),
                found: format!("{} values", values.len()),
            });
        }
        Ok(AmplitudeDataset {
            dim,
            theta0,
            k0,
            ks,
            directions,
            values,
            provenance,
            real_potential: true,
        })
    }

    pub fn row(&self, ki: usize) -> &[Complex64] {
        let m = self.directions.len();
        &self.values[ki * m..(ki + 1) * m]
    }

    pub fn value(&self, ki: usize, di: usize) -> Complex64 {
        self.values[ki * self.directions.len() + di]
    }

    /// `A(k, theta'_di)` for any real `k` on the stored lattice or below the cutoff.
    pub fn query(&self, k: f64, di: usize) -> Option<Complex64> {
        if k.abs() < self.k0 {
            return Some(Complex64::default());
        }
        let ki = self.ks.binary_search_by(|p| p.total_cmp(&k.abs())).ok()?;
        let v = self.value(ki, di);
        Some(if k < 0.0 { v.conj() } else { v })
    }

    /// Midpoint-rule cell widths of the k lattice.
    ///
    /// Cell boundaries sit halfway between neighbouring samples; the outer
    /// cells are symmetric about their sample. A single sample has no width.
    pub fn k_weights(&self) -> Vec<f64> {
        let ks = &self.ks;
        let m = ks.len();
        if m < 2 {
            return vec![0.0; m];
        }
        (0..m)
            .map(|i| {
                let lo = if i == 0 {
                    ks[0] - 0.5 * (ks[1] - ks[0])
                } else {
                    0.5 * (ks[i - 1] + ks[i])
                };
                let hi = if i == m - 1 {
                    ks[i] + 0.5 * (ks[i] - ks[i - 1])
                } else {
                    0.5 * (ks[i] + ks[i + 1])
                };
                hi - lo
            })
            .collect()
    }

    /// Range of `|k|` covered by the k cells.
    pub fn k_band(&self) -> (f64, f64) {
        let w = self.k_weights();
        match (self.ks.first(), self.ks.last()) {
            (Some(a), Some(b)) => (a - 0.5 * w[0], b + 0.5 * w[w.len() - 1]),
            _ => (0.0, 0.0),
        }
    }

    pub fn max_row_norm(&self, ki: usize) -> f64 {
        self.row(ki).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

pub(crate) fn validate_k_list(ks: &[f64], k0: f64) -> Result<()> {
    if !(k0 > 0.0) || !k0.is_finite() {
        return Err(Error::Config(format!(
            "cutoff k0 must be positive, got {k0}"
        )));
    }
    if ks.iter().any(|k| !k.is_finite() || *k < k0) {
        return Err(Error::Config(format!(
            "all sampled k must be finite and >= k0 = {k0}"
        )));
    }
    if ks.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config(
            "sampled k must be strictly increasing".into(),
        ));
    }
    Ok(())
}

/// `sum_y h^n exp(-i k (theta', y)) s(y)` over a sparse source.
fn amplitude_of_source(
    source: &[(usize, Complex64)],
    grid: &Grid,
    k: f64,
    theta_p: &Point,
) -> Complex64 {
    let w = grid.cell_volume();
    let mut acc = Complex64::default();
    for (idx, s) in source {
        acc += Complex64::cis(-k * dot(theta_p, &grid.node(*idx))) * s;
    }
    acc * w
}

/// `A(k, theta') = int exp(-i k (theta', y)) V(y, |u|) u(y) dy` for a total field `u`.
pub fn amplitude(
    u_total: &ScatterField,
    model: &PotentialModel,
    ctx: &WaveContext,
    theta_p: &Point,
) -> Result<Complex64> {
    check_unit(ctx.dim, theta_p)?;
    let grid = u_total.grid;
    let potential = model.sample(&grid);
    let mut acc = Complex64::default();
    for (j, &idx) in potential.nodes.iter().enumerate() {
        let u = u_total.values[idx];
        acc += Complex64::cis(-ctx.k * dot(theta_p, &grid.node(idx)))
            * potential.coefficient(j, u.norm())
            * u;
    }
    Ok(acc * grid.cell_volume())
}

/// Result of one forward solve in a sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub k: f64,
    pub amplitudes: Vec<Complex64>,
    pub trace: IterationTrace,
    pub u_sc_sup: f64,
}

/// Solves once per `k` and evaluates the amplitude in every direction.
///
/// Rows come back in the order of `ks`; a failed solve leaves its error in place.
pub fn sweep(
    model: &PotentialModel,
    theta0: &Point,
    ks: &[f64],
    dirs: &DirectionSet,
    grid: &Grid,
    k0: f64,
    opts: &SolverOptions,
    exec: Execution,
) -> Result<Vec<Result<SweepRow>>> {
    if model.dim != grid.dim || dirs.dim != grid.dim {
        return Err(Error::DimensionMismatch {
            expected: format!("{}-D", grid.dim.n()),
            found: format!("model {}-D, directions {}-D", model.dim.n(), dirs.dim.n()),
        });
    }
    validate_k_list(ks, k0)?;
    check_unit(grid.dim, theta0)?;
    let potential = model.sample(grid);
    Ok(map_indexed(exec, ks.len(), |i| {
        let k = ks[i];
        let ctx = WaveContext::new(grid.dim, k, *theta0, k0)?;
        if potential.is_empty() {
            let trace = IterationTrace {
                deltas: vec![0.0],
                norms: vec![0.0],
                converged: true,
                iterations: 1,
            };
            return Ok(SweepRow {
                k,
                amplitudes: vec![Complex64::default(); dirs.len()],
                trace,
                u_sc_sup: 0.0,
            });
        }
        let op = GreenOperator::new(grid, k, exec)?;
        let (u, trace) = solve_with(&potential, &ctx, grid, &op, opts, exec)?;
        let source = scattering_source(&u.values, grid, &potential, &ctx);
        let amplitudes = dirs
            .directions
            .iter()
            .map(|d| amplitude_of_source(&source, grid, k, d))
            .collect();
        Ok(SweepRow {
            k,
            amplitudes,
            trace,
            u_sc_sup: u.sup_norm(),
        })
    }))
}

/// One forward solve per `k`, amplitudes for all directions.
///
/// Fails with the non-contraction error of the smallest failing `k`.
pub fn build_dataset(
    model: &PotentialModel,
    theta0: &Point,
    ks: &[f64],
    dirs: &DirectionSet,
    grid: &Grid,
    k0: f64,
    opts: &SolverOptions,
    exec: Execution,
) -> Result<AmplitudeDataset> {
    let rows = sweep(model, theta0, ks, dirs, grid, k0, opts, exec)?;
    let mut values = Vec::with_capacity(ks.len() * dirs.len());
    for row in rows {
        values.extend(row?.amplitudes);
    }
    let mut ds = AmplitudeDataset::new(
        *theta0,
        k0,
        ks.to_vec(),
        dirs.clone(),
        values,
        Provenance::Solver,
    )?;
    ds.real_potential = model.is_real();
    Ok(ds)
}

/// `u_sc(x) = -int G_k(|x - y|) V(y, |u|) u(y) dy` at an arbitrary point by direct quadrature.
pub fn exterior_field(
    u_sc: &ScatterField,
    model: &PotentialModel,
    ctx: &WaveContext,
    x: &Point,
) -> Result<Complex64> {
    let grid = u_sc.grid;
    let potential = model.sample(&grid);
    let source = scattering_source(&u_sc.values, &grid, &potential, ctx);
    let mut acc = Complex64::default();
    for (idx, s) in &source {
        let r = norm(&sub(x, &grid.node(*idx)));
        acc -= green_kernel(ctx.k, r, ctx.dim)? * s;
    }
    Ok(acc * grid.cell_volume())
}

/// The constant `-(i exp(-i (n-1) pi / 4)) / (4 (2 pi)^((n-1)/2))` of the far-field expansion.
pub fn farfield_constant(dim: Dim) -> Complex64 {
    let m = dim.n() as f64 - 1.0;
    -Complex64::new(0.0, 1.0) * Complex64::cis(-m * PI / 4.0) / (4.0 * (2.0 * PI).powf(0.5 * m))
}

/// Far-field factor multiplying `A(k, x/|x|)` at distance `radius`.
pub fn farfield_factor(dim: Dim, k: f64, radius: f64) -> Complex64 {
    let n = dim.n() as f64;
    farfield_constant(dim) * k.powf(0.5 * (n - 7.0)) * Complex64::cis(k * radius)
        / radius.powf(0.5 * (n - 1.0))
}

/// Relative error between `u_sc(x)` and its far-field approximation from `A(k, x/|x|)`.
pub fn farfield_check(
    u_sc_at_x: Complex64,
    a_val: Complex64,
    ctx: &WaveContext,
    x: &Point,
    support_radius: f64,
) -> Result<f64> {
    let r = norm(x);
    if r <= support_radius {
        return Err(Error::Domain(format!(
            "probe radius {r} lies inside the potential support ({support_radius})"
        )));
    }
    let predicted = farfield_factor(ctx.dim, ctx.k, r) * a_val;
    Ok((u_sc_at_x - predicted).norm() / u_sc_at_x.norm().max(1e-300))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::sphere_quadrature;

    #[test]
    fn three_dimensional_constant() {
        let c = farfield_constant(Dim::Three);
        assert!((c - Complex64::new(-1.0 / (8.0 * PI), 0.0)).norm() < 1e-16);
    }

    #[test]
    fn hermitian_query() {
        let dirs = sphere_quadrature(Dim::Two, 8).unwrap();
        let values = (0..16)
            .map(|i| Complex64::new(i as f64, 0.5 - i as f64))
            .collect();
        let ds = AmplitudeDataset::new(
            [1.0, 0.0, 0.0],
            1.0,
            vec![1.0, 2.0],
            dirs,
            values,
            Provenance::SyntheticLinear,
        )
        .unwrap();
        for di in 0..8 {
            assert_eq!(
                ds.query(-2.0, di).unwrap(),
                ds.query(2.0, di).unwrap().conj()
            );
        }
        assert_eq!(ds.query(0.5, 3).unwrap(), Complex64::default());
        assert!(ds.query(1.5, 0).is_none());
        assert_eq!(ds.k_weights(), vec![1.0, 1.0]);
        assert_eq!(ds.k_band(), (0.5, 2.5));
    }

    #[test]
    fn empty_and_zero_datasets() {
        let grid = Grid::new(Dim::Two, 16, 1.0).unwrap();
        let dirs = sphere_quadrature(Dim::Two, 8).unwrap();
        let zero = PotentialModel::zero(Dim::Two);
        let opts = SolverOptions::default();
        let ds = build_dataset(
            &zero,
            &[1.0, 0.0, 0.0],
            &[],
            &dirs,
            &grid,
            1.0,
            &opts,
            Execution::Sequential,
        )
        .unwrap();
        assert!(ds.ks.is_empty() && ds.values.is_empty());
        let ds = build_dataset(
            &zero,
            &[1.0, 0.0, 0.0],
            &[3.0],
            &dirs,
            &grid,
            1.0,
            &opts,
            Execution::Sequential,
        )
        .unwrap();
        assert!(ds.values.iter().all(|v| *v == Complex64::default()));
    }
}
