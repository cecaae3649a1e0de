//! Born fixed-point solver for the nonlinear Lippmann-Schwinger equation
//! `u_sc = -G_k * (V(., |u0 + u_sc|) (u0 + u_sc))` on a truncated grid.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{for_each_chunk, Execution};
use crate::fft::FftNd;
use crate::geometry::{check_unit, dot, Dim, Grid, Point};
use crate::potential::{PotentialModel, SampledPotential};
use crate::special::green_kernel;

/// Dimension, wavenumber and incident direction of one scattering experiment.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WaveContext {
    pub dim: Dim,
    pub k: f64,
    pub theta0: Point,
    pub k0: f64,
}

impl WaveContext {
    pub fn new(dim: Dim, k: f64, theta0: Point, k0: f64) -> Result<WaveContext> {
        check_unit(dim, &theta0)?;
        if !(k0 > 0.0) {
            return Err(Error::Domain(format!(
                "cutoff k0 must be positive, got {k0}"
            )));
        }
        if !(k.abs() >= k0) || !k.is_finite() {
            return Err(Error::Domain(format!(
                "|k| = {} is below the cutoff k0 = {k0}",
                k.abs()
            )));
        }
        Ok(WaveContext { dim, k, theta0, k0 })
    }

    /// The same experiment at wavenumber `-k`.
    pub fn negated(&self) -> WaveContext {
        WaveContext {
            k: -self.k,
            ..*self
        }
    }

    /// Incident plane wave `exp(i k (theta0, x))`.
    pub fn incident(&self, x: &Point) -> Complex64 {
        Complex64::cis(self.k * dot(&self.theta0, x))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FieldKind {
    Scattered,
    Total,
    BornTerm,
}

/// Complex samples on the nodes of a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct ScatterField {
    pub grid: Grid,
    pub values: Vec<Complex64>,
    pub kind: FieldKind,
}

impl ScatterField {
    pub fn zeros(grid: Grid, kind: FieldKind) -> ScatterField {
        ScatterField {
            grid,
            values: vec![Complex64::default(); grid.len()],
            kind,
        }
    }

    pub fn sup_norm(&self) -> f64 {
        sup_norm(&self.values)
    }

    /// `u0 + u_sc` for a scattered field.
    pub fn total(&self, ctx: &WaveContext) -> ScatterField {
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(i, u)| u + ctx.incident(&self.grid.node(i)))
            .collect();
        ScatterField {
            grid: self.grid,
            values,
            kind: FieldKind::Total,
        }
    }
}

pub fn sup_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Record of one fixed-point solve.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct IterationTrace {
    /// `||u^(j) - u^(j-1)||_inf` per iteration.
    pub deltas: Vec<f64>,
    /// `||u^(j)||_inf` per iteration.
    pub norms: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
}

impl IterationTrace {
    /// Successive delta ratios `delta_j / delta_{j-1}`.
    pub fn ratios(&self) -> Vec<f64> {
        self.deltas.windows(2).map(|w| w[1] / w[0]).collect()
    }

    /// Largest delta ratio, ignoring steps that already reached zero.
    pub fn max_ratio(&self) -> f64 {
        self.ratios()
            .into_iter()
            .filter(|r| r.is_finite())
            .fold(0.0, f64::max)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> SolverOptions {
        SolverOptions {
            tol: 1e-10,
            max_iter: 50,
        }
    }
}

/// Convolution with `G_k^+` on a grid, precomputed for one wavenumber.
#[derive(Clone, Debug)]
pub struct GreenOperator {
    grid: Grid,
    k: f64,
    fft: FftNd,
    symbol: Vec<Complex64>,
}

impl GreenOperator {
    pub fn new(grid: &Grid, k: f64, exec: Execution) -> Result<GreenOperator> {
        let n = grid.n_per_axis;
        let p = 2 * n;
        let dim = grid.dim;
        let h = grid.spacing();
        let weight = grid.cell_volume();
        let corner = n + 1;
        let table_len = corner.pow(dim.n() as u32);
        let mut table = vec![Complex64::default(); table_len];
        for (i, v) in table.iter_mut().enumerate() {
            let (a, b, c) = match dim {
                Dim::Two => (i / corner, i % corner, 0),
                Dim::Three => (i / (corner * corner), (i / corner) % corner, i % corner),
            };
            let r = h * ((a * a + b * b + c * c) as f64).sqrt();
            *v = weight * green_kernel(k, r, dim)?;
        }
        let fold = |m: usize| if m <= n { m } else { p - m };
        let fft = FftNd::new(dim, p);
        let mut symbol = vec![Complex64::default(); fft.len()];
        for_each_chunk(exec, &mut symbol, p, |row, line| {
            for (m, v) in line.iter_mut().enumerate() {
                let ti = match dim {
                    Dim::Two => fold(row) * corner + fold(m),
                    Dim::Three => (fold(row / p) * corner + fold(row % p)) * corner + fold(m),
                };
                *v = table[ti];
            }
        });
        fft.forward(&mut symbol, exec);
        let scale = 1.0 / fft.len() as f64;
        for v in &mut symbol {
            *v *= scale;
        }
        Ok(GreenOperator {
            grid: *grid,
            k,
            fft,
            symbol,
        })
    }

    pub fn wavenumber(&self) -> f64 {
        self.k
    }

    /// `x -> sum_y h^n G(|x - y|) source(y)` over the grid nodes.
    pub fn apply(&self, source: &[Complex64], exec: Execution) -> Vec<Complex64> {
        assert_eq!(
            source.len(),
            self.grid.len(),
            "source does not match the operator grid"
        );
        let n = self.grid.n_per_axis;
        let mut buf = vec![Complex64::default(); self.fft.len()];
        for (row, line) in source.chunks(n).enumerate() {
            let start = padded_row_start(self.grid.dim, n, row);
            buf[start..start + n].copy_from_slice(line);
        }
        self.fft.forward(&mut buf, exec);
        for (b, s) in buf.iter_mut().zip(&self.symbol) {
            *b *= s;
        }
        self.fft.inverse(&mut buf, exec);
        let mut out = vec![Complex64::default(); source.len()];
        for (row, line) in out.chunks_mut(n).enumerate() {
            let start = padded_row_start(self.grid.dim, n, row);
            line.copy_from_slice(&buf[start..start + n]);
        }
        out
    }
}

/// Offset in the `(2n)^d` buffer of the `row`-th length-`n` row of an `n^d` array.
fn padded_row_start(dim: Dim, n: usize, row: usize) -> usize {
    let p = 2 * n;
    match dim {
        Dim::Two => row * p,
        Dim::Three => ((row / n) * p + row % n) * p,
    }
}

/// Convolution of `source` with `G_k^+` over the grid; `k < 0` uses the
/// conjugated kernel.
pub fn apply_green_convolution(
    source: &ScatterField,
    ctx: &WaveContext,
    exec: Execution,
) -> Result<ScatterField> {
    let op = GreenOperator::new(&source.grid, ctx.k, exec)?;
    Ok(ScatterField {
        grid: source.grid,
        values: op.apply(&source.values, exec),
        kind: source.kind,
    })
}

/// Nodes and values of `V(y, |u(y)|) u(y)` with `u = u0 + u_sc`.
pub fn scattering_source(
    u_sc: &[Complex64],
    grid: &Grid,
    potential: &SampledPotential,
    ctx: &WaveContext,
) -> Vec<(usize, Complex64)> {
    potential
        .nodes
        .iter()
        .enumerate()
        .map(|(j, &idx)| {
            let u = ctx.incident(&grid.node(idx)) + u_sc[idx];
            (idx, potential.coefficient(j, u.norm()) * u)
        })
        .collect()
}

fn born_map(
    u_prev: &[Complex64],
    grid: &Grid,
    potential: &SampledPotential,
    ctx: &WaveContext,
    op: &GreenOperator,
    exec: Execution,
) -> Vec<Complex64> {
    if potential.is_empty() {
        return vec![Complex64::default(); grid.len()];
    }
    let mut source = vec![Complex64::default(); grid.len()];
    for (idx, v) in scattering_source(u_prev, grid, potential, ctx) {
        source[idx] = -v;
    }
    op.apply(&source, exec)
}

/// One Born step `u^(j) = -G * (V(., |u0 + u_prev|) (u0 + u_prev))`.
pub fn born_step(
    u_prev: &ScatterField,
    model: &PotentialModel,
    ctx: &WaveContext,
    exec: Execution,
) -> Result<ScatterField> {
    let grid = u_prev.grid;
    let potential = model.sample(&grid);
    let op = GreenOperator::new(&grid, ctx.k, exec)?;
    let values = born_map(&u_prev.values, &grid, &potential, ctx, &op, exec);
    Ok(ScatterField {
        grid,
        values,
        kind: FieldKind::Scattered,
    })
}

/// Iterates the Born map from `u^(0) = 0` until the update falls below
/// `tol * ||u^(j)||_inf`.
///
/// Fails with [`Error::NonContraction`] when the delta ratio is `>= 1` for
/// three consecutive steps or the iterate stops being finite.
pub fn solve_ls(
    model: &PotentialModel,
    ctx: &WaveContext,
    grid: &Grid,
    opts: &SolverOptions,
    exec: Execution,
) -> Result<(ScatterField, IterationTrace)> {
    if model.dim != grid.dim || ctx.dim != grid.dim {
        return Err(Error::DimensionMismatch {
            expected: format!("{}-D", grid.dim.n()),
            found: format!("model {}-D, context {}-D", model.dim.n(), ctx.dim.n()),
        });
    }
    if !(opts.tol > 0.0) || opts.max_iter == 0 {
        return Err(Error::Config(
            "solver needs tol > 0 and max_iter >= 1".into(),
        ));
    }
    let potential = model.sample(grid);
    let op = GreenOperator::new(grid, ctx.k, exec)?;
    solve_with(&potential, ctx, grid, &op, opts, exec)
}

/// [`solve_ls`] with a prebuilt operator and sampled potential.
pub fn solve_with(
    potential: &SampledPotential,
    ctx: &WaveContext,
    grid: &Grid,
    op: &GreenOperator,
    opts: &SolverOptions,
    exec: Execution,
) -> Result<(ScatterField, IterationTrace)> {
    let mut u = vec![Complex64::default(); grid.len()];
    let mut trace = IterationTrace::default();
    let mut growing = 0;
    for _ in 0..opts.max_iter {
        let next = born_map(&u, grid, potential, ctx, op, exec);
        let delta = next
            .iter()
            .zip(&u)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        let norm = sup_norm(&next);
        u = next;
        trace.iterations += 1;
        trace.deltas.push(delta);
        trace.norms.push(norm);
        if !delta.is_finite() || !norm.is_finite() {
            return Err(Error::NonContraction {
                k: ctx.k,
                ratios: trace.ratios(),
            });
        }
        if delta <= opts.tol * norm {
            trace.converged = true;
            break;
        }
        if let [.., prev, last] = trace.deltas[..] {
            if last >= prev {
                growing += 1;
                if growing >= 3 {
                    return Err(Error::NonContraction {
                        k: ctx.k,
                        ratios: trace.ratios(),
                    });
                }
            } else {
                growing = 0;
            }
        }
    }
    Ok((
        ScatterField {
            grid: *grid,
            values: u,
            kind: FieldKind::Scattered,
        },
        trace,
    ))
}

/// Relative residual `||u_sc - T(u_sc)||_inf / ||u_sc||_inf` of the fixed-point map `T`.
pub fn ls_residual(
    u_sc: &ScatterField,
    model: &PotentialModel,
    ctx: &WaveContext,
    exec: Execution,
) -> Result<f64> {
    let image = born_step(u_sc, model, ctx, exec)?;
    let diff = u_sc
        .values
        .iter()
        .zip(&image.values)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    Ok(diff / u_sc.sup_norm().max(1e-300))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::{Nonlinearity, Shape, Term};

    fn grid() -> Grid {
        Grid::new(Dim::Two, 32, 1.5).unwrap()
    }

    fn ball_model(amplitude: f64) -> PotentialModel {
        let t = Term::new(
            Shape::Ball {
                center: [0.0; 3],
                radius: 0.5,
            },
            amplitude,
        );
        PotentialModel::new(Dim::Two, vec![t], Nonlinearity::Power { gamma: 2.0 }).unwrap()
    }

    #[test]
    fn impulse_reproduces_kernel() {
        for dim in [Dim::Two, Dim::Three] {
            let g = Grid::new(dim, 16, 1.0).unwrap();
            let ctx = WaveContext::new(dim, 3.0, [1.0, 0.0, 0.0], 1.0).unwrap();
            let mut src = ScatterField::zeros(g, FieldKind::Scattered);
            src.values[g.origin_index()] = Complex64::new(1.0, 0.0);
            let out = apply_green_convolution(&src, &ctx, Execution::Sequential).unwrap();
            for (i, v) in out.values.iter().enumerate() {
                let r = crate::geometry::norm(&g.node(i));
                let expected = g.cell_volume() * green_kernel(3.0, r, dim).unwrap();
                assert!(
                    (v - expected).norm() < 1e-12 * expected.norm().max(1e-3),
                    "node {i}"
                );
            }
        }
    }

    #[test]
    fn zero_potential_converges_immediately() {
        let ctx = WaveContext::new(Dim::Two, 5.0, [1.0, 0.0, 0.0], 1.0).unwrap();
        let (u, trace) = solve_ls(
            &PotentialModel::zero(Dim::Two),
            &ctx,
            &grid(),
            &SolverOptions::default(),
            Execution::Sequential,
        )
        .unwrap();
        assert!(trace.converged);
        assert_eq!(trace.iterations, 1);
        assert_eq!(u.sup_norm(), 0.0);
    }

    #[test]
    fn strong_potential_at_low_k_is_rejected() {
        let ctx = WaveContext::new(Dim::Two, 1.0, [1.0, 0.0, 0.0], 1.0).unwrap();
        let err = solve_ls(
            &ball_model(2000.0),
            &ctx,
            &grid(),
            &SolverOptions::default(),
            Execution::Sequential,
        );
        assert!(matches!(err, Err(Error::NonContraction { k, .. }) if k == 1.0));
    }

    #[test]
    fn residual_of_converged_solution() {
        let ctx = WaveContext::new(Dim::Two, 10.0, [1.0, 0.0, 0.0], 1.0).unwrap();
        let model = ball_model(1.0);
        let (u, trace) = solve_ls(
            &model,
            &ctx,
            &grid(),
            &SolverOptions::default(),
            Execution::Sequential,
        )
        .unwrap();
        assert!(trace.converged);
        assert!(ls_residual(&u, &model, &ctx, Execution::Sequential).unwrap() <= 1e-9);
    }
}
