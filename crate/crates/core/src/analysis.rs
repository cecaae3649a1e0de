//! Fourier shell spectra, decay-exponent fits, Sobolev-gain estimates and
//! jump localization.
//!
//! The decay exponent of the shell-averaged `|F f|` over a frequency band is
//! used as a computable proxy for Sobolev regularity; it does not certify
//! membership in `H^t`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{map_indexed, Execution};
use crate::fft::FftNd;
use crate::geometry::{direction_2d, norm, sphere_quadrature, Dim, Grid, Point};

/// Smooth radial taper equal to 1 for `r <= r0` and 0 for `r >= r1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub r0: f64,
    pub r1: f64,
}

impl Window {
    /// Plateau up to `L/2`, zero beyond `0.9 L`.
    pub fn default_for(grid: &Grid) -> Window {
        Window {
            r0: 0.5 * grid.half_width,
            r1: 0.9 * grid.half_width,
        }
    }

    pub fn value(&self, r: f64) -> f64 {
        if r <= self.r0 {
            return 1.0;
        }
        if r >= self.r1 {
            return 0.0;
        }
        let t = (r - self.r0) / (self.r1 - self.r0);
        let s = |t: f64| if t <= 0.0 { 0.0 } else { (-1.0 / t).exp() };
        s(1.0 - t) / (s(1.0 - t) + s(t))
    }
}

/// Angular frequency of the DFT mode with flat index `idx`.
pub fn frequency(grid: &Grid, idx: usize) -> Point {
    let n = grid.n_per_axis;
    let f = grid.fundamental();
    let ix = grid.unravel(idx);
    let signed = |m: usize| {
        if m < n / 2 {
            m as f64
        } else {
            m as f64 - n as f64
        }
    };
    let mut xi = [0.0; 3];
    for a in 0..grid.dim.n() {
        xi[a] = f * signed(ix[a]);
    }
    xi
}

/// `h^n` times the DFT of real samples; moduli equal those of the
/// Riemann-sum Fourier transform on the grid.
pub fn dft(values: &[f64], grid: &Grid, exec: Execution) -> Result<Vec<Complex64>> {
    if values.len() != grid.len() {
        return Err(Error::DimensionMismatch {
            expected: format!("{} nodes", grid.len()),
            found: format!("{} values", values.len()),
        });
    }
    let mut buf: Vec<Complex64> = values.iter().map(|v| Complex64::new(*v, 0.0)).collect();
    FftNd::new(grid.dim, grid.n_per_axis).forward(&mut buf, exec);
    let w = grid.cell_volume();
    for v in &mut buf {
        *v *= w;
    }
    Ok(buf)
}

/// Shell averages of `|F f|`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShellSpectrum {
    pub centers: Vec<f64>,
    pub means: Vec<f64>,
    pub counts: Vec<usize>,
    pub width: f64,
}

/// Averages `|F f|` over `shells` radial shells equispaced up to the Nyquist
/// frequency `pi / h`, optionally after multiplying by a radial window.
pub fn shell_spectrum(
    values: &[f64],
    grid: &Grid,
    shells: usize,
    window: Option<Window>,
    exec: Execution,
) -> Result<ShellSpectrum> {
    if shells == 0 {
        return Err(Error::Analysis("at least one shell is required".into()));
    }
    let tapered: Vec<f64> = match window {
        Some(w) => values
            .iter()
            .enumerate()
            .map(|(i, v)| v * w.value(norm(&grid.node(i))))
            .collect(),
        None => values.to_vec(),
    };
    let spec = dft(&tapered, grid, exec)?;
    let nyquist = PI / grid.spacing();
    let width = nyquist / shells as f64;
    let mut sums = vec![0.0; shells];
    let mut counts = vec![0usize; shells];
    for (i, v) in spec.iter().enumerate() {
        let r = norm(&frequency(grid, i));
        let s = (r / width) as usize;
        if s < shells {
            sums[s] += v.norm();
            counts[s] += 1;
        }
    }
    let means = sums
        .iter()
        .zip(&counts)
        .map(|(s, c)| if *c > 0 { s / *c as f64 } else { 0.0 })
        .collect();
    let centers = (0..shells).map(|s| (s as f64 + 0.5) * width).collect();
    Ok(ShellSpectrum {
        centers,
        means,
        counts,
        width,
    })
}

/// Least-squares fit of `log(mean)` against `log(center)` over shells whose
/// center lies in `[xi_min, xi_max]`; returns `(-slope, R^2)`.
pub fn decay_slope(spec: &ShellSpectrum, range: (f64, f64)) -> Result<(f64, f64)> {
    let pts: Vec<(f64, f64)> = spec
        .centers
        .iter()
        .zip(&spec.means)
        .zip(&spec.counts)
        .filter(|((c, m), n)| **c >= range.0 && **c <= range.1 && **m > 0.0 && **n > 0)
        .map(|((c, m), _)| (c.ln(), m.ln()))
        .collect();
    if pts.len() < 6 {
        return Err(Error::Analysis(format!(
            "only {} nonzero shells in [{}, {}]; at least 6 are needed",
            pts.len(),
            range.0,
            range.1
        )));
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 {
        1.0
    } else {
        (sxy * sxy) / (sxx * syy)
    };
    Ok((-slope, r2))
}

/// Discrete `H^t` norm squared, `sum (1 + |xi|^2)^t |F f|^2 / (2L)^n`.
pub fn sobolev_norm_sq(values: &[f64], grid: &Grid, t: f64, exec: Execution) -> Result<f64> {
    let spec = dft(values, grid, exec)?;
    let vol = (2.0 * grid.half_width).powi(grid.dim.n() as i32);
    Ok(spec
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let xi = frequency(grid, i);
            (1.0 + xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2]).powf(t) * v.norm_sqr()
        })
        .sum::<f64>()
        / vol)
}

/// `sum h^n f^2` on the grid.
pub fn grid_l2_sq(values: &[f64], grid: &Grid) -> f64 {
    grid.cell_volume() * values.iter().map(|v| v * v).sum::<f64>()
}

/// Detected edge positions along radial rays.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct JumpStats {
    /// Largest distance between a detected edge and the true jump surface.
    pub max_error: f64,
    pub median_error: f64,
    pub rays: usize,
}

/// Locates the maximum of the interpolated discrete gradient magnitude of
/// `values` along rays crossing each sphere `(center, radius)` of `jumps`.
///
/// Each ray is searched within half the distance to the nearest other jump
/// radius on the same center (at most half the radius).
pub fn jump_localization(
    values: &[f64],
    grid: &Grid,
    jumps: &[(Point, f64)],
    exec: Execution,
) -> Result<JumpStats> {
    if values.len() != grid.len() {
        return Err(Error::DimensionMismatch {
            expected: format!("{} nodes", grid.len()),
            found: format!("{} values", values.len()),
        });
    }
    if jumps.is_empty() {
        return Ok(JumpStats::default());
    }
    let grad = gradient_magnitude(values, grid);
    let h = grid.spacing();
    let rays: Vec<Point> = match grid.dim {
        Dim::Two => (0..64)
            .map(|j| direction_2d(2.0 * PI * j as f64 / 64.0))
            .collect(),
        Dim::Three => sphere_quadrature(Dim::Three, 16)?.directions,
    };
    let mut tasks = Vec::new();
    for (ji, (c, r)) in jumps.iter().enumerate() {
        let gap = jumps
            .iter()
            .enumerate()
            .filter(|(jj, (c2, _))| *jj != ji && c2 == c)
            .map(|(_, (_, r2))| (r2 - r).abs())
            .fold(*r, f64::min);
        let reach = 0.5 * gap;
        for d in &rays {
            tasks.push((*c, *r, reach, *d));
        }
    }
    let mut errors = map_indexed(exec, tasks.len(), |t| {
        let (c, r, reach, d) = tasks[t];
        let steps = ((2.0 * reach) / (h / 16.0)).ceil() as usize;
        let mut best = (f64::NEG_INFINITY, r);
        for s in 0..=steps {
            let rho = r - reach + 2.0 * reach * s as f64 / steps as f64;
            let p = [c[0] + rho * d[0], c[1] + rho * d[1], c[2] + rho * d[2]];
            if let Some(g) = interpolate(&grad, grid, &p) {
                if g > best.0 {
                    best = (g, rho);
                }
            }
        }
        (best.1 - r).abs()
    });
    errors.sort_by(f64::total_cmp);
    Ok(JumpStats {
        max_error: *errors.last().unwrap_or(&0.0),
        median_error: errors[errors.len() / 2],
        rays: errors.len(),
    })
}

/// Central-difference gradient magnitude (one-sided at the boundary).
fn gradient_magnitude(values: &[f64], grid: &Grid) -> Vec<f64> {
    let n = grid.n_per_axis;
    let h = grid.spacing();
    (0..grid.len())
        .map(|idx| {
            let ix = grid.unravel(idx);
            let mut sq = 0.0;
            for a in 0..grid.dim.n() {
                let mut lo = ix;
                let mut hi = ix;
                lo[a] = ix[a].saturating_sub(1);
                hi[a] = (ix[a] + 1).min(n - 1);
                let span = (hi[a] - lo[a]) as f64 * h;
                let g = (values[grid.ravel(hi)] - values[grid.ravel(lo)]) / span;
                sq += g * g;
            }
            sq.sqrt()
        })
        .collect()
}

/// Multilinear interpolation; `None` outside the grid.
fn interpolate(values: &[f64], grid: &Grid, p: &Point) -> Option<f64> {
    let h = grid.spacing();
    let n = grid.n_per_axis;
    let dims = grid.dim.n();
    let mut base = [0usize; 3];
    let mut frac = [0.0; 3];
    for a in 0..dims {
        let u = (p[a] + grid.half_width) / h;
        if u < 0.0 || u > (n - 1) as f64 {
            return None;
        }
        let i = (u.floor() as usize).min(n - 2);
        base[a] = i;
        frac[a] = u - i as f64;
    }
    let mut acc = 0.0;
    for corner in 0..(1usize << dims) {
        let mut ix = base;
        let mut w = 1.0;
        for a in 0..dims {
            if corner >> a & 1 == 1 {
                ix[a] += 1;
                w *= frac[a];
            } else {
                w *= 1.0 - frac[a];
            }
        }
        acc += w * values[grid.ravel(ix)];
    }
    Some(acc)
}

/// Options for [`sobolev_gain`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GainOptions {
    /// Fit band in units of the fundamental frequency `pi / L`.
    pub band: (f64, f64),
    pub shells: usize,
    pub window: Option<Window>,
    /// Minimum `R^2` for a fit to count as reliable.
    pub min_r2: f64,
}

impl GainOptions {
    pub fn default_for(grid: &Grid) -> GainOptions {
        GainOptions {
            band: (8.0, 32.0),
            shells: 16,
            window: Some(Window::default_for(grid)),
            min_r2: 0.9,
        }
    }
}

/// Decay exponents of `F V(., 1)` and of `F (q_B - reference)` and their difference.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmoothnessReport {
    pub slope_v: f64,
    pub r2_v: f64,
    /// `+inf` when the difference vanishes identically.
    pub slope_diff: f64,
    pub r2_diff: f64,
    /// `slope_diff - slope_v`; `+inf` when the difference vanishes identically.
    pub gain: f64,
    /// Fit band in absolute frequency units.
    pub fit_range: (f64, f64),
    pub reliable: bool,
    pub jumps: JumpStats,
    /// `jumps.max_error / h`.
    pub jump_error_cells: f64,
    pub spectrum_v: ShellSpectrum,
    pub spectrum_diff: ShellSpectrum,
}

/// Compares the Fourier decay of `recon - reference` with that of `truth`,
/// where `reference` defaults to `truth`, and localizes the jumps of `recon`.
pub fn sobolev_gain(
    recon: &[f64],
    truth: &[f64],
    reference: Option<&[f64]>,
    grid: &Grid,
    jumps: &[(Point, f64)],
    opts: &GainOptions,
    exec: Execution,
) -> Result<SmoothnessReport> {
    let reference = reference.unwrap_or(truth);
    if recon.len() != grid.len() || truth.len() != grid.len() || reference.len() != grid.len() {
        return Err(Error::DimensionMismatch {
            expected: format!("{} nodes", grid.len()),
            found: format!(
                "recon {}, truth {}, reference {}",
                recon.len(),
                truth.len(),
                reference.len()
            ),
        });
    }
    let f = grid.fundamental();
    let fit_range = (opts.band.0 * f, opts.band.1 * f);
    let spectrum_v = shell_spectrum(truth, grid, opts.shells, opts.window, exec)?;
    let (slope_v, r2_v) = decay_slope(&spectrum_v, fit_range)?;
    let diff: Vec<f64> = recon.iter().zip(reference).map(|(a, b)| a - b).collect();
    let spectrum_diff = shell_spectrum(&diff, grid, opts.shells, opts.window, exec)?;
    let (slope_diff, r2_diff) = if diff.iter().all(|d| *d == 0.0) {
        (f64::INFINITY, 1.0)
    } else {
        decay_slope(&spectrum_diff, fit_range)?
    };
    let jumps_found = jump_localization(recon, grid, jumps, exec)?;
    Ok(SmoothnessReport {
        slope_v,
        r2_v,
        slope_diff,
        r2_diff,
        gain: slope_diff - slope_v,
        fit_range,
        reliable: r2_v >= opts.min_r2 && r2_diff >= opts.min_r2,
        jump_error_cells: jumps_found.max_error / grid.spacing(),
        jumps: jumps_found,
        spectrum_v,
        spectrum_diff,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn window_is_smooth_step() {
        let w = Window { r0: 1.0, r1: 2.0 };
        assert_eq!(w.value(0.5), 1.0);
        assert_eq!(w.value(2.5), 0.0);
        assert!((w.value(1.5) - 0.5).abs() < 1e-15);
        assert!(w.value(1.2) > w.value(1.3));
    }

    #[test]
    fn constant_field_lives_in_shell_zero() {
        let grid = Grid::new(Dim::Two, 32, 2.0).unwrap();
        let spec = shell_spectrum(
            &vec![1.0; grid.len()],
            &grid,
            8,
            None,
            Execution::Sequential,
        )
        .unwrap();
        assert!((spec.means[0] - 16.0 / spec.counts[0] as f64).abs() < 1e-12);
        assert!(spec.means[1..].iter().all(|m| *m < 1e-12));
    }

    #[test]
    fn too_few_shells() {
        let spec = ShellSpectrum {
            centers: vec![1.0, 2.0, 3.0],
            means: vec![1.0; 3],
            counts: vec![1; 3],
            width: 1.0,
        };
        assert!(matches!(
            decay_slope(&spec, (0.0, 10.0)),
            Err(Error::Analysis(_))
        ));
    }

    #[test]
    fn exact_power_law_fit() {
        let centers: Vec<f64> = (1..=10).map(|i| i as f64).collect();
        let means = centers.iter().map(|c: &f64| c.powf(-2.5)).collect();
        let spec = ShellSpectrum {
            centers,
            means,
            counts: vec![1; 10],
            width: 1.0,
        };
        let (e, r2) = decay_slope(&spec, (0.0, 100.0)).unwrap();
        assert!((e - 2.5).abs() < 1e-12 && (r2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn identical_fields_give_infinite_gain() {
        let grid = Grid::new(Dim::Two, 64, 2.0).unwrap();
        let truth: Vec<f64> = (0..grid.len())
            .map(|i| f64::from(u8::from(norm(&grid.node(i)) <= 0.5)))
            .collect();
        let jumps = [([0.0; 3], 0.5)];
        let opts = GainOptions {
            band: (4.0, 30.0),
            shells: 32,
            window: None,
            min_r2: 0.9,
        };
        let rep = sobolev_gain(
            &truth,
            &truth,
            None,
            &grid,
            &jumps,
            &opts,
            Execution::Sequential,
        )
        .unwrap();
        assert_eq!(rep.gain, f64::INFINITY);
        assert!(rep.jump_error_cells <= 1.0);
    }
}
