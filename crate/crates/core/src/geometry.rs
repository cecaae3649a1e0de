//! Uniform grids, unit-sphere quadrature and the change of variables between
//! the Fourier variable `xi` and scattering coordinates `(k, theta')`.
//!
//! Points and directions are stored as `[f64; 3]`; in two dimensions the third
//! component is zero.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Point = [f64; 3];

/// Spatial dimension.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub enum Dim {
    Two,
    Three,
}

impl Dim {
    pub fn from_n(n: u32) -> Result<Dim> {
        match n {
            2 => Ok(Dim::Two),
            3 => Ok(Dim::Three),
            _ => Err(Error::Config(format!("dimension must be 2 or 3, got {n}"))),
        }
    }

    pub fn n(self) -> usize {
        match self {
            Dim::Two => 2,
            Dim::Three => 3,
        }
    }

    /// Surface measure of the unit sphere `S^{n-1}`.
    pub fn sphere_measure(self) -> f64 {
        match self {
            Dim::Two => 2.0 * PI,
            Dim::Three => 4.0 * PI,
        }
    }
}

impl TryFrom<u32> for Dim {
    type Error = Error;
    fn try_from(n: u32) -> Result<Dim> {
        Dim::from_n(n)
    }
}

impl From<Dim> for u32 {
    fn from(d: Dim) -> u32 {
        d.n() as u32
    }
}

pub fn dot(a: &Point, b: &Point) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn norm(a: &Point) -> f64 {
    dot(a, a).sqrt()
}

pub fn sub(a: &Point, b: &Point) -> Point {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub fn scale(a: &Point, s: f64) -> Point {
    [a[0] * s, a[1] * s, a[2] * s]
}

/// Builds a point from a slice of length `dim.n()`.
pub fn point_from_slice(dim: Dim, v: &[f64]) -> Result<Point> {
    if v.len() != dim.n() {
        return Err(Error::DimensionMismatch {
            expected: format!("{} components", dim.n()),
            found: format!("{} components", v.len()),
        });
    }
    let mut p = [0.0; 3];
    p[..v.len()].copy_from_slice(v);
    Ok(p)
}

/// Checks that `v` is a unit vector living in `dim` dimensions.
pub fn check_unit(dim: Dim, v: &Point) -> Result<()> {
    if dim == Dim::Two && v[2] != 0.0 {
        return Err(Error::Domain(
            "two-dimensional direction has a third component".into(),
        ));
    }
    if (norm(v) - 1.0).abs() > 1e-12 {
        return Err(Error::Domain(format!(
            "direction {v:?} is not a unit vector"
        )));
    }
    Ok(())
}

/// Direction in the plane at angle `phi` from the first axis.
pub fn direction_2d(phi: f64) -> Point {
    let (s, c) = phi.sin_cos();
    [c, s, 0.0]
}

/// Uniform grid with `N` samples per axis on `[-L, L)`, spacing `h = 2L/N`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub dim: Dim,
    pub n_per_axis: usize,
    pub half_width: f64,
}

impl Grid {
    pub fn new(dim: Dim, n_per_axis: usize, half_width: f64) -> Result<Grid> {
        if n_per_axis < 16 || !n_per_axis.is_power_of_two() {
            return Err(Error::Config(format!(
                "samples per axis must be a power of two >= 16, got {n_per_axis}"
            )));
        }
        if !(half_width > 0.0) || !half_width.is_finite() {
            return Err(Error::Config(format!(
                "half-width must be positive, got {half_width}"
            )));
        }
        Ok(Grid {
            dim,
            n_per_axis,
            half_width,
        })
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.n_per_axis as f64
    }

    /// Volume element `h^n`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim.n() as i32)
    }

    pub fn len(&self) -> usize {
        self.n_per_axis.pow(self.dim.n() as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Coordinate of index `i` along one axis.
    pub fn coord(&self, i: usize) -> f64 {
        -self.half_width + self.spacing() * i as f64
    }

    /// Per-axis indices of a flat row-major index.
    pub fn unravel(&self, idx: usize) -> [usize; 3] {
        let n = self.n_per_axis;
        match self.dim {
            Dim::Two => [idx / n, idx % n, 0],
            Dim::Three => [idx / (n * n), (idx / n) % n, idx % n],
        }
    }

    pub fn ravel(&self, ix: [usize; 3]) -> usize {
        let n = self.n_per_axis;
        match self.dim {
            Dim::Two => ix[0] * n + ix[1],
            Dim::Three => (ix[0] * n + ix[1]) * n + ix[2],
        }
    }

    /// Position of the node with flat index `idx`.
    pub fn node(&self, idx: usize) -> Point {
        let ix = self.unravel(idx);
        match self.dim {
            Dim::Two => [self.coord(ix[0]), self.coord(ix[1]), 0.0],
            Dim::Three => [self.coord(ix[0]), self.coord(ix[1]), self.coord(ix[2])],
        }
    }

    /// Flat index of the node at the origin.
    pub fn origin_index(&self) -> usize {
        let c = self.n_per_axis / 2;
        self.ravel([c, c, c])
    }

    /// Fundamental angular frequency `pi / L` of the grid's discrete transform.
    pub fn fundamental(&self) -> f64 {
        PI / self.half_width
    }
}

/// Quadrature nodes on the unit sphere.
#[derive(Clone, Debug, PartialEq)]
pub struct DirectionSet {
    pub dim: Dim,
    pub directions: Vec<Point>,
    pub weights: Vec<f64>,
}

impl DirectionSet {
    pub fn new(dim: Dim, directions: Vec<Point>, weights: Vec<f64>) -> Result<DirectionSet> {
        if directions.len() != weights.len() {
            return Err(Error::Config("direction and weight counts differ".into()));
        }
        for d in &directions {
            check_unit(dim, d)?;
        }
        if weights.iter().any(|w| !(*w > 0.0)) {
            return Err(Error::Config("quadrature weights must be positive".into()));
        }
        Ok(DirectionSet {
            dim,
            directions,
            weights,
        })
    }

    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }
}

/// Sphere quadrature: `M` equispaced angles for `n = 2`; for `n = 3` a
/// product of `M/2` Gauss-Legendre latitudes and `M` longitudes.
pub fn sphere_quadrature(dim: Dim, m: usize) -> Result<DirectionSet> {
    if m < 8 {
        return Err(Error::Config(format!(
            "sphere quadrature needs M >= 8, got {m}"
        )));
    }
    match dim {
        Dim::Two => {
            let w = 2.0 * PI / m as f64;
            let dirs = (0..m)
                .map(|j| direction_2d(2.0 * PI * j as f64 / m as f64))
                .collect();
            Ok(DirectionSet {
                dim,
                directions: dirs,
                weights: vec![w; m],
            })
        }
        Dim::Three => {
            let (nodes, gl_weights) = gauss_legendre(m / 2);
            let dphi = 2.0 * PI / m as f64;
            let mut dirs = Vec::with_capacity(m * m / 2);
            let mut weights = Vec::with_capacity(m * m / 2);
            for (ct, wt) in nodes.iter().zip(&gl_weights) {
                let st = (1.0 - ct * ct).sqrt();
                for j in 0..m {
                    let (sp, cp) = (dphi * j as f64).sin_cos();
                    dirs.push([st * cp, st * sp, *ct]);
                    weights.push(wt * dphi);
                }
            }
            Ok(DirectionSet {
                dim,
                directions: dirs,
                weights,
            })
        }
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(count: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; count];
    let mut w = vec![0.0; count];
    let nf = count as f64;
    for i in 0..count.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let mut p0 = 1.0;
            let mut p1 = 0.0;
            for j in 0..count {
                let p2 = p1;
                p1 = p0;
                p0 = ((2 * j + 1) as f64 * z * p1 - j as f64 * p2) / (j + 1) as f64;
            }
            dp = nf * (z * p0 - p1) / (z * z - 1.0);
            let dz = p0 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[count - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[count - 1 - i] = wi;
    }
    (x, w)
}

/// A point of Fourier space.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FourierPoint {
    pub xi: Point,
}

impl FourierPoint {
    pub fn is_reachable(&self, theta0: &Point) -> bool {
        dot(&self.xi, theta0) != 0.0
    }
}

/// `xi = k (theta' - theta0)`.
pub fn xi_from_angles(k: f64, theta_p: &Point, theta0: &Point) -> FourierPoint {
    FourierPoint {
        xi: scale(&sub(theta_p, theta0), k),
    }
}

/// Inverse of [`xi_from_angles`]: `k = -|xi|^2 / (2 (xi, theta0))` and
/// `theta' = theta0 - 2 (theta0, xi_hat) xi_hat`.
pub fn angles_from_xi(xi: &FourierPoint, theta0: &Point) -> Result<(f64, Point)> {
    let r = norm(&xi.xi);
    if r == 0.0 {
        return Err(Error::DegenerateXi);
    }
    let p = dot(&xi.xi, theta0);
    if p == 0.0 {
        return Err(Error::UnreachablePlane);
    }
    let k = -r * r / (2.0 * p);
    let hat = scale(&xi.xi, 1.0 / r);
    let c = 2.0 * dot(theta0, &hat);
    let theta_p = sub(theta0, &scale(&hat, c));
    Ok((k, theta_p))
}

/// Jacobian weight of `d xi = J dk d theta'`, `J = |k|^{n-1} |theta' - theta0|^2 / 2`.
pub fn jacobian_weight(dim: Dim, k: f64, theta_p: &Point, theta0: &Point) -> f64 {
    let d = sub(theta_p, theta0);
    0.5 * k.abs().powi(dim.n() as i32 - 1) * dot(&d, &d)
}
