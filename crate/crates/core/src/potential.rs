//! Nonlinear potentials `V(x, s)` built from compactly supported profiles.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{norm, sub, Dim, Grid, Point};

/// Gaussian profiles are truncated at this many widths (`exp(-36) ~ 2e-16`).
pub const GAUSSIAN_CUTOFF: f64 = 6.0;

/// Spatial profile with peak value 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum Shape {
    /// Indicator of the closed ball.
    Ball { center: Point, radius: f64 },
    /// Indicator of `inner <= |x - c| <= outer`.
    Annulus {
        center: Point,
        inner: f64,
        outer: f64,
    },
    /// `exp(-|x - c|^2 / width^2)`, truncated at [`GAUSSIAN_CUTOFF`] widths.
    Gaussian { center: Point, width: f64 },
    /// `exp(1 - 1 / (1 - |x - c|^2 / radius^2))` inside the ball, 0 outside.
    SmoothBump { center: Point, radius: f64 },
}

impl Shape {
    pub fn center(&self) -> &Point {
        match self {
            Shape::Ball { center, .. }
            | Shape::Annulus { center, .. }
            | Shape::Gaussian { center, .. }
            | Shape::SmoothBump { center, .. } => center,
        }
    }

    /// Radius of the support about the shape's own center.
    pub fn extent(&self) -> f64 {
        match self {
            Shape::Ball { radius, .. } | Shape::SmoothBump { radius, .. } => *radius,
            Shape::Annulus { outer, .. } => *outer,
            Shape::Gaussian { width, .. } => GAUSSIAN_CUTOFF * width,
        }
    }

    pub fn value(&self, x: &Point) -> f64 {
        let r = norm(&sub(x, self.center()));
        match *self {
            Shape::Ball { radius, .. } => f64::from(u8::from(r <= radius)),
            Shape::Annulus { inner, outer, .. } => f64::from(u8::from(r >= inner && r <= outer)),
            Shape::Gaussian { width, .. } => {
                if r > GAUSSIAN_CUTOFF * width {
                    0.0
                } else {
                    (-(r * r) / (width * width)).exp()
                }
            }
            Shape::SmoothBump { radius, .. } => {
                let t = r / radius;
                if t >= 1.0 {
                    0.0
                } else {
                    (1.0 - 1.0 / (1.0 - t * t)).exp()
                }
            }
        }
    }

    /// Spheres `(center, radius)` across which the profile jumps.
    pub fn jumps(&self) -> Vec<(Point, f64)> {
        match *self {
            Shape::Ball { center, radius } => vec![(center, radius)],
            Shape::Annulus {
                center,
                inner,
                outer,
            } => {
                if inner > 0.0 {
                    vec![(center, inner), (center, outer)]
                } else {
                    vec![(center, outer)]
                }
            }
            Shape::Gaussian { .. } | Shape::SmoothBump { .. } => Vec::new(),
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Shape::Ball { radius, .. } | Shape::SmoothBump { radius, .. } => radius > 0.0,
            Shape::Annulus { inner, outer, .. } => inner >= 0.0 && outer > inner,
            Shape::Gaussian { width, .. } => width > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "invalid profile parameters: {self:?}"
            )))
        }
    }
}

/// A profile scaled by an amplitude.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Term {
    #[serde(flatten)]
    pub shape: Shape,
    pub amplitude: f64,
}

impl Term {
    pub fn new(shape: Shape, amplitude: f64) -> Term {
        Term { shape, amplitude }
    }
}

fn sum_terms(terms: &[Term], x: &Point) -> f64 {
    terms.iter().map(|t| t.amplitude * t.shape.value(x)).sum()
}

fn amplitude_bound(terms: &[Term]) -> f64 {
    terms.iter().map(|t| t.amplitude.abs()).sum()
}

/// Dependence of `V` on `s = |u|`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum Nonlinearity {
    /// `V(x, s) = V0(x)`.
    Linear,
    /// `V(x, s) = V0(x) s^gamma`.
    Power { gamma: f64 },
    /// `V(x, s) = V0(x) + beta(x) (s^2 - 1)`.
    Quadratic { beta: Vec<Term> },
}

/// `V(x, s)` with profile `V0 = sum of terms` (real part) plus optional
/// absorption terms (imaginary part of `V0`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PotentialModel {
    pub dim: Dim,
    pub terms: Vec<Term>,
    pub nonlinearity: Nonlinearity,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub absorption: Vec<Term>,
    /// Decay exponent of the tail the compact support stands in for; metadata only.
    pub decay_exponent: f64,
}

impl PotentialModel {
    pub fn new(dim: Dim, terms: Vec<Term>, nonlinearity: Nonlinearity) -> Result<PotentialModel> {
        let model = PotentialModel {
            dim,
            terms,
            nonlinearity,
            absorption: Vec::new(),
            decay_exponent: dim.n() as f64 + 1.0,
        };
        model.validate()?;
        Ok(model)
    }

    /// The model `V = 0`.
    pub fn zero(dim: Dim) -> PotentialModel {
        PotentialModel {
            dim,
            terms: Vec::new(),
            nonlinearity: Nonlinearity::Linear,
            absorption: Vec::new(),
            decay_exponent: dim.n() as f64 + 1.0,
        }
    }

    pub fn with_absorption(mut self, absorption: Vec<Term>) -> Result<PotentialModel> {
        self.absorption = absorption;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        for t in self.all_terms() {
            t.shape.validate()?;
            if !t.amplitude.is_finite() {
                return Err(Error::Config("amplitudes must be finite".into()));
            }
            if self.dim == Dim::Two && t.shape.center()[2] != 0.0 {
                return Err(Error::Config(
                    "two-dimensional profile has a third center component".into(),
                ));
            }
        }
        if let Nonlinearity::Power { gamma } = self.nonlinearity {
            if !gamma.is_finite() || gamma < 0.0 {
                return Err(Error::Config(format!(
                    "power-law exponent must be >= 0, got {gamma}"
                )));
            }
        }
        if !(self.decay_exponent > self.dim.n() as f64) {
            return Err(Error::Config(
                "decay exponent must exceed the dimension".into(),
            ));
        }
        Ok(())
    }

    fn all_terms(&self) -> impl Iterator<Item = &Term> {
        let beta: &[Term] = match &self.nonlinearity {
            Nonlinearity::Quadratic { beta } => beta,
            _ => &[],
        };
        self.terms.iter().chain(&self.absorption).chain(beta)
    }

    pub fn is_real(&self) -> bool {
        self.absorption.iter().all(|t| t.amplitude == 0.0)
    }

    pub fn is_zero(&self) -> bool {
        self.all_terms().all(|t| t.amplitude == 0.0)
    }

    /// Radius about the origin outside which `V` vanishes for every `s`.
    pub fn support_radius(&self) -> f64 {
        self.all_terms()
            .filter(|t| t.amplitude != 0.0)
            .map(|t| norm(t.shape.center()) + t.shape.extent())
            .fold(0.0, f64::max)
    }

    /// `V(x, 1)` (real part).
    pub fn v1(&self, x: &Point) -> f64 {
        sum_terms(&self.terms, x)
    }

    fn beta(&self, x: &Point) -> f64 {
        match &self.nonlinearity {
            Nonlinearity::Quadratic { beta } => sum_terms(beta, x),
            _ => 0.0,
        }
    }

    /// `V(x, s)` including the absorption part.
    pub fn eval_complex(&self, x: &Point, s: f64) -> Complex64 {
        let v0 = Complex64::new(self.v1(x), sum_terms(&self.absorption, x));
        self.apply_law(v0, self.beta(x), s)
    }

    fn apply_law(&self, v0: Complex64, beta: f64, s: f64) -> Complex64 {
        match self.nonlinearity {
            Nonlinearity::Linear => v0,
            Nonlinearity::Power { gamma } => v0 * power(s, gamma),
            Nonlinearity::Quadratic { .. } => v0 + beta * (s * s - 1.0),
        }
    }

    /// Precomputes the `s`-independent data of `V` on the nodes of `grid`.
    pub fn sample(&self, grid: &Grid) -> SampledPotential {
        let mut nodes = Vec::new();
        let mut base = Vec::new();
        let mut beta = Vec::new();
        for idx in 0..grid.len() {
            let x = grid.node(idx);
            let v0 = Complex64::new(self.v1(&x), sum_terms(&self.absorption, &x));
            let b = self.beta(&x);
            if v0 != Complex64::new(0.0, 0.0) || b != 0.0 {
                nodes.push(idx);
                base.push(v0);
                beta.push(b);
            }
        }
        SampledPotential {
            model: self.clone(),
            nodes,
            base,
            beta,
        }
    }

    /// `V(., 1)` on every node of `grid`.
    pub fn sample_v1(&self, grid: &Grid) -> Vec<f64> {
        (0..grid.len()).map(|i| self.v1(&grid.node(i))).collect()
    }

    /// Analytic jump set of `V(., 1)`.
    pub fn jump_set(&self) -> Vec<(Point, f64)> {
        self.terms
            .iter()
            .filter(|t| t.amplitude != 0.0)
            .flat_map(|t| t.shape.jumps())
            .collect()
    }
}

fn power(s: f64, gamma: f64) -> f64 {
    if gamma == 2.0 {
        s * s
    } else if gamma == 1.0 {
        s
    } else if gamma == 0.0 {
        1.0
    } else {
        s.powf(gamma)
    }
}

/// `V(., s)` data restricted to the nodes where it can be nonzero.
#[derive(Clone, Debug)]
pub struct SampledPotential {
    model: PotentialModel,
    pub nodes: Vec<usize>,
    base: Vec<Complex64>,
    beta: Vec<f64>,
}

impl SampledPotential {
    /// `V(x_j, s)` for the `j`-th stored node.
    pub fn coefficient(&self, j: usize, s: f64) -> Complex64 {
        self.model.apply_law(self.base[j], self.beta[j], s)
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// `V(x, s)`, real part.
pub fn eval_potential(model: &PotentialModel, x: &Point, s: f64) -> Result<f64> {
    if !(s >= 0.0) {
        return Err(Error::Domain(format!("s must be nonnegative, got {s}")));
    }
    Ok(model.eval_complex(x, s).re)
}

/// `(V(x, 1), d/ds V(x, s) at s = 1)`.
pub fn taylor_components(model: &PotentialModel, x: &Point) -> (f64, f64) {
    let v1 = model.v1(x);
    let vstar = match &model.nonlinearity {
        Nonlinearity::Linear => 0.0,
        Nonlinearity::Power { gamma } => gamma * v1,
        Nonlinearity::Quadratic { .. } => 2.0 * model.beta(x),
    };
    (v1, vstar)
}

/// Uniform bound on `|d^2/ds^2 V(x, 1 + s*)|` over `|s*| <= s_max`.
pub fn remainder_bound(model: &PotentialModel, s_max: f64) -> Result<f64> {
    if !(s_max >= 0.0) {
        return Err(Error::Domain(format!(
            "s_max must be nonnegative, got {s_max}"
        )));
    }
    Ok(match &model.nonlinearity {
        Nonlinearity::Linear => 0.0,
        Nonlinearity::Power { gamma } => {
            let c = gamma * (gamma - 1.0);
            if c == 0.0 {
                return Ok(0.0);
            }
            let e = gamma - 2.0;
            let factor = if e >= 0.0 {
                (1.0 + s_max).powf(e)
            } else if s_max < 1.0 {
                (1.0 - s_max).powf(e)
            } else {
                f64::INFINITY
            };
            amplitude_bound(&model.terms) * c.abs() * factor
        }
        Nonlinearity::Quadratic { beta } => 2.0 * amplitude_bound(beta),
    })
}
