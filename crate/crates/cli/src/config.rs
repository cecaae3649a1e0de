//! Experiment configuration, read from TOML and echoed into JSON sidecars.

use std::path::{Path, PathBuf};

use bihscat::analysis::{GainOptions, Window};
use bihscat::forward::SolverOptions;
use bihscat::geometry::{
    check_unit, direction_2d, point_from_slice, sphere_quadrature, Dim, DirectionSet, Grid, Point,
};
use bihscat::potential::{Nonlinearity, PotentialModel, Shape, Term};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dimension: u32,
    pub grid: GridSpec,
    pub potential: PotentialSpec,
    pub sweep: SweepSpec,
    pub incident: IncidentSpec,
    #[serde(default)]
    pub solver: SolverSpec,
    pub inversion: Option<GridSpec>,
    #[serde(default)]
    pub analysis: AnalysisSpec,
    #[serde(default)]
    pub output: OutputSpec,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    /// Nodes per axis.
    pub n: usize,
    /// The box is `[-half_width, half_width)^n`.
    pub half_width: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSpec {
    #[serde(default)]
    pub law: Law,
    /// Exponent of the power law.
    pub gamma: Option<f64>,
    #[serde(default)]
    pub terms: Vec<TermSpec>,
    /// Coupling profile of the quadratic law.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub beta: Vec<TermSpec>,
    /// Imaginary part of the profile.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub absorption: Vec<TermSpec>,
    pub decay_exponent: Option<f64>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Law {
    #[default]
    Linear,
    Power,
    Quadratic,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case", deny_unknown_fields)]
pub enum TermSpec {
    Ball {
        center: Vec<f64>,
        radius: f64,
        amplitude: f64,
    },
    Annulus {
        center: Vec<f64>,
        inner: f64,
        outer: f64,
        amplitude: f64,
    },
    Gaussian {
        center: Vec<f64>,
        width: f64,
        amplitude: f64,
    },
    SmoothBump {
        center: Vec<f64>,
        radius: f64,
        amplitude: f64,
    },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataSource {
    /// Nonlinear forward solves.
    #[default]
    Solver,
    /// First Born amplitudes of the grid-sampled `V(., 1)`.
    SyntheticLinear,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub k_min: f64,
    pub k_max: f64,
    pub count_k: usize,
    /// Observation directions `M`.
    pub directions: usize,
    /// Cutoff below which amplitudes are treated as zero; defaults to `k_min`.
    pub k0: Option<f64>,
    #[serde(default)]
    pub source: DataSource,
    /// Drop low `k` whose solves fail to contract and raise `k0` instead of failing.
    #[serde(default)]
    pub auto_k0: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IncidentSpec {
    /// Polar angle in radians (two dimensions only).
    pub angle: Option<f64>,
    pub direction: Option<Vec<f64>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
}

fn default_tol() -> f64 {
    SolverOptions::default().tol
}

fn default_max_iter() -> usize {
    SolverOptions::default().max_iter
}

impl Default for SolverSpec {
    fn default() -> SolverSpec {
        SolverSpec {
            tol: default_tol(),
            max_iter: default_max_iter(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisSpec {
    /// Fit band in units of `pi / L`.
    #[serde(default = "default_band")]
    pub band: [f64; 2],
    #[serde(default = "default_shells")]
    pub shells: usize,
    /// `[r0, r1]` of the radial taper, `"none"`, or omitted for `[L/2, 0.9 L]`.
    #[serde(default)]
    pub window: WindowSpec,
    #[serde(default = "default_min_r2")]
    pub min_r2: f64,
}

fn default_band() -> [f64; 2] {
    [8.0, 32.0]
}

fn default_shells() -> usize {
    16
}

fn default_min_r2() -> f64 {
    0.9
}

impl Default for AnalysisSpec {
    fn default() -> AnalysisSpec {
        AnalysisSpec {
            band: default_band(),
            shells: default_shells(),
            window: WindowSpec::Default,
            min_r2: default_min_r2(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WindowSpec {
    #[default]
    Default,
    Radii([f64; 2]),
    Keyword(String),
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub dataset: Option<PathBuf>,
    pub field: Option<PathBuf>,
    pub report: Option<PathBuf>,
    pub shells: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<ExperimentConfig, CliError> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<ExperimentConfig, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        ExperimentConfig::from_toml_str(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn dim(&self) -> Result<Dim, CliError> {
        Ok(Dim::from_n(self.dimension)?)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let model = self.model()?;
        let grid = self.grid()?;
        if let Some(out) = &self.inversion {
            Grid::new(grid.dim, out.n, out.half_width)?;
        }
        let support = model.support_radius();
        if support >= 0.5 * grid.half_width {
            return Err(CliError::Config(format!(
                "potential support radius {support} must be below half the box half-width ({})",
                0.5 * grid.half_width
            )));
        }
        let s = &self.sweep;
        if !(s.k_min > 0.0) || !(s.k_max >= s.k_min) || !s.k_max.is_finite() {
            return Err(CliError::Config(format!(
                "need 0 < k_min <= k_max, got [{}, {}]",
                s.k_min, s.k_max
            )));
        }
        if s.count_k == 0 {
            return Err(CliError::Config("count_k must be at least 1".into()));
        }
        if s.count_k == 1 && s.k_max != s.k_min {
            return Err(CliError::Config(
                "a single k sample needs k_max = k_min".into(),
            ));
        }
        if let Some(k0) = s.k0 {
            if !(k0 > 0.0 && k0 <= s.k_min) {
                return Err(CliError::Config(format!(
                    "k0 = {k0} must lie in (0, k_min]"
                )));
            }
        }
        self.directions()?;
        self.theta0()?;
        if !(self.solver.tol > 0.0) || self.solver.max_iter == 0 {
            return Err(CliError::Config(
                "solver needs tol > 0 and max_iter >= 1".into(),
            ));
        }
        let a = &self.analysis;
        if !(a.band[0] > 0.0 && a.band[1] > a.band[0]) || a.shells == 0 {
            return Err(CliError::Config(
                "analysis band must satisfy 0 < lo < hi and shells >= 1".into(),
            ));
        }
        self.window(&grid)?;
        Ok(())
    }

    pub fn grid(&self) -> Result<Grid, CliError> {
        Ok(Grid::new(self.dim()?, self.grid.n, self.grid.half_width)?)
    }

    /// Output grid of the inversion; the forward grid when not given.
    pub fn out_grid(&self) -> Result<Grid, CliError> {
        let spec = self.inversion.unwrap_or(self.grid);
        Ok(Grid::new(self.dim()?, spec.n, spec.half_width)?)
    }

    pub fn model(&self) -> Result<PotentialModel, CliError> {
        let dim = self.dim()?;
        let p = &self.potential;
        let terms = convert_terms(dim, &p.terms)?;
        let nonlinearity = match p.law {
            Law::Linear => Nonlinearity::Linear,
            Law::Power => Nonlinearity::Power {
                gamma: p
                    .gamma
                    .ok_or_else(|| CliError::Config("law = \"power\" needs gamma".into()))?,
            },
            Law::Quadratic => Nonlinearity::Quadratic {
                beta: convert_terms(dim, &p.beta)?,
            },
        };
        if p.law != Law::Power && p.gamma.is_some() {
            return Err(CliError::Config(
                "gamma is only used with law = \"power\"".into(),
            ));
        }
        if p.law != Law::Quadratic && !p.beta.is_empty() {
            return Err(CliError::Config(
                "beta terms are only used with law = \"quadratic\"".into(),
            ));
        }
        let mut model = PotentialModel::new(dim, terms, nonlinearity)?;
        if let Some(mu) = p.decay_exponent {
            model.decay_exponent = mu;
            model.validate()?;
        }
        if !p.absorption.is_empty() {
            model = model.with_absorption(convert_terms(dim, &p.absorption)?)?;
        }
        Ok(model)
    }

    /// `count_k` equispaced wavenumbers from `k_min` to `k_max`.
    pub fn ks(&self) -> Vec<f64> {
        let s = &self.sweep;
        if s.count_k == 1 {
            return vec![s.k_min];
        }
        let step = (s.k_max - s.k_min) / (s.count_k - 1) as f64;
        (0..s.count_k)
            .map(|i| {
                if i + 1 == s.count_k {
                    s.k_max
                } else {
                    s.k_min + step * i as f64
                }
            })
            .collect()
    }

    pub fn k0(&self) -> f64 {
        self.sweep.k0.unwrap_or(self.sweep.k_min)
    }

    pub fn directions(&self) -> Result<DirectionSet, CliError> {
        Ok(sphere_quadrature(self.dim()?, self.sweep.directions)?)
    }

    pub fn theta0(&self) -> Result<Point, CliError> {
        let dim = self.dim()?;
        let t = match (&self.incident.angle, &self.incident.direction) {
            (Some(phi), None) if dim == Dim::Two => direction_2d(*phi),
            (Some(_), None) => {
                return Err(CliError::Config(
                    "incident.angle is only valid in two dimensions".into(),
                ))
            }
            (None, Some(v)) => point_from_slice(dim, v)?,
            _ => {
                return Err(CliError::Config(
                    "give exactly one of incident.angle and incident.direction".into(),
                ))
            }
        };
        check_unit(dim, &t)?;
        Ok(t)
    }

    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions {
            tol: self.solver.tol,
            max_iter: self.solver.max_iter,
        }
    }

    pub fn window(&self, grid: &Grid) -> Result<Option<Window>, CliError> {
        match &self.analysis.window {
            WindowSpec::Default => Ok(Some(Window::default_for(grid))),
            WindowSpec::Radii([r0, r1]) if *r0 >= 0.0 && r1 > r0 => {
                Ok(Some(Window { r0: *r0, r1: *r1 }))
            }
            WindowSpec::Keyword(k) if k == "none" => Ok(None),
            other => Err(CliError::Config(format!(
                "invalid analysis.window {other:?}"
            ))),
        }
    }

    pub fn gain_options(&self, grid: &Grid) -> Result<GainOptions, CliError> {
        let a = &self.analysis;
        Ok(GainOptions {
            band: (a.band[0], a.band[1]),
            shells: a.shells,
            window: self.window(grid)?,
            min_r2: a.min_r2,
        })
    }
}

fn convert_terms(dim: Dim, specs: &[TermSpec]) -> Result<Vec<Term>, CliError> {
    specs
        .iter()
        .map(|t| {
            let (shape, amplitude) = match t {
                TermSpec::Ball {
                    center,
                    radius,
                    amplitude,
                } => (
                    Shape::Ball {
                        center: point_from_slice(dim, center)?,
                        radius: *radius,
                    },
                    *amplitude,
                ),
                TermSpec::Annulus {
                    center,
                    inner,
                    outer,
                    amplitude,
                } => (
                    Shape::Annulus {
                        center: point_from_slice(dim, center)?,
                        inner: *inner,
                        outer: *outer,
                    },
                    *amplitude,
                ),
                TermSpec::Gaussian {
                    center,
                    width,
                    amplitude,
                } => (
                    Shape::Gaussian {
                        center: point_from_slice(dim, center)?,
                        width: *width,
                    },
                    *amplitude,
                ),
                TermSpec::SmoothBump {
                    center,
                    radius,
                    amplitude,
                } => (
                    Shape::SmoothBump {
                        center: point_from_slice(dim, center)?,
                        radius: *radius,
                    },
                    *amplitude,
                ),
            };
            Ok(Term::new(shape, amplitude))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const BALL: &str = r#"
dimension = 2

[grid]
n = 64
half_width = 1.5

[potential]
law = "power"
gamma = 2.0

[[potential.terms]]
shape = "ball"
center = [0.0, 0.0]
radius = 0.5
amplitude = 1.0

[sweep]
k_min = 4.0
k_max = 28.0
count_k = 4
directions = 16

[incident]
angle = 0.0
"#;

    #[test]
    fn parses_minimal_config() {
        let cfg = ExperimentConfig::from_toml_str(BALL).unwrap();
        assert_eq!(cfg.ks(), vec![4.0, 12.0, 20.0, 28.0]);
        assert_eq!(cfg.k0(), 4.0);
        assert_eq!(cfg.theta0().unwrap(), [1.0, 0.0, 0.0]);
        assert_eq!(cfg.out_grid().unwrap(), cfg.grid().unwrap());
        assert!(
            matches!(cfg.model().unwrap().nonlinearity, Nonlinearity::Power { gamma } if gamma == 2.0)
        );
        assert_eq!(cfg.solver_options(), SolverOptions::default());
    }

    #[test]
    fn json_echo_round_trips() {
        let cfg = ExperimentConfig::from_toml_str(BALL).unwrap();
        let json = serde_json::to_string(&cfg).unwrap();
        let back: ExperimentConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn rejects_bad_configs() {
        let wide = BALL.replace("radius = 0.5", "radius = 0.8");
        assert!(
            matches!(ExperimentConfig::from_toml_str(&wide), Err(CliError::Config(m)) if m.contains("support"))
        );
        let no_gamma = BALL.replace("gamma = 2.0", "");
        assert!(ExperimentConfig::from_toml_str(&no_gamma).is_err());
        let both = BALL.replace("angle = 0.0", "angle = 0.0\ndirection = [1.0, 0.0]");
        assert!(ExperimentConfig::from_toml_str(&both).is_err());
        let typo = BALL.replace("count_k", "count_kk");
        assert!(ExperimentConfig::from_toml_str(&typo).is_err());
        let few = BALL.replace("directions = 16", "directions = 4");
        assert!(ExperimentConfig::from_toml_str(&few).is_err());
        let three = BALL.replace("dimension = 2", "dimension = 3");
        assert!(ExperimentConfig::from_toml_str(&three).is_err());
    }

    #[test]
    fn window_keywords() {
        let none = format!("{BALL}\n[analysis]\nwindow = \"none\"\n");
        let cfg = ExperimentConfig::from_toml_str(&none).unwrap();
        assert_eq!(cfg.window(&cfg.grid().unwrap()).unwrap(), None);
        let radii = format!("{BALL}\n[analysis]\nwindow = [0.5, 1.0]\n");
        let cfg = ExperimentConfig::from_toml_str(&radii).unwrap();
        assert_eq!(
            cfg.window(&cfg.grid().unwrap()).unwrap(),
            Some(Window { r0: 0.5, r1: 1.0 })
        );
    }
}
