//! The `forward`, `invert` and `diagnose` subcommands.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use bihscat::analysis::{grid_l2_sq, sobolev_gain, SmoothnessReport};
use bihscat::farfield::{sweep, AmplitudeDataset, Provenance};
use bihscat::formats::{
    read_amplitudes, read_field, write_amplitudes, write_field, FieldFile, FieldValues,
};
use bihscat::forward::SolverOptions;
use bihscat::geometry::{Grid, Point};
use bihscat::inversion::{born_invert, sampled_linear_dataset};
use bihscat::potential::PotentialModel;
use bihscat::{Error, Execution};
use log::{info, warn};
use serde::{Deserialize, Serialize};

use crate::config::{DataSource, ExperimentConfig, GridSpec};
use crate::error::CliError;

/// `<name>.meta.json` next to the file `<name>`.
pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(".meta.json");
    PathBuf::from(name)
}

/// Sidecar of a `BIHAMP1` dataset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub format: String,
    pub provenance: Provenance,
    pub real_potential: bool,
    pub grid: GridSpec,
    pub model: PotentialModel,
    pub solver: SolverOptions,
    /// Cutoff written to the dataset header.
    pub k0: f64,
    /// Wavenumbers dropped because their solves did not contract.
    pub rejected_ks: Vec<f64>,
    pub iterations: Vec<usize>,
    pub max_delta_ratio: Vec<f64>,
    pub config: ExperimentConfig,
}

/// Sidecar of a `BIHFLD1` reconstruction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldMeta {
    pub format: String,
    pub source: String,
    pub provenance: Provenance,
    pub imag_residual: f64,
    pub flagged: bool,
    pub k_band: (f64, f64),
    pub ks: Vec<f64>,
    pub k0: f64,
    pub config: Option<ExperimentConfig>,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Other(e.to_string()))?;
    std::fs::write(path, text + "\n").map_err(|e| CliError::io(path, e))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Option<T>, CliError> {
    match std::fs::read_to_string(path) {
        Ok(text) => serde_json::from_str(&text)
            .map(Some)
            .map_err(|e| CliError::Format(format!("{}: {e}", path.display()))),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
        Err(e) => Err(CliError::io(path, e)),
    }
}

/// Attaches the path to I/O failures coming out of the library.
fn at_path(path: &Path) -> impl Fn(Error) -> CliError + '_ {
    move |e| match e {
        Error::Io(source) => CliError::io(path, source),
        Error::Format { .. } => CliError::Format(format!("{}: {e}", path.display())),
        other => other.into(),
    }
}

pub fn write_dataset(path: &Path, ds: &AmplitudeDataset) -> Result<(), CliError> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    write_amplitudes(BufWriter::new(file), ds).map_err(at_path(path))
}

pub fn read_dataset(path: &Path) -> Result<AmplitudeDataset, CliError> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    read_amplitudes(BufReader::new(file)).map_err(at_path(path))
}

pub fn write_field_file(path: &Path, grid: &Grid, values: Vec<f64>) -> Result<(), CliError> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let field = FieldFile {
        grid: *grid,
        values: FieldValues::Real(values),
    };
    write_field(BufWriter::new(file), &field).map_err(at_path(path))
}

pub fn read_field_file(path: &Path) -> Result<FieldFile, CliError> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    read_field(BufReader::new(file)).map_err(at_path(path))
}

#[derive(Clone, Debug)]
pub struct ForwardSummary {
    pub path: PathBuf,
    pub rows: usize,
    pub k0: f64,
    pub rejected_ks: Vec<f64>,
    pub max_delta_ratio: f64,
}

/// Builds the dataset described by `cfg` and writes it with its sidecar.
pub fn run_forward(
    cfg: &ExperimentConfig,
    out: Option<&Path>,
    exec: Execution,
) -> Result<ForwardSummary, CliError> {
    let path = out
        .map(Path::to_path_buf)
        .or_else(|| cfg.output.dataset.clone())
        .ok_or_else(|| {
            CliError::Config("no dataset path: pass --out or set output.dataset".into())
        })?;
    let model = cfg.model()?;
    let grid = cfg.grid()?;
    let dirs = cfg.directions()?;
    let theta0 = cfg.theta0()?;
    let opts = cfg.solver_options();
    let ks = cfg.ks();
    let mut k0 = cfg.k0();
    let mut rejected = Vec::new();
    let (ds, iterations, ratios) = match cfg.sweep.source {
        DataSource::SyntheticLinear => {
            let samples = model.sample_v1(&grid);
            let ds = sampled_linear_dataset(&samples, &grid, &theta0, &ks, &dirs, k0, exec)?;
            (ds, vec![0; ks.len()], vec![0.0; ks.len()])
        }
        DataSource::Solver => {
            let rows = sweep(&model, &theta0, &ks, &dirs, &grid, k0, &opts, exec)?;
            let mut kept = Vec::new();
            for (k, row) in ks.iter().zip(rows) {
                match row {
                    Ok(r) => {
                        info!(
                            "k = {k}: {} iterations, max delta ratio {:.3e}, |u_sc| = {:.3e}",
                            r.trace.iterations,
                            r.trace.max_ratio(),
                            r.u_sc_sup
                        );
                        kept.push(r);
                    }
                    Err(Error::NonContraction { k, ratios }) => {
                        warn!("k = {k}: Born iteration not contracting (ratios {ratios:?})");
                        rejected.push(k);
                    }
                    Err(e) => return Err(e.into()),
                }
            }
            if !rejected.is_empty() {
                let lowest_kept = kept.first().map(|r| r.k).unwrap_or(f64::INFINITY);
                let low_only = rejected.iter().all(|k| *k < lowest_kept);
                if !(cfg.sweep.auto_k0 && low_only && !kept.is_empty()) {
                    return Err(CliError::NonContraction { ks: rejected });
                }
                k0 = match kept.get(1) {
                    Some(next) => (kept[0].k - 0.5 * (next.k - kept[0].k)).max(k0),
                    None => kept[0].k,
                };
                warn!("rejected k = {rejected:?}; effective k0 = {k0}");
            }
            let mut values = Vec::with_capacity(kept.len() * dirs.len());
            let mut iterations = Vec::new();
            let mut ratios = Vec::new();
            let mut kept_ks = Vec::new();
            for r in kept {
                values.extend(r.amplitudes);
                iterations.push(r.trace.iterations);
                ratios.push(r.trace.max_ratio());
                kept_ks.push(r.k);
            }
            let ds = AmplitudeDataset::new(
                theta0,
                k0,
                kept_ks,
                dirs.clone(),
                values,
                Provenance::Solver,
            )?;
            (ds, iterations, ratios)
        }
    };
    let mut ds = ds;
    ds.real_potential = model.is_real();
    write_dataset(&path, &ds)?;
    let meta = DatasetMeta {
        format: "BIHAMP1".into(),
        provenance: ds.provenance,
        real_potential: ds.real_potential,
        grid: cfg.grid,
        model,
        solver: opts,
        k0,
        rejected_ks: rejected.clone(),
        iterations,
        max_delta_ratio: ratios.clone(),
        config: cfg.clone(),
    };
    write_json(&sidecar_path(&path), &meta)?;
    Ok(ForwardSummary {
        path,
        rows: ds.ks.len(),
        k0,
        rejected_ks: rejected,
        max_delta_ratio: ratios.into_iter().fold(0.0, f64::max),
    })
}

#[derive(Clone, Debug)]
pub struct InvertSummary {
    pub path: PathBuf,
    pub imag_residual: f64,
    pub flagged: bool,
    /// `||q_B - V(., 1)||_2 / ||V(., 1)||_2` when a config supplies the profile.
    pub profile_error: Option<f64>,
}

/// Inverts the dataset at `input` onto the grid `out_spec` and writes the field and its sidecar.
pub fn run_invert(
    input: &Path,
    out_spec: GridSpec,
    out: &Path,
    cfg: Option<&ExperimentConfig>,
    exec: Execution,
) -> Result<InvertSummary, CliError> {
    let mut ds = read_dataset(input)?;
    if let Some(c) = cfg {
        if c.dim()? != ds.dim {
            return Err(CliError::Format(format!(
                "dimension mismatch: {} holds {}-D data, the config is {}-D",
                input.display(),
                ds.dim.n(),
                c.dimension
            )));
        }
    }
    let out_grid = &Grid::new(ds.dim, out_spec.n, out_spec.half_width)?;
    let meta: Option<DatasetMeta> = read_json(&sidecar_path(input))?;
    match &meta {
        Some(m) => {
            ds.provenance = m.provenance;
            ds.real_potential = m.real_potential;
        }
        None => warn!("{}: no sidecar; provenance unspecified", input.display()),
    }
    let rec = born_invert(&ds, out_grid, exec)?;
    if rec.flagged() {
        warn!(
            "imaginary residual {:.3e} exceeds 1e-6 of the peak",
            rec.imag_residual
        );
    }
    let profile_error = match cfg {
        Some(c) => {
            let truth = c.model()?.sample_v1(out_grid);
            let diff: Vec<f64> = rec.values.iter().zip(&truth).map(|(a, b)| a - b).collect();
            let denom = grid_l2_sq(&truth, out_grid);
            (denom > 0.0).then(|| (grid_l2_sq(&diff, out_grid) / denom).sqrt())
        }
        None => None,
    };
    write_field_file(out, out_grid, rec.values.clone())?;
    let fmeta = FieldMeta {
        format: "BIHFLD1".into(),
        source: input.display().to_string(),
        provenance: rec.provenance,
        imag_residual: rec.imag_residual,
        flagged: rec.flagged(),
        k_band: rec.k_band,
        ks: ds.ks.clone(),
        k0: ds.k0,
        config: cfg.cloned().or(meta.map(|m| m.config)),
    };
    write_json(&sidecar_path(out), &fmeta)?;
    Ok(InvertSummary {
        path: out.to_path_buf(),
        imag_residual: rec.imag_residual,
        flagged: rec.flagged(),
        profile_error,
    })
}

#[derive(Clone, Debug)]
pub struct DiagnoseSummary {
    /// Gain of `q_B - V(., 1)` over `V(., 1)`.
    pub literal: SmoothnessReport,
    /// Gain of `q_B - q_B[linear data of V(., 1)]` over `V(., 1)`.
    pub nonlinear: SmoothnessReport,
    /// `||q_B[linear data] - V(., 1)||_2 / ||V(., 1)||_2`.
    pub band_limit_residual: f64,
    pub imag_residual: Option<f64>,
    pub spacing: f64,
}

impl DiagnoseSummary {
    pub fn reliable(&self) -> bool {
        self.literal.reliable && self.nonlinear.reliable
    }
}

/// Fourier-decay and jump diagnostics of a reconstruction against the model of `cfg`.
pub fn diagnose(
    recon: &[f64],
    grid: &Grid,
    cfg: &ExperimentConfig,
    lattice: (&[f64], f64),
    exec: Execution,
) -> Result<DiagnoseSummary, CliError> {
    let model = cfg.model()?;
    let truth = model.sample_v1(grid);
    let jumps = model.jump_set();
    let opts = cfg.gain_options(grid)?;
    let literal = sobolev_gain(recon, &truth, None, grid, &jumps, &opts, exec)?;
    let reference = linear_reference(cfg, &model, lattice, grid, exec)?;
    let nonlinear = sobolev_gain(recon, &truth, Some(&reference), grid, &jumps, &opts, exec)?;
    let diff: Vec<f64> = reference.iter().zip(&truth).map(|(a, b)| a - b).collect();
    let band_limit_residual =
        (grid_l2_sq(&diff, grid) / grid_l2_sq(&truth, grid).max(f64::MIN_POSITIVE)).sqrt();
    Ok(DiagnoseSummary {
        literal,
        nonlinear,
        band_limit_residual,
        imag_residual: None,
        spacing: grid.spacing(),
    })
}

/// `q_B` of the first Born data of `V(., 1)` sampled on the forward grid, on the same lattice.
fn linear_reference(
    cfg: &ExperimentConfig,
    model: &PotentialModel,
    (ks, k0): (&[f64], f64),
    out_grid: &Grid,
    exec: Execution,
) -> Result<Vec<f64>, CliError> {
    let grid = cfg.grid()?;
    let theta0: Point = cfg.theta0()?;
    let ds = sampled_linear_dataset(
        &model.sample_v1(&grid),
        &grid,
        &theta0,
        ks,
        &cfg.directions()?,
        k0,
        exec,
    )?;
    Ok(born_invert(&ds, out_grid, exec)?.values)
}

/// Reads the reconstruction at `input`, writes the report and shell CSVs.
pub fn run_diagnose(
    input: &Path,
    cfg: &ExperimentConfig,
    report: &Path,
    shells: &Path,
    exec: Execution,
) -> Result<DiagnoseSummary, CliError> {
    let field = read_field_file(input)?;
    let expected = cfg.out_grid()?;
    if field.grid != expected {
        return Err(CliError::Format(format!(
            "grid mismatch: {} holds {}-D N={} L={}, the config expects {}-D N={} L={}",
            input.display(),
            field.grid.dim.n(),
            field.grid.n_per_axis,
            field.grid.half_width,
            expected.dim.n(),
            expected.n_per_axis,
            expected.half_width
        )));
    }
    let values = match field.values {
        FieldValues::Real(v) => v,
        FieldValues::Complex(_) => {
            return Err(CliError::Format(format!(
                "{}: expected a real field",
                input.display()
            )))
        }
    };
    let meta: Option<FieldMeta> = read_json(&sidecar_path(input))?;
    let ks = meta
        .as_ref()
        .map(|m| m.ks.clone())
        .unwrap_or_else(|| cfg.ks());
    let k0 = meta.as_ref().map(|m| m.k0).unwrap_or_else(|| cfg.k0());
    let mut summary = diagnose(&values, &expected, cfg, (&ks, k0), exec)?;
    summary.imag_residual = meta.map(|m| m.imag_residual);
    write_report(report, &summary)?;
    write_shells(shells, &summary.literal)?;
    if !summary.reliable() {
        warn!(
            "unreliable: a decay fit has R^2 below {}",
            cfg.analysis.min_r2
        );
    }
    Ok(summary)
}

fn csv_number(x: f64) -> String {
    if x.is_infinite() {
        if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{x}")
    }
}

pub fn write_report(path: &Path, s: &DiagnoseSummary) -> Result<(), CliError> {
    let mut rows: Vec<(String, f64, Option<(f64, f64)>, Option<f64>)> = Vec::new();
    let band = Some(s.literal.fit_range);
    rows.push((
        "slope_truth".into(),
        s.literal.slope_v,
        band,
        Some(s.literal.r2_v),
    ));
    rows.push((
        "slope_diff".into(),
        s.literal.slope_diff,
        band,
        Some(s.literal.r2_diff),
    ));
    rows.push((
        "gain".into(),
        s.literal.gain,
        band,
        Some(s.literal.r2_v.min(s.literal.r2_diff)),
    ));
    rows.push((
        "slope_diff_nonlinear".into(),
        s.nonlinear.slope_diff,
        band,
        Some(s.nonlinear.r2_diff),
    ));
    rows.push((
        "gain_nonlinear".into(),
        s.nonlinear.gain,
        band,
        Some(s.nonlinear.r2_v.min(s.nonlinear.r2_diff)),
    ));
    rows.push((
        "band_limit_residual".into(),
        s.band_limit_residual,
        None,
        None,
    ));
    rows.push((
        "jump_error_cells".into(),
        s.literal.jump_error_cells,
        None,
        None,
    ));
    rows.push((
        "jump_median_cells".into(),
        s.literal.jumps.median_error / s.spacing,
        None,
        None,
    ));
    if let Some(r) = s.imag_residual {
        rows.push(("imag_residual".into(), r, None, None));
    }
    rows.push((
        "reliable".into(),
        if s.reliable() { 1.0 } else { 0.0 },
        None,
        None,
    ));
    let mut text = String::from("quantity,value,lo,hi,r2\n");
    for (name, value, range, r2) in rows {
        let (lo, hi) = range
            .map(|(a, b)| (csv_number(a), csv_number(b)))
            .unwrap_or_default();
        let r2 = r2.map(csv_number).unwrap_or_default();
        text.push_str(&format!("{name},{},{lo},{hi},{r2}\n", csv_number(value)));
    }
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn write_shells(path: &Path, report: &SmoothnessReport) -> Result<(), CliError> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = BufWriter::new(file);
    let mut body = String::from("xi_center,mean_V,mean_diff\n");
    for ((c, v), d) in report
        .spectrum_v
        .centers
        .iter()
        .zip(&report.spectrum_v.means)
        .zip(&report.spectrum_diff.means)
    {
        body.push_str(&format!("{c},{v},{d}\n"));
    }
    w.write_all(body.as_bytes())
        .and_then(|_| w.flush())
        .map_err(|e| CliError::io(path, e))
}
