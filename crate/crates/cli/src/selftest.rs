//! Built-in consistency checks run by `bihscat selftest`.

use std::f64::consts::PI;
use std::time::Instant;

use bihscat::analysis::{decay_slope, frequency, grid_l2_sq, shell_spectrum, sobolev_norm_sq};
use bihscat::farfield::{farfield_constant, AmplitudeDataset, Provenance};
use bihscat::fft::FftNd;
use bihscat::formats::{
    read_amplitudes, read_field, write_amplitudes, write_field, FieldFile, FieldValues,
};
use bihscat::forward::{born_step, solve_ls, FieldKind, ScatterField, SolverOptions, WaveContext};
use bihscat::geometry::{
    angles_from_xi, direction_2d, dot, jacobian_weight, norm, sphere_quadrature, sub,
    xi_from_angles, Dim, FourierPoint, Grid, Point,
};
use bihscat::inversion::{born_invert, gaussian_hat, synth_linear_dataset};
use bihscat::potential::{taylor_components, Nonlinearity, PotentialModel, Shape, Term};
use bihscat::special::{bessel_j0, bessel_y0, green_kernel, green_kernel_parts, macdonald, Order};
use bihscat::{Complex64, Error, Execution};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Outcome of one named check.
#[derive(Clone, Debug)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

type Check = fn(Execution) -> Result<String, String>;

const CHECKS: &[(&str, Check)] = &[
    ("bessel_reference_values", bessel_reference_values),
    ("kernel_n3_closed_form", kernel_n3_closed_form),
    ("kernel_conjugation", kernel_conjugation),
    ("kernel_n2_origin_limit", kernel_n2_origin_limit),
    ("macdonald_symbol_identity", macdonald_symbol_identity),
    ("coordinate_round_trip", coordinate_round_trip),
    ("jacobian_lattice_measure", jacobian_lattice_measure),
    ("sphere_quadrature", sphere_rule),
    ("born_step_direct_sum", born_step_direct_sum),
    ("taylor_consistency", taylor_consistency),
    ("farfield_n3_constant", farfield_n3_constant),
    ("format_round_trip", format_round_trip),
    ("linear_gaussian_inversion", linear_gaussian_inversion),
    ("parseval", parseval),
    ("slope_calibration", slope_calibration),
    ("sequential_parallel_agree", sequential_parallel_agree),
];

/// Runs every check in order.
pub fn run_all(exec: Execution) -> Vec<CheckResult> {
    CHECKS
        .iter()
        .map(|(name, check)| {
            let start = Instant::now();
            let outcome = check(exec);
            let seconds = start.elapsed().as_secs_f64();
            let (passed, detail) = match outcome {
                Ok(d) => (true, d),
                Err(d) => (false, d),
            };
            CheckResult {
                name,
                passed,
                detail,
                seconds,
            }
        })
        .collect()
}

fn lib<T>(r: bihscat::Result<T>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn require(ok: bool, detail: String) -> Result<String, String> {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn bessel_reference_values(_: Execution) -> Result<String, String> {
    // Values to 16 digits from standard tables.
    let cases = [
        ("J0(1)", lib(bessel_j0(1.0))?, 0.765_197_686_557_966_6),
        ("Y0(1)", lib(bessel_y0(1.0))?, 0.088_256_964_215_676_96),
        (
            "K0(1)",
            lib(macdonald(Order::Zero, 1.0))?,
            0.421_024_438_240_708_3,
        ),
        ("J0(10)", lib(bessel_j0(10.0))?, -0.245_935_764_451_348_3),
        ("Y0(25)", lib(bessel_y0(25.0))?, -0.127_249_432_268_006_1),
    ];
    let worst = cases
        .iter()
        .map(|(_, got, want)| ((got - want) / want).abs())
        .fold(0.0, f64::max);
    require(worst <= 1e-10, format!("max relative error {worst:.2e}"))
}

fn kernel_n3_closed_form(_: Execution) -> Result<String, String> {
    let mut worst: f64 = 0.0;
    for k in [1.0, 5.0, 10.0] {
        for i in 0..200 {
            let r = 1e-3 * (2e4f64).powf(i as f64 / 199.0);
            let closed = (Complex64::cis(k * r) - (-k * r).exp()) / (8.0 * PI * k * k * r);
            let g = lib(green_kernel(k, r, Dim::Three))?;
            worst = worst.max((g - closed).norm() / closed.norm());
        }
    }
    require(worst <= 1e-12, format!("max relative error {worst:.2e}"))
}

fn kernel_conjugation(_: Execution) -> Result<String, String> {
    for dim in [Dim::Two, Dim::Three] {
        for k in [0.3, 4.0, 37.0] {
            for r in [0.0, 0.01, 1.0, 9.5] {
                let plus = lib(green_kernel(k, r, dim))?;
                let minus = lib(green_kernel(-k, r, dim))?;
                if minus != plus.conj() {
                    return Err(format!("{dim:?} k = {k} r = {r}: {minus} vs conj {plus}"));
                }
            }
        }
    }
    Ok("bitwise".into())
}

fn kernel_n2_origin_limit(_: Execution) -> Result<String, String> {
    let k = 3.0;
    let limit = Complex64::new(0.0, 1.0 / (8.0 * k * k));
    let at0 = lib(green_kernel(k, 0.0, Dim::Two))?;
    let near = lib(green_kernel(k, 1e-8, Dim::Two))?;
    let err = (near - limit).norm() / limit.norm();
    require(
        at0 == limit && err <= 1e-6,
        format!("relative gap at r = 1e-8: {err:.2e}"),
    )
}

/// Lattice constant `c` with `sum'_{j != 0} ln|j| f(j) + c f(0) ~ int ln|x| f(x) dx`
/// on the unit square lattice, from Gaussian test functions and Richardson extrapolation.
pub fn log_lattice_constant() -> f64 {
    let at = |sigma: f64| {
        let reach = (7.0 * sigma) as i64;
        let mut lattice = 0.0;
        for i in -reach..=reach {
            for j in -reach..=reach {
                if i == 0 && j == 0 {
                    continue;
                }
                let r2 = (i * i + j * j) as f64;
                lattice += 0.5 * r2.ln() * (-r2 / (sigma * sigma)).exp();
            }
        }
        PI * sigma * sigma * (sigma.ln() - 0.5 * EULER_GAMMA) - lattice
    };
    // c(sigma) = c + a / sigma^2.
    (4.0 * at(60.0) - at(30.0)) / 3.0
}

/// Largest relative gap between the lattice transform of the 2-D Macdonald
/// part and `-green_symbol_k` over `|xi| <= k`.
pub fn macdonald_symbol_gap(k: f64, n: usize, half_width: f64, c: f64) -> Result<f64, String> {
    let grid = lib(Grid::new(Dim::Two, n, half_width))?;
    let h = grid.spacing();
    let origin = grid.origin_index();
    let mut buf = Vec::with_capacity(grid.len());
    for i in 0..grid.len() {
        let v = if i == origin {
            // K0(kr) = -ln r + s0 + O(r^2 ln r) near the origin.
            let s0 = -(0.5 * k).ln() - EULER_GAMMA;
            -(s0 - (h.ln() + c)) / (4.0 * PI * k * k)
        } else {
            let r = norm(&grid.node(i));
            lib(green_kernel_parts(k, r, Dim::Two))?.1
        };
        buf.push(Complex64::new(v * h * h, 0.0));
    }
    // Put the origin at index 0 so the transform carries no phase.
    let shift = grid.n_per_axis / 2;
    let mut rolled = vec![Complex64::default(); buf.len()];
    for (i, v) in buf.iter().enumerate() {
        let [a, b, _] = grid.unravel(i);
        let j = ((a + shift) % n) * n + (b + shift) % n;
        rolled[j] = *v;
    }
    FftNd::new(Dim::Two, n).forward(&mut rolled, Execution::Sequential);
    let mut worst: f64 = 0.0;
    for (i, v) in rolled.iter().enumerate() {
        let xi = norm(&frequency(&grid, i));
        if xi <= k {
            let want = -lib(bihscat::special::green_symbol_k(k, xi))?;
            worst = worst.max((v - want).norm() / want.abs());
        }
    }
    Ok(worst)
}

fn macdonald_symbol_identity(_: Execution) -> Result<String, String> {
    let c = log_lattice_constant();
    let gap = macdonald_symbol_gap(2.0, 256, 16.0, c)?;
    require(gap <= 1e-3, format!("k = 2: max relative gap {gap:.2e}"))
}

fn coordinate_round_trip(_: Execution) -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    let mut done = 0;
    while done < 10_000 {
        let xi: Point = [
            rng.random_range(-20.0..20.0),
            rng.random_range(-20.0..20.0),
            0.0,
        ];
        let theta0 = direction_2d(rng.random_range(0.0..2.0 * PI));
        let p = FourierPoint { xi };
        if norm(&xi) < 1e-3 || dot(&xi, &theta0).abs() < 1e-3 * norm(&xi) {
            continue;
        }
        let (k, tp) = lib(angles_from_xi(&p, &theta0))?;
        let back = xi_from_angles(k, &tp, &theta0);
        worst = worst.max(norm(&sub(&back.xi, &xi)) / norm(&xi));
        done += 1;
    }
    require(
        worst <= 1e-12,
        format!("max relative error {worst:.2e} over 10^4 points"),
    )
}

fn jacobian_lattice_measure(_: Execution) -> Result<String, String> {
    let c = [-4.0, 2.0, 0.0];
    let g = |xi: &Point| (-dot(&sub(xi, &c), &sub(xi, &c)) / 1.44).exp();
    let exact = PI * 1.44;
    let q = lib(sphere_quadrature(Dim::Two, 128))?;
    let t0 = [1.0, 0.0, 0.0];
    let dk = 0.25;
    let mut acc = 0.0;
    for i in 1..=96 {
        for k in [dk * i as f64, -dk * i as f64] {
            for (d, w) in q.directions.iter().zip(&q.weights) {
                acc += g(&xi_from_angles(k, d, &t0).xi)
                    * jacobian_weight(Dim::Two, k, d, &t0)
                    * dk
                    * w;
            }
        }
    }
    let err = (acc - exact).abs() / exact;
    require(err <= 0.01, format!("relative error {err:.2e}"))
}

fn sphere_rule(_: Execution) -> Result<String, String> {
    let mut worst: f64 = 0.0;
    for (dim, m) in [(Dim::Two, 16), (Dim::Three, 16)] {
        let q = lib(sphere_quadrature(dim, m))?;
        let total: f64 = q.weights.iter().sum();
        let x2: f64 = q
            .directions
            .iter()
            .zip(&q.weights)
            .map(|(d, w)| w * d[0] * d[0])
            .sum();
        let (want_total, want_x2) = match dim {
            Dim::Two => (2.0 * PI, PI),
            Dim::Three => (4.0 * PI, 4.0 * PI / 3.0),
        };
        worst = worst
            .max((total - want_total).abs())
            .max((x2 - want_x2).abs());
    }
    require(worst <= 1e-12, format!("max error {worst:.2e}"))
}

fn gaussian_model(amplitude: f64) -> Result<PotentialModel, String> {
    let t = Term::new(
        Shape::Gaussian {
            center: [0.1, -0.05, 0.0],
            width: 0.25,
        },
        amplitude,
    );
    lib(PotentialModel::new(
        Dim::Two,
        vec![t],
        Nonlinearity::Power { gamma: 2.0 },
    ))
}

fn born_step_direct_sum(exec: Execution) -> Result<String, String> {
    let grid = lib(Grid::new(Dim::Two, 32, 1.0))?;
    let k = 4.0;
    let ctx = lib(WaveContext::new(Dim::Two, k, [0.6, 0.8, 0.0], 1.0))?;
    let model = gaussian_model(3.0)?;
    let step = lib(born_step(
        &ScatterField::zeros(grid, FieldKind::Scattered),
        &model,
        &ctx,
        exec,
    ))?;
    let n = grid.n_per_axis;
    let mut worst: f64 = 0.0;
    for p in [grid.origin_index(), 0, n * n - 1, 7 * n + 20] {
        let x = grid.node(p);
        let mut acc = Complex64::default();
        for j in 0..grid.len() {
            let y = grid.node(j);
            let u = ctx.incident(&y);
            let v = model.eval_complex(&y, u.norm());
            if v != Complex64::default() {
                acc -= lib(green_kernel(k, norm(&sub(&x, &y)), Dim::Two))? * v * u;
            }
        }
        acc *= grid.cell_volume();
        worst = worst.max((step.values[p] - acc).norm() / acc.norm());
    }
    require(worst <= 1e-8, format!("max relative error {worst:.2e}"))
}

fn taylor_consistency(_: Execution) -> Result<String, String> {
    let model = gaussian_model(2.0)?;
    let x = [0.05, 0.1, 0.0];
    let (v1, dv) = taylor_components(&model, &x);
    let h = 1e-5;
    let fd = (model.eval_complex(&x, 1.0 + h).re - model.eval_complex(&x, 1.0 - h).re) / (2.0 * h);
    let err = (v1 - model.v1(&x)).abs() + (dv - fd).abs() / dv.abs();
    require(err <= 1e-6, format!("combined error {err:.2e}"))
}

fn farfield_n3_constant(_: Execution) -> Result<String, String> {
    let c = farfield_constant(Dim::Three);
    let err = (c - Complex64::new(-1.0 / (8.0 * PI), 0.0)).norm();
    require(err <= 1e-16, format!("error {err:.2e}"))
}

fn format_round_trip(_: Execution) -> Result<String, String> {
    let dirs = lib(sphere_quadrature(Dim::Two, 8))?;
    let values: Vec<Complex64> = (0..16)
        .map(|i| Complex64::new(i as f64, -0.5 * i as f64))
        .collect();
    let ds = lib(AmplitudeDataset::new(
        [1.0, 0.0, 0.0],
        1.0,
        vec![1.0, 2.0],
        dirs,
        values,
        Provenance::Unspecified,
    ))?;
    let mut bytes = Vec::new();
    lib(write_amplitudes(&mut bytes, &ds))?;
    let back = lib(read_amplitudes(bytes.as_slice()))?;
    if back != ds {
        return Err("amplitude file did not round-trip".into());
    }
    let cut = bytes.len() - 5;
    match read_amplitudes(&bytes[..cut]) {
        Err(Error::Format { offset, .. }) if offset <= cut as u64 => {}
        other => return Err(format!("truncated amplitude file gave {other:?}")),
    }
    let grid = lib(Grid::new(Dim::Two, 16, 1.0))?;
    let field = FieldFile {
        grid,
        values: FieldValues::Real((0..grid.len()).map(|i| i as f64 * 0.25).collect()),
    };
    let mut bytes = Vec::new();
    lib(write_field(&mut bytes, &field))?;
    let back = lib(read_field(bytes.as_slice()))?;
    require(back == field, format!("{} field bytes", bytes.len()))
}

fn linear_gaussian_inversion(exec: Execution) -> Result<String, String> {
    let grid = lib(Grid::new(Dim::Two, 32, 2.0))?;
    let dirs = lib(sphere_quadrature(Dim::Two, 64))?;
    let ks: Vec<f64> = (1..=48).map(|i| 0.5 * i as f64).collect();
    let theta0 = [1.0, 0.0, 0.0];
    let ds = lib(synth_linear_dataset(
        gaussian_hat(Dim::Two, [0.0; 3], 1.0),
        &theta0,
        &ks,
        &dirs,
        0.5,
    ))?;
    let rec = lib(born_invert(&ds, &grid, exec))?;
    let truth: Vec<f64> = (0..grid.len())
        .map(|i| (-dot(&grid.node(i), &grid.node(i))).exp())
        .collect();
    let diff: Vec<f64> = rec.values.iter().zip(&truth).map(|(a, b)| a - b).collect();
    let err = (grid_l2_sq(&diff, &grid) / grid_l2_sq(&truth, &grid)).sqrt();
    require(err <= 0.1, format!("relative L2 error {err:.3}"))
}

fn parseval(exec: Execution) -> Result<String, String> {
    let grid = lib(Grid::new(Dim::Two, 64, 2.0))?;
    let values: Vec<f64> = (0..grid.len())
        .map(|i| {
            let x = grid.node(i);
            (3.0 * x[0]).sin() * (-(x[0] * x[0] + 2.0 * x[1] * x[1])).exp()
        })
        .collect();
    let l2 = grid_l2_sq(&values, &grid);
    let h0 = lib(sobolev_norm_sq(&values, &grid, 0.0, exec))?;
    let h1 = lib(sobolev_norm_sq(&values, &grid, 1.0, exec))?;
    let err = (h0 - l2).abs() / l2;
    require(err <= 1e-10 && h1 > h0, format!("relative gap {err:.2e}"))
}

fn slope_calibration(exec: Execution) -> Result<String, String> {
    let grid = lib(Grid::new(Dim::Two, 128, 2.0))?;
    let band = (8.0 * grid.fundamental(), 32.0 * grid.fundamental());
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut found = Vec::new();
    for p in [1.0, 1.5, 2.0, 3.0] {
        let mut buf: Vec<Complex64> = (0..grid.len())
            .map(|i| {
                let r = norm(&frequency(&grid, i));
                if r == 0.0 {
                    Complex64::default()
                } else {
                    Complex64::from_polar(r.powf(-p), rng.random_range(0.0..2.0 * PI))
                }
            })
            .collect();
        FftNd::new(Dim::Two, grid.n_per_axis).inverse(&mut buf, exec);
        let values: Vec<f64> = buf.iter().map(|z| z.re).collect();
        let spec = lib(shell_spectrum(&values, &grid, 16, None, exec))?;
        let (exponent, _) = lib(decay_slope(&spec, band))?;
        if (exponent - p).abs() > 0.15 {
            return Err(format!("s = {p}: fitted {exponent:.3}"));
        }
        found.push(format!("{exponent:.3}"));
    }
    Ok(format!("fitted exponents {}", found.join(", ")))
}

fn sequential_parallel_agree(_: Execution) -> Result<String, String> {
    let grid = lib(Grid::new(Dim::Two, 32, 1.0))?;
    let model = gaussian_model(4.0)?;
    let ctx = lib(WaveContext::new(Dim::Two, 5.0, [1.0, 0.0, 0.0], 1.0))?;
    let opts = SolverOptions::default();
    let (a, _) = lib(solve_ls(&model, &ctx, &grid, &opts, Execution::Sequential))?;
    let (b, _) = lib(solve_ls(&model, &ctx, &grid, &opts, Execution::Parallel))?;
    let same = a
        .values
        .iter()
        .zip(&b.values)
        .all(|(x, y)| x.re.to_bits() == y.re.to_bits() && x.im.to_bits() == y.im.to_bits());
    require(same, "solver output compared bitwise".into())
}
