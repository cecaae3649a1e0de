use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bihscat::Execution;
use bihscat_cli::commands::{run_diagnose, run_forward, run_invert};
use bihscat_cli::config::{ExperimentConfig, GridSpec};
use bihscat_cli::error::CliError;
use bihscat_cli::selftest;
use clap::{Args, Parser, Subcommand};
use log::error;

#[derive(Parser)]
#[command(
    name = "bihscat",
    version,
    about = "Scattering experiments for the nonlinear biharmonic operator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Experiment configuration (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; 0 lets the runtime decide.
    #[arg(long, env = "BIHSCAT_THREADS")]
    threads: Option<usize>,
    /// Log progress at info level.
    #[arg(long, short)]
    verbose: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the forward problem over the k sweep and write a BIHAMP1 dataset.
    Forward {
        #[command(flatten)]
        common: Common,
    },
    /// Invert a BIHAMP1 dataset into a BIHFLD1 field.
    Invert {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        input: PathBuf,
        /// Output samples per axis; overrides the config.
        #[arg(long)]
        grid_n: Option<usize>,
        /// Output box half-width; overrides the config.
        #[arg(long)]
        half_width: Option<f64>,
    },
    /// Compare a reconstruction with `V(., 1)` and write the report and shell CSVs.
    Diagnose {
        #[command(flatten)]
        common: Common,
        /// Reconstruction to analyse; defaults to `output.field` of the config.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Shell spectra CSV; defaults to `output.shells` or `<out stem>.shells.csv`.
        #[arg(long)]
        shells: Option<PathBuf>,
    },
    /// Run the built-in consistency checks.
    Selftest {
        #[command(flatten)]
        common: Common,
    },
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::Forward { common }
            | Command::Invert { common, .. }
            | Command::Diagnose { common, .. }
            | Command::Selftest { common } => common,
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // Usage errors exit 1 so that 2 stays reserved for non-contraction.
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let common = cli.command.common().clone();
    let level = if common.verbose { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match dispatch(&cli.command, &common) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            error!("{e}");
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

#[cfg(feature = "parallel")]
fn dispatch(command: &Command, common: &Common) -> Result<(), CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(common.threads.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Other(format!("thread pool: {e}")))?;
    log::info!("using {} threads", pool.current_num_threads());
    pool.install(|| run(command, common, Execution::Parallel))
}

#[cfg(not(feature = "parallel"))]
fn dispatch(command: &Command, common: &Common) -> Result<(), CliError> {
    if common.threads.is_some_and(|t| t > 1) {
        log::warn!("built without the parallel feature; running on one thread");
    }
    run(command, common, Execution::Sequential)
}

fn load(path: Option<&Path>) -> Result<Option<ExperimentConfig>, CliError> {
    path.map(ExperimentConfig::load).transpose()
}

fn require_config(common: &Common) -> Result<ExperimentConfig, CliError> {
    load(common.config.as_deref())?.ok_or_else(|| CliError::Config("--config is required".into()))
}

fn run(command: &Command, common: &Common, exec: Execution) -> Result<(), CliError> {
    match command {
        Command::Forward { .. } => {
            let cfg = require_config(common)?;
            let s = run_forward(&cfg, common.out.as_deref(), exec)?;
            println!(
                "wrote {} ({} wavenumbers, k0 = {})",
                s.path.display(),
                s.rows,
                s.k0
            );
            if !s.rejected_ks.is_empty() {
                println!("rejected k = {:?}; effective k0 = {}", s.rejected_ks, s.k0);
            }
        }
        Command::Invert {
            input,
            grid_n,
            half_width,
            ..
        } => {
            let cfg = load(common.config.as_deref())?;
            let base = cfg.as_ref().map(|c| c.inversion.unwrap_or(c.grid));
            let spec = match (grid_n, half_width, base) {
                (Some(n), Some(l), _) => GridSpec {
                    n: *n,
                    half_width: *l,
                },
                (n, l, Some(b)) => GridSpec {
                    n: n.unwrap_or(b.n),
                    half_width: l.unwrap_or(b.half_width),
                },
                _ => {
                    return Err(CliError::Config(
                        "give --config or both --grid-n and --half-width".into(),
                    ))
                }
            };
            let out = common
                .out
                .clone()
                .or_else(|| cfg.as_ref().and_then(|c| c.output.field.clone()))
                .ok_or_else(|| {
                    CliError::Config("no field path: pass --out or set output.field".into())
                })?;
            let s = run_invert(input, spec, &out, cfg.as_ref(), exec)?;
            println!("wrote {}", s.path.display());
            println!(
                "imag_residual = {:e}{}",
                s.imag_residual,
                if s.flagged { " (flagged)" } else { "" }
            );
            if let Some(e) = s.profile_error {
                println!("relative L2 error vs V(., 1) = {e:.4}");
            }
        }
        Command::Diagnose { input, shells, .. } => {
            let cfg = require_config(common)?;
            let input = input
                .clone()
                .or_else(|| cfg.output.field.clone())
                .ok_or_else(|| {
                    CliError::Config("no input: pass --input or set output.field".into())
                })?;
            let report = common
                .out
                .clone()
                .or_else(|| cfg.output.report.clone())
                .ok_or_else(|| {
                    CliError::Config("no report path: pass --out or set output.report".into())
                })?;
            let shells = shells
                .clone()
                .or_else(|| cfg.output.shells.clone())
                .unwrap_or_else(|| report.with_extension("shells.csv"));
            let s = run_diagnose(&input, &cfg, &report, &shells, exec)?;
            println!("gain = {}", s.literal.gain);
            println!("gain (nonlinear part) = {}", s.nonlinear.gain);
            println!("jump_error = {:.3} cells", s.literal.jump_error_cells);
            if !s.reliable() {
                println!("unreliable");
            }
        }
        Command::Selftest { .. } => {
            let results = selftest::run_all(exec);
            let mut failed = Vec::new();
            let mut csv = String::from("check,passed,seconds,detail\n");
            for r in &results {
                println!(
                    "[{}] {} ({:.2} s): {}",
                    if r.passed { "PASS" } else { "FAIL" },
                    r.name,
                    r.seconds,
                    r.detail
                );
                csv.push_str(&format!(
                    "{},{},{:.3},\"{}\"\n",
                    r.name,
                    r.passed,
                    r.seconds,
                    r.detail.replace('"', "'")
                ));
                if !r.passed {
                    failed.push(r.name.to_string());
                }
            }
            if let Some(path) = &common.out {
                std::fs::write(path, csv).map_err(|e| CliError::io(path, e))?;
            }
            if !failed.is_empty() {
                return Err(CliError::SelfTest(failed));
            }
        }
    }
    Ok(())
}
