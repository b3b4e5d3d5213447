use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use taperspec::asymptotics::{limit_covariance, limit_mean, Quadrature};
use taperspec::models::{Innovations, ModelName, ModelSpec};
use taperspec::montecarlo::run_experiment;
use taperspec::montecarlo::threads_from_env;
use taperspec::oracle::{exact_cov_j, exact_mean_j};
use taperspec::{estimate_batch, FrequencyGrid, PeriodogramEngine, SpectralModel, Taper, WeightFunction};
use taperspec_cli::{format_float, parse_config, report_with_times, timestamp, CliError, Result};

#[derive(Parser)]
#[command(name = "taperspec", version, about = "Tapered periodogram functionals")]
struct Cli {
    /// Directory for output files; results go to stdout when absent.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Experiment config (JSON); repeat for `report`.
    #[arg(long, global = true)]
    config: Vec<PathBuf>,
    /// Seed for simulation; overrides `base_seed` in configs.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ModelArgs {
    #[arg(long, default_value = "white")]
    model: String,
    #[arg(long, default_value_t = 1.0)]
    sigma2: f64,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long, default_value = "gaussian")]
    innovations: String,
    #[arg(long, default_value = "rectangular")]
    taper: String,
}

impl ModelArgs {
    fn build(&self) -> Result<(SpectralModel, Taper)> {
        let spec = ModelSpec {
            model: ModelName::from_name(&self.model)?,
            sigma2: self.sigma2,
            rho: self.rho,
            theta: self.theta,
            innovations: Innovations::from_name(&self.innovations)?,
        };
        Ok((spec.build()?, Taper::from_name(&self.taper)?))
    }
}

#[derive(Args)]
struct WindowArgs {
    /// Half-window; the sample has 2T+1 points.
    #[arg(long = "T")]
    half_window: usize,
    /// Frequency grid size; defaults to 2(2T+1).
    #[arg(long)]
    grid_n: Option<usize>,
}

impl WindowArgs {
    fn grid(&self) -> Result<FrequencyGrid> {
        Ok(match self.grid_n {
            Some(n) => FrequencyGrid::new(n)?,
            None => FrequencyGrid::default_for(self.half_window)?,
        })
    }
}

#[derive(Args)]
struct FunctionalArgs {
    /// Weight function: `one`, `cos:j` or `band:a,b`. Repeatable.
    #[arg(long, default_value = "one")]
    phi: Vec<String>,
    /// Periodogram power; repeat once per `--phi` or give once for all.
    #[arg(long, default_value = "1")]
    k: Vec<u32>,
}

impl FunctionalArgs {
    fn pairs(&self) -> Result<(Vec<WeightFunction>, Vec<u32>)> {
        let phis = self
            .phi
            .iter()
            .map(|p| WeightFunction::parse(p))
            .collect::<taperspec::Result<Vec<_>>>()?;
        let ks = match self.k.len() {
            1 => vec![self.k[0]; phis.len()],
            n if n == phis.len() => self.k.clone(),
            n => {
                return Err(CliError::Usage(format!(
                    "{n} values of --k for {} values of --phi",
                    phis.len()
                )))
            }
        };
        Ok((phis, ks))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a path and print its tapered periodogram on the grid.
    Periodogram {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        window: WindowArgs,
    },
    /// Simulate a path and estimate J_{k,T}(φ).
    Estimate {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        window: WindowArgs,
        #[command(flatten)]
        functional: FunctionalArgs,
    },
    /// Limit mean and T-scaled limit covariance.
    Asymptotics {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        functional: FunctionalArgs,
        /// Power of the second functional; defaults to the first `--k`.
        #[arg(long)]
        l: Option<u32>,
    },
    /// Exact finite-T mean and covariance for Gaussian models.
    Oracle {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        window: WindowArgs,
        #[command(flatten)]
        functional: FunctionalArgs,
        #[arg(long)]
        l: Option<u32>,
    },
    /// Run the Monte Carlo experiment in `--config`.
    Mc,
    /// Run every `--config` and write one combined report.
    Report,
}

fn emit(out_dir: Option<&Path>, name: &str, bytes: &[u8]) -> Result<()> {
    match out_dir {
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(|source| CliError::Io {
                path: dir.to_path_buf(),
                source,
            })?;
            let path = dir.join(name);
            std::fs::write(&path, bytes).map_err(|source| CliError::Io {
                path: path.clone(),
                source,
            })?;
            println!("{}", path.display());
        }
        None => {
            std::io::stdout()
                .write_all(bytes)
                .map_err(|source| CliError::Io {
                    path: PathBuf::from("<stdout>"),
                    source,
                })?;
        }
    }
    Ok(())
}

fn json<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    Ok(bytes)
}

#[derive(Serialize)]
struct AsymptoticsOutput {
    limit_mean: taperspec::LimitMean,
    limit_covariance: taperspec::LimitCovariance,
}

#[derive(Serialize)]
struct OracleOutput {
    half_window: usize,
    grid_n: usize,
    exact_mean: num_complex::Complex64,
    exact_cov: num_complex::Complex64,
    t_scaled_exact_cov: num_complex::Complex64,
}

fn second<'a>(phis: &'a [WeightFunction], ks: &[u32], l: Option<u32>) -> (&'a WeightFunction, u32) {
    let phi2 = phis.get(1).unwrap_or(&phis[0]);
    let l = l.unwrap_or(*ks.get(1).unwrap_or(&ks[0]));
    (phi2, l)
}

/// Returns whether every pass flag held.
fn run(cli: Cli) -> Result<bool> {
    let out = cli.out_dir.as_deref();
    let seed = cli.seed.unwrap_or(0);
    match cli.command {
        Command::Periodogram { model, window } => {
            let (model, taper) = model.build()?;
            let grid = window.grid()?;
            let path = model.simulate(window.half_window, seed)?;
            let pg = PeriodogramEngine::new(&taper, window.half_window, &grid)?.compute(&path)?;
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["lambda", "I"])?;
            for (l, v) in grid.points().iter().zip(&pg.values) {
                w.write_record([format_float(*l), format_float(*v)])?;
            }
            let bytes = w
                .into_inner()
                .map_err(|e| CliError::Usage(format!("csv buffer: {e}")))?;
            emit(out, "periodogram.csv", &bytes)?;
            Ok(true)
        }
        Command::Estimate {
            model,
            window,
            functional,
        } => {
            let (model, taper) = model.build()?;
            let grid = window.grid()?;
            let (phis, ks) = functional.pairs()?;
            let path = model.simulate(window.half_window, seed)?;
            let est = estimate_batch(&path, &taper, &phis, &ks, &grid)?;
            emit(out, "estimate.json", &json(&est)?)?;
            Ok(true)
        }
        Command::Asymptotics {
            model,
            functional,
            l,
        } => {
            let (model, taper) = model.build()?;
            let (phis, ks) = functional.pairs()?;
            let q = Quadrature::default();
            let (phi2, l) = second(&phis, &ks, l);
            let output = AsymptoticsOutput {
                limit_mean: limit_mean(&model, &phis[0], ks[0], q.single)?,
                limit_covariance: limit_covariance(&model, &phis[0], ks[0], phi2, l, &taper, &q)?,
            };
            emit(out, "asymptotics.json", &json(&output)?)?;
            Ok(true)
        }
        Command::Oracle {
            model,
            window,
            functional,
            l,
        } => {
            let (model, taper) = model.build()?;
            let grid = window.grid()?;
            let (phis, ks) = functional.pairs()?;
            let (phi2, l) = second(&phis, &ks, l);
            let t = window.half_window;
            let mean = exact_mean_j(&model, &taper, t, &phis[0], ks[0], &grid)?;
            let cov = exact_cov_j(&model, &taper, t, &phis[0], ks[0], phi2, l, &grid)?;
            let output = OracleOutput {
                half_window: t,
                grid_n: grid.len(),
                exact_mean: mean.value,
                exact_cov: cov,
                t_scaled_exact_cov: cov * t as f64,
            };
            emit(out, "oracle.json", &json(&output)?)?;
            Ok(true)
        }
        Command::Mc | Command::Report => {
            let single = matches!(cli.command, Command::Mc);
            if cli.config.is_empty() || (single && cli.config.len() != 1) {
                return Err(CliError::Usage(if single {
                    "mc needs exactly one --config".into()
                } else {
                    "report needs at least one --config".into()
                }));
            }
            let threads = threads_from_env()?;
            let started = timestamp();
            let mut reports = Vec::with_capacity(cli.config.len());
            for path in &cli.config {
                let mut config = parse_config(path)?;
                if let Some(s) = cli.seed {
                    config.base_seed = s;
                }
                let report = run_experiment(&config, threads)?;
                for w in &report.warnings {
                    eprintln!("warning: {w}");
                }
                reports.push(report);
            }
            let dir = out.unwrap_or(Path::new("taperspec-out"));
            let manifest = report_with_times(&reports, dir, &started, &timestamp())?;
            for flag in &manifest.criteria {
                println!(
                    "[{}] {} {}: {}/{} failed",
                    if flag.passed { "PASS" } else { "FAIL" },
                    flag.experiment.as_str(),
                    flag.check,
                    flag.failed,
                    flag.evaluated
                );
            }
            println!("{}", dir.join(taperspec_cli::MANIFEST_JSON).display());
            Ok(manifest.passed)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
