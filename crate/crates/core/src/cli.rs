//! The `uwarma` command line. [`run`] parses arguments, executes one
//! subcommand and returns the process exit code:
//! 0 success, 1 I/O failure, 2 usage or invalid settings, 3 invalid data,
//! 4 optimizer did not converge (results are still written).

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::fit::{backward_eliminate, fit_pmle, FitOptions, FitResult};
use crate::forecast::forecast_ahead;
use crate::io::{self, Dataset, LoadOptions, ResultFile};
use crate::link::Link;
use crate::model::{simulate, ModelSpec, ParamVector, SeriesData, SimOptions};
use crate::rolling::{mape_table_csv, order_grid, rolling_forecast, RollingOptions};
use crate::study::{run_estimation_study, run_forecast_study, StudyConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_NOT_CONVERGED: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "uwarma", version, about = "Unit-Weibull ARMA models for series on (0,1)")]
pub struct Cli {
    /// Worker threads for mc and rollfc (default: all cores).
    #[arg(long, global = true, env = "UWARMA_JOBS")]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a UWARMA path and write it as CSV.
    Simulate(SimulateArgs),
    /// Fit a model by partial maximum likelihood.
    Fit(FitArgs),
    /// Forecast from a saved result file.
    Forecast(ForecastArgs),
    /// Fit with lagged covariates and p-value backward elimination.
    Select(SelectArgs),
    /// Run a Monte Carlo study described by a key = value file.
    Mc(McArgs),
    /// Rolling-window forecast evaluation.
    Rollfc(RollfcArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 1000)]
    pub burnin: usize,
    #[arg(long, default_value_t = 0.5)]
    pub rho: f64,
    #[arg(long)]
    pub lambda: f64,
    #[arg(long, num_args = 1.., allow_negative_numbers = true)]
    pub phi: Vec<f64>,
    #[arg(long, num_args = 1.., allow_negative_numbers = true)]
    pub theta: Vec<f64>,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub alpha: f64,
    #[arg(long, num_args = 1.., allow_negative_numbers = true)]
    pub beta: Vec<f64>,
    #[arg(long, default_value_t = Link::Logit)]
    pub link: Link,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Covariate CSV (header row, numeric columns) with burnin + n rows.
    #[arg(long)]
    pub xfile: Option<PathBuf>,
    /// Allow shape values below 1.
    #[arg(long)]
    pub force_small_shape: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Clone)]
pub struct ModelArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub p: usize,
    #[arg(long, default_value_t = 0)]
    pub q: usize,
    #[arg(long, default_value_t = 0.5)]
    pub rho: f64,
    #[arg(long, default_value_t = Link::Logit)]
    pub link: Link,
    /// Divide y by 100 before fitting.
    #[arg(long)]
    pub rescale_percent: bool,
}

impl ModelArgs {
    fn load(&self) -> Result<Dataset> {
        io::load_csv(
            &self.data,
            &LoadOptions {
                rescale_percent: self.rescale_percent,
            },
        )
    }
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
    /// Result JSON path.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ForecastArgs {
    /// Result JSON written by fit or select.
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub h: usize,
    /// Covariate values for the forecast period (CSV with the model's covariate names).
    #[arg(long)]
    pub xfuture: Option<PathBuf>,
    #[arg(long)]
    pub rescale_percent: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SelectArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
    #[arg(long, default_value_t = 0.05)]
    pub pmax: f64,
    /// Each covariate enters at lags 1..=lags.
    #[arg(long, default_value_t = 3)]
    pub lags: usize,
    /// Covariate transformations, e.g. `cpi=6,unrate=2`.
    #[arg(long, default_value = "")]
    pub tcode: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct McArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides `replicas` in the config file.
    #[arg(long)]
    pub replicas: Option<usize>,
    #[arg(long, default_value = "mc_out")]
    pub out_dir: PathBuf,
    #[arg(long, default_value = "study")]
    pub stem: String,
}

#[derive(Debug, Args)]
pub struct RollfcArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 287)]
    pub window: usize,
    #[arg(long, default_value_t = 6)]
    pub h: usize,
    #[arg(long, default_value_t = 0.05)]
    pub pmax: f64,
    #[arg(long, default_value_t = 3)]
    pub lags: usize,
    #[arg(long, default_value = "")]
    pub tcode: String,
    /// Evaluate every order with p, q <= 3 except (0, 0) instead of --p/--q.
    #[arg(long)]
    pub grid: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Exit code for an error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Io { .. } => EXIT_IO,
        Error::InvalidParameter { .. } | Error::Config(_) | Error::SmallShape(_) => EXIT_USAGE,
        Error::Optimizer(_) => EXIT_NOT_CONVERGED,
        _ => EXIT_DATA,
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    if let Some(jobs) = cli.jobs {
        if rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global().is_err() {
            log::debug!("thread pool already initialised; --jobs ignored");
        }
    }
    match execute(&cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn execute(cmd: &Command) -> Result<i32> {
    match cmd {
        Command::Simulate(a) => cmd_simulate(a),
        Command::Fit(a) => cmd_fit(a),
        Command::Forecast(a) => cmd_forecast(a),
        Command::Select(a) => cmd_select(a),
        Command::Mc(a) => cmd_mc(a),
        Command::Rollfc(a) => cmd_rollfc(a),
    }
}

fn emit(out: Option<&Path>, body: &str) -> Result<()> {
    match out {
        Some(path) => io::write_file(path, body),
        None => {
            print!("{body}");
            Ok(())
        }
    }
}

/// Numeric CSV with a header row; returns column names and the matrix.
fn read_matrix(path: &Path) -> Result<(Vec<String>, DMatrix<f64>)> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Csv {
            path: path.to_path_buf(),
            source: e,
        })?;
    let names: Vec<String> = rdr
        .headers()
        .map_err(|e| Error::Csv {
            path: path.to_path_buf(),
            source: e,
        })?
        .iter()
        .map(str::to_string)
        .collect();
    let mut values = Vec::new();
    let mut rows = 0;
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Csv {
            path: path.to_path_buf(),
            source: e,
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        for (c, raw) in rec.iter().enumerate() {
            let v = raw.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| Error::Data {
                path: path.to_path_buf(),
                line,
                message: format!("column `{}`: cannot parse `{raw}` as a number", names[c]),
            })?;
            values.push(v);
        }
        rows += 1;
    }
    Ok((names.clone(), DMatrix::from_row_slice(rows, names.len(), &values)))
}

fn fit_summary(res: &ResultFile) -> String {
    let mut out = format!(
        "{:<16} {:>12} {:>12} {:>12} {:>12} {:>10}\n",
        "parameter", "estimate", "se", "lower", "upper", "p-value"
    );
    let show = |v: Option<f64>| v.map_or("NA".to_string(), |v| format!("{v:.6}"));
    for row in &res.parameters {
        out.push_str(&format!(
            "{:<16} {:>12.6} {:>12} {:>12} {:>12} {:>10}\n",
            row.name,
            row.estimate,
            show(row.se),
            show(row.ci_lower),
            show(row.ci_upper),
            row.p_value.map_or("NA".to_string(), |p| format!("{p:.4}")),
        ));
    }
    out.push_str(&format!(
        "loglik {:.4}  AIC {:.4}  BIC {:.4}  HQC {:.4}  n {}  converged {}\n",
        res.loglik, res.aic, res.bic, res.hqc, res.n, res.diagnostics.converged
    ));
    out
}

fn finish_fit(fit: &FitResult, mut res: ResultFile, data_file: &Path, out: Option<&Path>) -> Result<i32> {
    res.data_file = Some(data_file.display().to_string());
    match out {
        Some(path) => {
            res.save(path)?;
            eprint!("{}", fit_summary(&res));
        }
        None => print!("{}", res.to_json()),
    }
    if fit.converged {
        Ok(EXIT_OK)
    } else {
        eprintln!("warning: optimizer stopped with {:?}", fit.termination);
        Ok(EXIT_NOT_CONVERGED)
    }
}

fn cmd_simulate(a: &SimulateArgs) -> Result<i32> {
    let (names, x) = match &a.xfile {
        Some(path) => {
            let (names, x) = read_matrix(path)?;
            if x.nrows() != a.burnin + a.n {
                return Err(Error::Dimension(format!(
                    "{} has {} rows; burnin + n = {}",
                    path.display(),
                    x.nrows(),
                    a.burnin + a.n
                )));
            }
            (names, Some(x))
        }
        None => (Vec::new(), None),
    };
    let spec = ModelSpec::new(a.phi.len(), a.theta.len(), a.rho, a.link, names.len())?;
    let gamma = ParamVector::new(a.alpha, a.beta.clone(), a.phi.clone(), a.theta.clone(), a.lambda)?;
    gamma.check_spec(&spec)?;
    let sim = simulate(
        &spec,
        &gamma,
        x.as_ref(),
        a.n,
        &SimOptions {
            burnin: a.burnin,
            seed: a.seed,
            force_small_shape: a.force_small_shape,
        },
    )?;
    let ds = Dataset {
        data: SeriesData::with_names(sim.data.y, sim.data.x, names)?,
        dates: None,
    };
    io::save_csv(&a.out, &ds)?;
    Ok(EXIT_OK)
}

fn cmd_fit(a: &FitArgs) -> Result<i32> {
    let ds = a.model.load()?;
    let spec = ModelSpec::new(a.model.p, a.model.q, a.model.rho, a.model.link, ds.data.r())?;
    let fit = fit_pmle(&spec, &ds.data, &FitOptions::default())?;
    let res = ResultFile::from_fit(&fit, &ds.data.names, a.level)?;
    finish_fit(&fit, res, &a.model.data, a.out.as_deref())
}

fn cmd_select(a: &SelectArgs) -> Result<i32> {
    let raw = a.model.load()?;
    let tcodes = io::parse_tcode_map(&a.tcode)?;
    let ds = io::prepare_covariates(&raw, &tcodes, a.lags)?;
    let spec = ModelSpec::new(a.model.p, a.model.q, a.model.rho, a.model.link, ds.data.r())?;
    let e = backward_eliminate(&spec, &ds.data, a.pmax, &FitOptions::default())?;
    for r in &e.trace {
        eprintln!("removed {} (p = {:.4})", r.name, r.p_value);
    }
    let mut res = ResultFile::from_fit(&e.fit, &e.data.names, a.level)?;
    res.eliminated = Some(e.trace.clone());
    finish_fit(&e.fit, res, &a.model.data, a.out.as_deref())
}

fn cmd_forecast(a: &ForecastArgs) -> Result<i32> {
    let res = ResultFile::load(&a.model)?;
    let ds = io::load_csv(
        &a.data,
        &LoadOptions {
            rescale_percent: a.rescale_percent,
        },
    )?;
    let spec = res.model_spec()?;
    let gamma = res.gamma()?;
    let data = res.select_data(&ds.data)?;
    let xf = match &a.xfuture {
        Some(path) => {
            let (names, x) = read_matrix(path)?;
            let idx = res
                .spec
                .covariates
                .iter()
                .map(|n| {
                    names
                        .iter()
                        .position(|m| m == n)
                        .ok_or_else(|| Error::Config(format!("{} has no column `{n}`", path.display())))
                })
                .collect::<Result<Vec<_>>>()?;
            Some(x.select_columns(&idx))
        }
        None => None,
    };
    let fc = forecast_ahead(&spec, &gamma, &data, a.h, xf.as_ref())?;
    emit(a.out.as_deref(), &io::forecast_csv(&fc.yhat))?;
    Ok(EXIT_OK)
}

fn cmd_mc(a: &McArgs) -> Result<i32> {
    let text = std::fs::read_to_string(&a.config).map_err(|e| Error::io(&a.config, e))?;
    let (mut cfg, horizons): (StudyConfig, _) = StudyConfig::from_kv_str(&text)?;
    if let Some(r) = a.replicas {
        cfg.replicas = r;
    }
    let opts = FitOptions::default();
    let summary = match horizons {
        Some(h) => run_forecast_study(&cfg, &h, &opts)?,
        None => run_estimation_study(&cfg, &opts)?,
    };
    summary.write_files(&a.out_dir, &a.stem)?;
    print!("{}", summary.summary_csv());
    if !summary.horizons.is_empty() {
        print!("{}", summary.mape_csv());
    }
    if summary.failures > 0 {
        eprintln!("{} of {} replicas failed", summary.failures, cfg.replicas);
    }
    Ok(EXIT_OK)
}

fn cmd_rollfc(a: &RollfcArgs) -> Result<i32> {
    let raw = a.model.load()?;
    let tcodes = io::parse_tcode_map(&a.tcode)?;
    let ds = io::prepare_covariates(&raw, &tcodes, a.lags)?;
    let opts = RollingOptions {
        window: a.window,
        h: a.h,
        p_threshold: a.pmax,
        ..Default::default()
    };
    let orders = if a.grid { order_grid(3) } else { vec![(a.model.p, a.model.q)] };
    let rows = orders
        .into_iter()
        .map(|(p, q)| rolling_forecast(p, q, a.model.rho, a.model.link, &ds.data, &opts))
        .collect::<Result<Vec<_>>>()?;
    for r in &rows {
        if r.failures > 0 {
            eprintln!("{}: {} of {} windows failed", r.model, r.failures, r.origins);
        }
    }
    emit(a.out.as_deref(), &mape_table_csv(&rows))?;
    Ok(EXIT_OK)
}
