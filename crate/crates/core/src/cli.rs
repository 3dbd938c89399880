//! Command-line front end.
//!
//! Exit codes: 0 on success, 2 on usage errors (bad flags, unreadable or
//! malformed input files), 1 when a computation fails.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::alt;
use crate::asymptotics;
use crate::data_io::{self, ColumnSelector, ReturnSeries, Transform};
use crate::error::SgarchError;
use crate::forecasting::{self, ForecastConfig, ForecastModel};
use crate::inference::{self, LinearConstraint};
use crate::kernel::KernelSpec;
use crate::linalg;
use crate::longrun::{self, Boundary, CvConfig};
use crate::pipeline::{self, Bandwidth};
use crate::qmle::{Order, QmleOptions};
use crate::simulation::{self, CellOptions, Dgp, Innovation, SimSpec, TauShape};

#[derive(Debug, Parser)]
#[command(name = "sgarch", version, about = "Semiparametric GARCH estimation, testing, simulation and forecasting")]
pub struct Cli {
    /// Worker threads for simulate and forecast (default: available parallelism).
    #[arg(long, global = true, env = "SGARCH_THREADS")]
    pub threads: Option<usize>,

    /// More log output on stderr (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate τ and the GARCH parameters with adaptive standard errors.
    Fit(FitArgs),
    /// LM test of linear restrictions Rθ = r.
    #[command(name = "lm-test")]
    LmTest(LmArgs),
    /// Portmanteau test on squared standardized residuals.
    Check(CheckArgs),
    /// Cross-validated bandwidth and the CV curve.
    Bandwidth(BandwidthArgs),
    /// Monte-Carlo Bias/ESD/ASD for one design cell.
    Simulate(SimulateArgs),
    /// Rolling-origin QLIKE comparison with Diebold–Mariano tests.
    Forecast(ForecastArgs),
    /// Two-step, variance-targeting and three-step estimates side by side.
    #[command(name = "compare-estimators")]
    CompareEstimators(CompareArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutFormat {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BoundaryArg {
    Reflection,
    Interior,
}

impl From<BoundaryArg> for Boundary {
    fn from(b: BoundaryArg) -> Self {
        match b {
            BoundaryArg::Reflection => Boundary::Reflection,
            BoundaryArg::Interior => Boundary::InteriorOnly,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct InputArgs {
    /// CSV file with one observation per row.
    pub data: PathBuf,

    /// Column name or zero-based index.
    #[arg(long, default_value = "0")]
    pub column: String,

    /// Treat the column as prices and convert to percentage log returns.
    #[arg(long)]
    pub prices: bool,
}

impl InputArgs {
    fn load(&self) -> Result<ReturnSeries, CliError> {
        if !self.data.is_file() {
            return Err(CliError::Usage(format!("input file {} does not exist or is not a file", self.data.display())));
        }
        let column: ColumnSelector = self.column.parse().expect("infallible");
        let transform = if self.prices { Transform::LogReturnPct } else { Transform::None };
        data_io::load_series(&self.data, &column, transform).map_err(|e| match e {
            SgarchError::Io { .. } | SgarchError::Csv(_) | SgarchError::MissingColumn(_) | SgarchError::NonFinite { .. } => {
                CliError::Usage(format!("{}: {e}", self.data.display()))
            }
            other => CliError::Compute(other),
        })
    }
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    /// GARCH order as two numbers: p (lags of g) then q (lags of u²).
    #[arg(long, num_args = 2, value_names = ["P", "Q"], default_values_t = [1, 1])]
    pub order: Vec<usize>,

    /// `auto` for cross-validation with the fitted model as pilot, or a number in (0, 0.5).
    #[arg(long, default_value = "auto")]
    pub bandwidth: String,

    /// Boundary treatment of the kernel estimator.
    #[arg(long, value_enum, default_value_t = BoundaryArg::Reflection)]
    pub boundary: BoundaryArg,
}

impl ModelArgs {
    fn order(&self) -> Result<Order, CliError> {
        pipeline::parse_order(self.order[0], self.order[1]).map_err(|e| CliError::Usage(e.to_string()))
    }

    fn bandwidth(&self, order: Order) -> Result<Bandwidth, CliError> {
        match self.bandwidth.parse::<Bandwidth>().map_err(CliError::Usage)? {
            Bandwidth::Cv(_) => Ok(Bandwidth::cv_with_pilot(order)),
            Bandwidth::Fixed(h) => {
                KernelSpec::epanechnikov(h).map_err(|e| CliError::Usage(e.to_string()))?;
                Ok(Bandwidth::Fixed(h))
            }
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Write to this file instead of standard output.
    #[arg(short = 'o', long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Output format (JSON only).
    #[arg(long, value_enum, default_value_t = OutFormat::Json)]
    pub out: OutFormat,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct LmArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Restriction matrix, row-major with rows separated by semicolons, e.g. "0,1,0".
    #[arg(long = "R", value_name = "ROWS")]
    pub r_mat: String,
    /// Right-hand side as a comma list (default: zeros).
    #[arg(long = "r", value_name = "VALUES")]
    pub r_vec: Option<String>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Numbers of autocorrelations tested, as a comma list.
    #[arg(long, value_delimiter = ',', default_values_t = inference::DEFAULT_LAGS)]
    pub lags: Vec<usize>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct BandwidthArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Pilot GARCH order: p then q.
    #[arg(long, num_args = 2, value_names = ["P", "Q"], default_values_t = [1, 1])]
    pub pilot_order: Vec<usize>,
    /// Number of log-spaced grid points.
    #[arg(long, default_value_t = 25)]
    pub grid_size: usize,
    /// `csv` prints the curve (columns h, cv); `json` adds h_cv and the pilot bandwidth.
    #[arg(long, value_enum, default_value_t = OutFormat::Csv)]
    pub out: OutFormat,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Design: dgp1 (ARCH(2)), dgp2 (GARCH(1,1)), dgp3 (GARCH(1,2)), dgp4 (GARCH(2,1)).
    #[arg(long, default_value = "dgp2")]
    pub dgp: Dgp,
    /// Deviation index 0..=10 for dgp3 and dgp4.
    #[arg(long, default_value_t = 0)]
    pub k: u32,
    /// Long-run variance shape: constant, linear or cyclical.
    #[arg(long, default_value = "constant")]
    pub tau: TauShape,
    /// Innovation law: normal, st10 or st5.
    #[arg(long, default_value = "normal")]
    pub dist: Innovation,
    /// Sample size.
    #[arg(long = "T", default_value_t = 2000)]
    pub n_obs: usize,
    /// Number of replications.
    #[arg(long, default_value_t = 100)]
    pub reps: usize,
    /// Base seed; replication i uses stream i of this seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Fixed bandwidth instead of cross-validation.
    #[arg(long)]
    pub bandwidth: Option<f64>,
    /// Write replication 0's simulated series instead of running the cell.
    #[arg(long)]
    pub series_only: bool,
    /// Output format.
    #[arg(long, value_enum, default_value_t = OutFormat::Csv)]
    pub out: OutFormat,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct ForecastArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Models as a comma list of sgarch, sarch_q, garch_vt, ls_arch_q.
    #[arg(long, value_delimiter = ',', default_value = "sgarch,sarch_q,garch_vt,ls_arch_q")]
    pub models: Vec<ForecastModel>,
    /// Forecast horizons as a comma list.
    #[arg(long, value_delimiter = ',', default_values_t = forecasting::DEFAULT_HORIZONS)]
    pub t0: Vec<usize>,
    /// First forecast origin (number of in-sample observations).
    #[arg(long, default_value_t = forecasting::DEFAULT_ORIGIN_START)]
    pub origin_start: usize,
    /// Evaluate every n-th origin.
    #[arg(long, default_value_t = 1)]
    pub stride: usize,
    /// ARCH order for sarch_q and ls_arch_q.
    #[arg(long, default_value_t = 5)]
    pub q: usize,
    /// S-GARCH order: p then q.
    #[arg(long, num_args = 2, value_names = ["P", "Q"], default_values_t = [1, 1])]
    pub order: Vec<usize>,
    /// Fixed bandwidth instead of cross-validation every 250 origins.
    #[arg(long)]
    pub bandwidth: Option<f64>,
    /// Output format.
    #[arg(long, value_enum, default_value_t = OutFormat::Csv)]
    pub out: OutFormat,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Compute(SgarchError),
}

impl From<SgarchError> for CliError {
    fn from(e: SgarchError) -> Self {
        CliError::Compute(e)
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Compute(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Compute(e) => write!(f, "error: {e}"),
        }
    }
}

/// Parses `args`, runs the subcommand and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).try_init();
    match dispatch(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("sgarch: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cli: &Cli) -> Result<(), CliError> {
    if cli.threads == Some(0) {
        return Err(CliError::Usage("--threads must be at least 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start worker pool: {e}")))?;
    pool.install(|| match &cli.command {
        Command::Fit(a) => cmd_fit(a),
        Command::LmTest(a) => cmd_lm(a),
        Command::Check(a) => cmd_check(a),
        Command::Bandwidth(a) => cmd_bandwidth(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Forecast(a) => cmd_forecast(a),
        Command::CompareEstimators(a) => cmd_compare(a),
    })
}

fn sink(out: &OutputArgs) -> Result<Box<dyn Write>, CliError> {
    match &out.output {
        None => Ok(Box::new(BufWriter::new(io::stdout()))),
        Some(p) => File::create(p)
            .map(|f| Box::new(BufWriter::new(f)) as Box<dyn Write>)
            .map_err(|e| CliError::Usage(format!("cannot create {}: {e}", p.display()))),
    }
}

fn write_json(out: &OutputArgs, value: &Value) -> Result<(), CliError> {
    let mut w = sink(out)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| SgarchError::Write(e.into()))?;
    writeln!(w).map_err(SgarchError::from)?;
    w.flush().map_err(SgarchError::from)?;
    Ok(())
}

fn input_json(input: &InputArgs, series: &ReturnSeries) -> Value {
    json!({
        "path": input.data.display().to_string(),
        "column": series.label(),
        "prices": input.prices,
    })
}

fn finite_or_null(v: f64) -> Value {
    if v.is_finite() { json!(v) } else { Value::Null }
}

fn cmd_fit(a: &FitArgs) -> Result<(), CliError> {
    if a.out != OutFormat::Json {
        return Err(CliError::Usage("fit writes JSON only".into()));
    }
    let series = a.input.load()?;
    let order = a.model.order()?;
    let bw = a.model.bandwidth(order)?;
    let fit = pipeline::fit_sgarch(&series, order, &bw, a.model.boundary.into(), &QmleOptions::default())?;
    let value = json!({
        "command": "fit",
        "input": input_json(&a.input, &series),
        "T": series.len(),
        "order": order,
        "names": order.names(),
        "theta": fit.fit.params.theta(),
        "omega": fit.fit.params.omega(),
        "se": fit.cov.se,
        "sigma_hat": linalg::to_rows(&fit.cov.sigma_hat),
        "kappa_hat": fit.cov.kappa_hat,
        "loglik": fit.fit.loglik,
        "h_used": fit.h_used(),
        "bandwidth": bw.to_string(),
        "boundary": fit.fit.longrun.boundary,
        "converged": fit.fit.converged,
        "iterations": fit.fit.iterations,
    });
    write_json(&a.output, &value)
}

fn parse_list(s: &str, what: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| CliError::Usage(format!("{what}: `{t}` is not a number"))))
        .collect()
}

fn parse_constraint(r_mat: &str, r_vec: Option<&str>, dim: usize) -> Result<LinearConstraint, CliError> {
    let rows = r_mat
        .split(';')
        .filter(|r| !r.trim().is_empty())
        .map(|r| parse_list(r, "--R"))
        .collect::<Result<Vec<_>, _>>()?;
    if rows.is_empty() || rows.iter().any(|r| r.len() != dim) {
        return Err(CliError::Usage(format!("--R needs rows of {dim} entries separated by semicolons")));
    }
    let rhs = match r_vec {
        Some(s) => parse_list(s, "--r")?,
        None => vec![0.0; rows.len()],
    };
    if rhs.len() != rows.len() {
        return Err(CliError::Usage(format!("--r has {} entries but --R has {} rows", rhs.len(), rows.len())));
    }
    LinearConstraint::from_rows(&rows, &rhs).map_err(|e| CliError::Usage(e.to_string()))
}

fn cmd_lm(a: &LmArgs) -> Result<(), CliError> {
    let order = a.model.order()?;
    let constraint = parse_constraint(&a.r_mat, a.r_vec.as_deref(), order.dim())?;
    let series = a.input.load()?;
    let bw = a.model.bandwidth(order)?;
    let (lr, _) = pipeline::longrun_fit(&series, &bw, a.model.boundary.into())?;
    let outcome = inference::lm_test(&series, &lr, order, &constraint, &QmleOptions::default())?;
    let value = json!({
        "command": "lm-test",
        "input": input_json(&a.input, &series),
        "T": series.len(),
        "order": order,
        "names": order.names(),
        "R": linalg::to_rows(constraint.matrix()),
        "r": constraint.rhs().as_slice(),
        "h_used": lr.h_used,
        "restricted_theta": outcome.restricted.params.theta(),
        "statistic": outcome.report.statistic,
        "df": outcome.report.df,
        "p_value": outcome.report.p_value,
        "reject_at": outcome.report.reject_at,
    });
    write_json(&a.output, &value)
}

fn cmd_check(a: &CheckArgs) -> Result<(), CliError> {
    let order = a.model.order()?;
    if a.lags.is_empty() || a.lags.contains(&0) {
        return Err(CliError::Usage("--lags needs positive integers".into()));
    }
    let series = a.input.load()?;
    let bw = a.model.bandwidth(order)?;
    let fit = pipeline::fit_sgarch(&series, order, &bw, a.model.boundary.into(), &QmleOptions::default())?;
    let mut tests = Vec::new();
    for &ell in &a.lags {
        let (report, internals) = inference::portmanteau_test(&fit.fit, ell)?;
        tests.push(json!({
            "lags": ell,
            "statistic": report.statistic,
            "df": report.df,
            "p_value": report.p_value,
            "reject_at": report.reject_at,
            "rho_hat": internals.rho_hat,
        }));
    }
    let value = json!({
        "command": "check",
        "input": input_json(&a.input, &series),
        "T": series.len(),
        "order": order,
        "theta": fit.fit.params.theta(),
        "h_used": fit.h_used(),
        "tests": tests,
    });
    write_json(&a.output, &value)
}

fn cmd_bandwidth(a: &BandwidthArgs) -> Result<(), CliError> {
    let pilot = pipeline::parse_order(a.pilot_order[0], a.pilot_order[1]).map_err(|e| CliError::Usage(e.to_string()))?;
    let cfg = CvConfig { grid_size: a.grid_size, ..CvConfig::with_pilot(pilot) };
    cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let series = a.input.load()?;
    let cv = longrun::select_bandwidth_cv(&series, &cfg)?;
    match a.out {
        OutFormat::Csv => {
            let mut w = csv::Writer::from_writer(sink(&a.output)?);
            w.write_record(["h", "cv"]).map_err(SgarchError::from)?;
            for (h, v) in &cv.curve {
                w.write_record([h.to_string(), v.to_string()]).map_err(SgarchError::from)?;
            }
            w.flush().map_err(SgarchError::from)?;
            eprintln!("h_cv = {}", cv.h_cv);
            Ok(())
        }
        OutFormat::Json => {
            let curve: Vec<Value> = cv.curve.iter().map(|(h, v)| json!({ "h": h, "cv": v })).collect();
            let value = json!({
                "command": "bandwidth",
                "input": input_json(&a.input, &series),
                "T": series.len(),
                "pilot_order": pilot,
                "pilot_h": cv.pilot_h,
                "h_cv": cv.h_cv,
                "curve": curve,
            });
            write_json(&a.output, &value)
        }
    }
}

fn cmd_simulate(a: &SimulateArgs) -> Result<(), CliError> {
    let spec = SimSpec {
        dgp: a.dgp,
        k: a.k,
        tau_shape: a.tau,
        innovation: a.dist,
        n_obs: a.n_obs,
        n_reps: a.reps,
        seed: a.seed,
    };
    spec.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    if a.reps == 0 {
        return Err(CliError::Usage("--reps must be at least 1".into()));
    }
    if let Some(h) = a.bandwidth {
        KernelSpec::epanechnikov(h).map_err(|e| CliError::Usage(e.to_string()))?;
    }
    if a.series_only {
        let path = simulation::simulate_path(&spec, 0)?;
        return match a.out {
            OutFormat::Csv => {
                let series = ReturnSeries::new(path.y, "y")?;
                data_io::write_series(&series, sink(&a.output)?)?;
                Ok(())
            }
            OutFormat::Json => write_json(
                &a.output,
                &json!({ "command": "simulate", "spec": spec, "seed": spec.seed, "rep": 0, "y": path.y, "tau": path.tau, "g": path.g }),
            ),
        };
    }
    let opts = CellOptions { bandwidth: a.bandwidth, ..CellOptions::default() };
    let report = simulation::run_cell(&spec, &opts)?;
    match a.out {
        OutFormat::Csv => {
            simulation::write_cells_csv(std::slice::from_ref(&report), sink(&a.output)?)?;
            Ok(())
        }
        OutFormat::Json => {
            let value = json!({
                "command": "simulate",
                "seed": spec.seed,
                "spec": spec,
                "names": report.names,
                "truth": report.truth,
                "n_used": report.n_used,
                "n_excluded": report.n_excluded,
                "mean_h": finite_or_null(report.mean_h),
                "qmle": report.qmle,
            });
            write_json(&a.output, &value)
        }
    }
}

fn cmd_forecast(a: &ForecastArgs) -> Result<(), CliError> {
    let order = pipeline::parse_order(a.order[0], a.order[1]).map_err(|e| CliError::Usage(e.to_string()))?;
    let mut models = a.models.clone();
    models.dedup();
    let cfg = ForecastConfig {
        horizons: a.t0.clone(),
        origin_start: a.origin_start,
        origin_stride: a.stride,
        models,
        sgarch_order: order,
        q_arch: a.q,
        bandwidth: a.bandwidth,
        ..ForecastConfig::default()
    };
    let series = a.input.load()?;
    cfg.validate(series.len()).map_err(|e| CliError::Usage(e.to_string()))?;
    let report = forecasting::qlike_report(&series, &cfg)?;
    match a.out {
        OutFormat::Csv => {
            forecasting::write_qlike_csv(&report, sink(&a.output)?)?;
            Ok(())
        }
        OutFormat::Json => {
            let cells: Vec<Value> = report
                .cells
                .iter()
                .map(|c| {
                    json!({
                        "model": c.model,
                        "horizon": c.horizon,
                        "qlike": c.qlike,
                        "n_origins": c.n_origins,
                        "failures": c.failures,
                    })
                })
                .collect();
            let dm: Vec<Value> = report
                .dm
                .iter()
                .map(|d| {
                    json!({
                        "horizon": d.horizon,
                        "best": d.best,
                        "other": d.other,
                        "n": d.n,
                        "statistic": finite_or_null(d.result.statistic),
                        "p_value": d.result.p_value,
                        "mean_diff": d.result.mean_diff,
                    })
                })
                .collect();
            let value = json!({
                "command": "forecast",
                "input": input_json(&a.input, &series),
                "T": series.len(),
                "config": report.config,
                "cells": cells,
                "dm": dm,
            });
            write_json(&a.output, &value)
        }
    }
}

#[derive(Serialize)]
struct MethodJson {
    theta: Vec<f64>,
    se: Vec<f64>,
    omega: f64,
}

fn cmd_compare(a: &CompareArgs) -> Result<(), CliError> {
    let order = a.model.order()?;
    let series = a.input.load()?;
    let bw = a.model.bandwidth(order)?;
    let opts = QmleOptions::default();
    let two = pipeline::fit_sgarch(&series, order, &bw, a.model.boundary.into(), &opts)?;
    let vt = alt::fit_vt(&series, order, &opts)?;
    let spec = KernelSpec::new(two.fit.longrun.kernel, two.h_used())?;
    let three = alt::three_step_update(&two.fit, &series, &spec)?;
    let three_cov = alt::sigma_star_plugin(&three, &two.fit.filtered)?;
    let three_params = three.params()?;
    let vt_cov = asymptotics::estimate_covariance(&vt.filtered)?;
    let value = json!({
        "command": "compare-estimators",
        "input": input_json(&a.input, &series),
        "T": series.len(),
        "order": order,
        "names": order.names(),
        "h_used": two.h_used(),
        "two_step": MethodJson { theta: two.fit.params.theta().to_vec(), se: two.cov.se.clone(), omega: two.fit.params.omega() },
        "variance_targeting": MethodJson { theta: vt.params.theta().to_vec(), se: vt_cov.se, omega: vt.params.omega() },
        "variance_targeting_tau_bar": vt.tau_bar,
        "three_step": MethodJson { theta: three.theta_check.clone(), se: three_cov.se, omega: three_params.omega() },
        "three_step_tau_fallbacks": three.tau_fallbacks,
    });
    write_json(&a.output, &value)
}

/// Path of a shipped schema, relative to the crate root.
pub fn schema_path(command: &str) -> PathBuf {
    Path::new("schemas").join(format!("{}.schema.json", command.replace('-', "_")))
}
