//! Command-line front end: `simulate`, `estimate`, `mc` and `forecast`.
//!
//! Every file written starts with `#` comment lines echoing the resolved
//! configuration. Timing goes to standard error only, so repeated runs with
//! the same inputs produce byte-identical files. Exit codes: 0 on success,
//! 1 on invalid input or configuration, 2 when a computation fails.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use nalgebra::DMatrix;

use crate::config::RunConfig;
use crate::diagnostics::error_report;
use crate::error::{Error, Result};
use crate::experiments::{
    run_forecast, run_monte_carlo, write_forecast_csv, write_mc_csv, ForecastConfig, McConfig, McResult,
};
use crate::io::{read_panel_csv, read_truth_csv, write_panel_csv, write_truth_csv, TruthSidecar};
use crate::model::{build_lag_design, VarEstimate};
use crate::penalization::{estimate, Estimator};
use crate::simulation::{make_design, simulate_var, DesignTag};

#[derive(Debug, Parser)]
#[command(name = "varlasso", version, about = "Data-driven l1-penalized VAR estimation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate one of the designs A-G and write the panel plus a truth sidecar.
    Simulate(SimulateArgs),
    /// Estimate a VAR from a CSV panel.
    Estimate(EstimateArgs),
    /// Monte Carlo comparison of the estimators on a design.
    Mc(McArgs),
    /// Rolling-window one-step forecast evaluation.
    Forecast(ForecastArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Flat key = value configuration file; flags override its entries.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory; created when missing.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Worker threads for the experiments (0 = one per core).
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
}

/// Flags mirroring the penalty and solver configuration keys.
#[derive(Debug, Clone, Args)]
pub struct PenaltyArgs {
    #[arg(long)]
    pub c: Option<f64>,
    #[arg(long)]
    pub gamma_override: Option<f64>,
    /// Number of loading updates.
    #[arg(long = "K", visible_alias = "k")]
    pub k_updates: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_passes: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub design: DesignTag,
    #[arg(long)]
    pub p: usize,
    /// Effective sample size; the panel holds n + q rows.
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub burn_in: Option<usize>,
    /// Clamp Design F's volatility factor to [1/b, b].
    #[arg(long)]
    pub censor: Option<f64>,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args)]
pub struct EstimateArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Truth sidecar written by `simulate`; adds error metrics to the summary.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[arg(long)]
    pub q: Option<usize>,
    #[arg(long)]
    pub estimator: Option<Estimator>,
    #[arg(long)]
    pub intercept: Option<bool>,
    #[command(flatten)]
    pub penalty: PenaltyArgs,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args)]
pub struct McArgs {
    #[arg(long)]
    pub design: DesignTag,
    #[arg(long)]
    pub p: usize,
    /// Comma-separated effective sample sizes.
    #[arg(long, value_delimiter = ',', required = true)]
    pub n: Vec<usize>,
    #[arg(long, default_value_t = 100)]
    pub reps: usize,
    #[arg(long, value_delimiter = ',', default_value = "lasso,post_lasso,sqrt_lasso")]
    pub estimators: Vec<Estimator>,
    #[arg(long)]
    pub burn_in: Option<usize>,
    #[command(flatten)]
    pub penalty: PenaltyArgs,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ForecastArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Comma-separated lag orders.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub q: Vec<usize>,
    #[arg(long)]
    pub window: usize,
    #[arg(long = "horizon-count")]
    pub horizon_count: usize,
    #[arg(long, value_delimiter = ',', default_value = "lasso,post_lasso,sqrt_lasso")]
    pub methods: Vec<Estimator>,
    #[command(flatten)]
    pub penalty: PenaltyArgs,
    #[command(flatten)]
    pub common: CommonArgs,
}

fn resolve(common: &CommonArgs, penalty: Option<&PenaltyArgs>, extra: &[(&str, Option<String>)]) -> Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::default(),
    };
    let mut flags: Vec<(&str, Option<String>)> = vec![("seed", common.seed.map(|v| v.to_string()))];
    if let Some(p) = penalty {
        flags.extend([
            ("c", p.c.map(|v| v.to_string())),
            ("gamma_override", p.gamma_override.map(|v| v.to_string())),
            ("K", p.k_updates.map(|v| v.to_string())),
            ("tol", p.tol.map(|v| v.to_string())),
            ("max_passes", p.max_passes.map(|v| v.to_string())),
        ]);
    }
    flags.extend(extra.iter().cloned());
    for (key, value) in flags {
        if let Some(v) = value {
            cfg.set(key, &v)?;
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn config_comments(command: &str, cfg: &RunConfig, extra: &[(&str, String)]) -> Vec<String> {
    let mut out = vec![format!("varlasso {} {command}", env!("CARGO_PKG_VERSION"))];
    out.extend(cfg.entries().into_iter().map(|(k, v)| format!("{k} = {v}")));
    out.extend(extra.iter().map(|(k, v)| format!("{k} = {v}")));
    out
}

fn write_output(dir: &Path, name: &str, bytes: &[u8]) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join(name);
    fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

fn cmd_simulate(a: &SimulateArgs) -> Result<()> {
    let cfg = resolve(&a.common, None, &[])?;
    let mut spec = make_design(a.design, a.p, a.n)?;
    if let Some(b) = a.censor {
        spec = spec.with_censor(b)?;
    }
    let sim = simulate_var(&spec, cfg.seed, a.burn_in)?;
    let mut extra = vec![
        ("design", a.design.to_string()),
        ("p", a.p.to_string()),
        ("n", a.n.to_string()),
        ("lags", spec.q.to_string()),
        ("burn_in", a.burn_in.map_or_else(|| "default".into(), |b| b.to_string())),
    ];
    if let Some(b) = a.censor {
        extra.push(("censor", b.to_string()));
    }
    let comments = config_comments("simulate", &cfg, &extra);
    let mut panel_bytes = Vec::new();
    write_panel_csv(&sim.panel, &mut panel_bytes, &comments).map_err(|e| Error::io("<panel>", e))?;
    let truth = TruthSidecar {
        beta: sim.truth.beta().clone(),
        innovations: sim.innovations.clone(),
    };
    let mut truth_bytes = Vec::new();
    write_truth_csv(&truth, &mut truth_bytes, &comments).map_err(|e| Error::io("<truth>", e))?;
    let panel_path = write_output(&a.common.out, "panel.csv", &panel_bytes)?;
    let truth_path = write_output(&a.common.out, "truth.csv", &truth_bytes)?;
    println!(
        "design {} p={} n={} q={}: {} rows -> {}, truth -> {}",
        a.design,
        a.p,
        a.n,
        spec.q,
        sim.panel.n_obs(),
        panel_path.display(),
        truth_path.display()
    );
    Ok(())
}

fn cmd_estimate(a: &EstimateArgs) -> Result<()> {
    let cfg = resolve(
        &a.common,
        Some(&a.penalty),
        &[
            ("q", a.q.map(|v| v.to_string())),
            ("estimator", a.estimator.map(|v| v.to_string())),
            ("intercept", a.intercept.map(|v| v.to_string())),
        ],
    )?;
    let panel = read_panel_csv(&a.data)?;
    let started = Instant::now();
    let fit = estimate(&panel, cfg.q, cfg.estimator, cfg.intercept, &cfg.penalty, &cfg.solver)?;
    let elapsed = started.elapsed();
    let est = &fit.estimate;
    let meta = est.meta().expect("estimators attach metadata");
    let names = panel.names();
    let p = names.len();

    let comments = config_comments("estimate", &cfg, &[("data", a.data.display().to_string())]);
    let mut coef = String::new();
    for c in &comments {
        let _ = writeln!(coef, "# {c}");
    }
    coef.push_str("equation");
    if est.intercepts().is_some() {
        coef.push_str(",intercept");
    }
    for j in 0..cfg.q {
        for name in names {
            let _ = write!(coef, ",L{}.{name}", j + 1);
        }
    }
    coef.push('\n');
    for i in 0..p {
        coef.push_str(&names[i]);
        if let Some(mu) = est.intercepts() {
            let _ = write!(coef, ",{}", mu[i]);
        }
        for v in est.beta().row(i).iter() {
            let _ = write!(coef, ",{v}");
        }
        coef.push('\n');
    }

    let mut summary = String::new();
    for c in &comments {
        let _ = writeln!(summary, "# {c}");
    }
    summary.push_str("quantity,equation,value\n");
    let _ = writeln!(summary, "lambda,,{}", meta.lambda);
    let _ = writeln!(summary, "K,,{}", meta.k_updates);
    let _ = writeln!(summary, "refit_fallbacks,,{}", fit.refit_fallbacks.len());
    for (i, s) in est.supports().iter().enumerate() {
        let _ = writeln!(summary, "support_size,{},{}", names[i], s.len());
    }
    let mut max_l2 = None;
    if let Some(path) = &a.truth {
        let truth = read_truth_csv(path)?.beta;
        let (p, k) = (est.p(), est.beta().ncols());
        if truth.nrows() != p || truth.ncols() % p != 0 || truth.ncols() > k {
            return Err(Error::Shape(format!(
                "truth is {}x{}, cannot compare with a {p}x{k} estimate",
                truth.nrows(),
                truth.ncols()
            )));
        }
        // a lower-order truth is a higher-order VAR with zero trailing lags
        let padded = DMatrix::from_fn(p, k, |i, j| if j < truth.ncols() { truth[(i, j)] } else { 0.0 });
        let truth = VarEstimate::new(padded, None, None)?;
        let design = build_lag_design(&panel, cfg.q)?;
        let report = error_report(est, &truth, &design)?;
        let _ = writeln!(summary, "max_l1_error,,{}", report.max_l1);
        let _ = writeln!(summary, "max_l2_error,,{}", report.max_l2);
        let _ = writeln!(summary, "max_prediction_error,,{}", report.max_prediction);
        max_l2 = Some(report.max_l2);
    }

    write_output(&a.common.out, "coefficients.csv", coef.as_bytes())?;
    let summary_path = write_output(&a.common.out, "summary.csv", summary.as_bytes())?;
    println!(
        "{} on {} series, q={}: lambda={:.6}, K={}, nonzeros={}",
        meta.estimator,
        p,
        cfg.q,
        meta.lambda,
        meta.k_updates,
        est.supports().iter().map(|s| s.len()).sum::<usize>()
    );
    if let Some(e) = max_l2 {
        println!("max row-wise l2 error vs truth: {e:.6}");
    }
    println!("summary -> {}", summary_path.display());
    eprintln!("estimate: {:.3}s", elapsed.as_secs_f64());
    Ok(())
}

fn cmd_mc(a: &McArgs) -> Result<()> {
    let cfg = resolve(&a.common, Some(&a.penalty), &[])?;
    let mut mc = McConfig::new(a.design, a.p, a.n.clone(), a.reps, cfg.seed);
    mc.estimators = a.estimators.clone();
    mc.penalty = cfg.penalty.clone();
    mc.solver = cfg.solver.clone();
    mc.burn_in = a.burn_in;
    mc.workers = a.common.workers;
    let started = Instant::now();
    let results = run_monte_carlo(&mc)?;
    let elapsed = started.elapsed();
    let list = |v: &[String]| v.join(",");
    let comments = config_comments(
        "mc",
        &cfg,
        &[
            ("design", a.design.to_string()),
            ("p", a.p.to_string()),
            ("n", list(&a.n.iter().map(usize::to_string).collect::<Vec<_>>())),
            ("reps", a.reps.to_string()),
            ("estimators", list(&a.estimators.iter().map(Estimator::to_string).collect::<Vec<_>>())),
            ("burn_in", a.burn_in.map_or_else(|| "default".into(), |b| b.to_string())),
        ],
    );
    let mut bytes = Vec::new();
    write_mc_csv(&mut bytes, &results, &comments)?;
    let path = write_output(&a.common.out, "mc.csv", &bytes)?;
    print!("{}", McResult::table(&results));
    println!("results -> {}", path.display());
    eprintln!("mc: {:.3}s", elapsed.as_secs_f64());
    Ok(())
}

fn cmd_forecast(a: &ForecastArgs) -> Result<()> {
    let cfg = resolve(&a.common, Some(&a.penalty), &[])?;
    let panel = read_panel_csv(&a.data)?;
    let mut fc = ForecastConfig::new(a.q.clone(), a.window, a.horizon_count);
    fc.methods = a.methods.clone();
    fc.penalty = cfg.penalty.clone();
    fc.solver = cfg.solver.clone();
    fc.workers = a.common.workers;
    let started = Instant::now();
    let report = run_forecast(&panel, &fc)?;
    let elapsed = started.elapsed();
    let comments = config_comments(
        "forecast",
        &cfg,
        &[
            ("data", a.data.display().to_string()),
            ("lags", a.q.iter().map(usize::to_string).collect::<Vec<_>>().join(",")),
            ("window", a.window.to_string()),
            ("horizon_count", a.horizon_count.to_string()),
            ("methods", a.methods.iter().map(Estimator::to_string).collect::<Vec<_>>().join(",")),
            ("weights", "sample variances over the entire panel".into()),
        ],
    );
    let mut bytes = Vec::new();
    write_forecast_csv(&mut bytes, &report, &comments)?;
    let path = write_output(&a.common.out, "forecast.csv", &bytes)?;
    print!("{}", report.table());
    println!("results -> {}", path.display());
    eprintln!("forecast: {:.3}s", elapsed.as_secs_f64());
    Ok(())
}

pub fn execute(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Simulate(a) => cmd_simulate(a),
        Command::Estimate(a) => cmd_estimate(a),
        Command::Mc(a) => cmd_mc(a),
        Command::Forecast(a) => cmd_forecast(a),
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_validation() {
                1
            } else {
                2
            }
        }
    }
}
