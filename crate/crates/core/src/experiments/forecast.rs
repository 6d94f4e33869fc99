use std::fmt::Write as _;
use std::io::Write;

use nalgebra::DVector;
use rayon::prelude::*;

use super::{check_failures, nearest_rank, thread_pool};
use crate::error::{Error, Result};
use crate::model::TimeSeriesPanel;
use crate::penalization::{estimate, Estimator, PenaltyConfig};
use crate::solvers::SolverOptions;

/// Inverse-variance-weighted squared forecast error
/// `sum_i (forecast_i - actual_i)^2 / variance_i`.
pub fn ivwsfe(forecast: &DVector<f64>, actual: &DVector<f64>, variances: &DVector<f64>) -> Result<f64> {
    if forecast.len() != actual.len() || actual.len() != variances.len() {
        return Err(Error::Shape(format!(
            "forecast, actual and variances have lengths {}, {}, {}",
            forecast.len(),
            actual.len(),
            variances.len()
        )));
    }
    let mut total = 0.0;
    for i in 0..forecast.len() {
        let v = variances[i];
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::Argument(format!("series {i} has variance {v}")));
        }
        total += (forecast[i] - actual[i]).powi(2) / v;
    }
    Ok(total)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForecastConfig {
    /// Lag orders to compare; `1` is added when missing since it anchors the
    /// baseline.
    pub q_list: Vec<usize>,
    /// Effective sample size of every training window.
    pub window: usize,
    /// Number of one-step forecasts, targeting the last rows of the panel.
    pub n_forecasts: usize,
    /// The weighted Lasso is added in front when missing.
    pub methods: Vec<Estimator>,
    pub penalty: PenaltyConfig,
    pub solver: SolverOptions,
    pub workers: usize,
}

impl ForecastConfig {
    pub fn new(q_list: Vec<usize>, window: usize, n_forecasts: usize) -> Self {
        Self {
            q_list,
            window,
            n_forecasts,
            methods: Estimator::ALL.to_vec(),
            penalty: PenaltyConfig::default(),
            solver: SolverOptions::default(),
            workers: 0,
        }
    }

    fn cells(&self) -> Vec<(Estimator, usize)> {
        let mut methods = vec![Estimator::Lasso];
        methods.extend(self.methods.iter().filter(|&&m| m != Estimator::Lasso));
        methods.dedup();
        let mut qs = vec![1];
        qs.extend(self.q_list.iter().filter(|&&q| q != 1));
        let mut seen = Vec::new();
        for m in methods {
            for &q in &qs {
                if !seen.contains(&(m, q)) {
                    seen.push((m, q));
                }
            }
        }
        seen
    }
}

/// Training rows `train_start..train_end` (half-open) used to forecast row
/// `target`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ForecastWindow {
    pub q: usize,
    pub train_start: usize,
    pub train_end: usize,
    pub target: usize,
}

/// Rolling windows targeting the last `n_forecasts` rows of a panel with
/// `n_obs` rows. Each window holds `window + q` rows ending right before
/// its target.
pub fn forecast_windows(n_obs: usize, q: usize, window: usize, n_forecasts: usize) -> Result<Vec<ForecastWindow>> {
    if q == 0 || window == 0 || n_forecasts == 0 {
        return Err(Error::Argument("q, window and forecast count must be positive".into()));
    }
    if n_obs < window + q + n_forecasts {
        return Err(Error::Dimension(format!(
            "{n_obs} observations cannot hold a window of {window} with {q} lags and {n_forecasts} forecasts"
        )));
    }
    Ok((n_obs - n_forecasts..n_obs)
        .map(|target| ForecastWindow {
            q,
            train_start: target - window - q,
            train_end: target,
            target,
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForecastRow {
    pub method: Estimator,
    pub q: usize,
    /// IVWSFE per successful origin, in origin order.
    pub ivwsfe: Vec<f64>,
    /// Origins skipped because the fit failed.
    pub failed: usize,
    pub average: f64,
    pub p95: f64,
    pub relative_average: f64,
    pub relative_p95: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForecastReport {
    pub rows: Vec<ForecastRow>,
    /// Per-series sample variances over the whole panel used as weights.
    pub variances: DVector<f64>,
}

impl ForecastReport {
    pub fn row(&self, method: Estimator, q: usize) -> Option<&ForecastRow> {
        self.rows.iter().find(|r| r.method == method && r.q == q)
    }

    pub fn table(&self) -> String {
        let mut out = format!(
            "{:<11} {:>3} {:>6} {:>6} {:>12} {:>12} {:>9} {:>9}\n",
            "method", "q", "n", "failed", "average", "p95", "rel_avg", "rel_p95"
        );
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:<11} {:>3} {:>6} {:>6} {:>12.6} {:>12.6} {:>9.4} {:>9.4}",
                r.method,
                r.q,
                r.ivwsfe.len(),
                r.failed,
                r.average,
                r.p95,
                r.relative_average,
                r.relative_p95
            );
        }
        out
    }
}

fn forecast_cell(
    panel: &TimeSeriesPanel,
    w: &ForecastWindow,
    method: Estimator,
    cfg: &ForecastConfig,
    variances: &DVector<f64>,
) -> Result<f64> {
    let train = panel.slice_rows(w.train_start, w.train_end)?;
    let fit = estimate(&train, w.q, method, true, &cfg.penalty, &cfg.solver)?;
    let forecast = fit.estimate.forecast_next(train.data())?;
    let actual = panel.data().row(w.target).transpose();
    ivwsfe(&forecast, &actual, variances)
}

/// Rolling one-step forecasts for every `(method, q)`, each with unpenalized
/// intercepts, scored by IVWSFE and summarized relative to `(lasso, 1)`.
///
/// The weights are sample variances over the entire panel, so they use
/// observations after each forecast origin; only the weights see those rows,
/// never the fitted coefficients.
pub fn run_forecast(panel: &TimeSeriesPanel, cfg: &ForecastConfig) -> Result<ForecastReport> {
    cfg.penalty.validate()?;
    let cells = cfg.cells();
    let variances = panel.sample_variances();
    for (i, v) in variances.iter().enumerate() {
        if !(*v > 0.0) {
            return Err(Error::Argument(format!("series {i} has variance {v}")));
        }
    }
    let windows = cells
        .iter()
        .map(|&(_, q)| forecast_windows(panel.n_obs(), q, cfg.window, cfg.n_forecasts))
        .collect::<Result<Vec<_>>>()?;
    let pool = thread_pool(cfg.workers)?;
    // outcomes[origin][cell]
    let outcomes: Vec<Vec<Result<f64>>> = pool.install(|| {
        (0..cfg.n_forecasts)
            .into_par_iter()
            .map(|h| {
                cells
                    .iter()
                    .zip(&windows)
                    .map(|(&(method, _), ws)| forecast_cell(panel, &ws[h], method, cfg, &variances))
                    .collect()
            })
            .collect()
    });
    let mut rows = Vec::with_capacity(cells.len());
    let mut failed_total = 0;
    for (c, &(method, q)) in cells.iter().enumerate() {
        let mut values = Vec::with_capacity(cfg.n_forecasts);
        let mut failed = 0;
        for (h, per_origin) in outcomes.iter().enumerate() {
            match &per_origin[c] {
                Ok(v) => values.push(*v),
                Err(e) => {
                    failed += 1;
                    eprintln!("forecast: {method} q={q} origin {h} skipped: {e}");
                }
            }
        }
        failed_total += failed;
        let (average, p95) = if values.is_empty() {
            (f64::NAN, f64::NAN)
        } else {
            (
                values.iter().sum::<f64>() / values.len() as f64,
                nearest_rank(&values, 0.95).expect("non-empty"),
            )
        };
        rows.push(ForecastRow {
            method,
            q,
            ivwsfe: values,
            failed,
            average,
            p95,
            relative_average: 1.0,
            relative_p95: 1.0,
        });
    }
    check_failures(failed_total, cells.len() * cfg.n_forecasts)?;
    let (base_avg, base_p95) = (rows[0].average, rows[0].p95);
    for r in rows.iter_mut().skip(1) {
        r.relative_average = r.average / base_avg;
        r.relative_p95 = r.p95 / base_p95;
    }
    Ok(ForecastReport { rows, variances })
}

/// Long-format CSV, one row per `(method, q, statistic)`.
pub fn write_forecast_csv<W: Write>(mut w: W, report: &ForecastReport, comments: &[String]) -> Result<()> {
    let mut out = String::new();
    for c in comments {
        let _ = writeln!(out, "# {c}");
    }
    out.push_str("method,q,forecasts,failed,average,p95,relative_average,relative_p95\n");
    for r in &report.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.method,
            r.q,
            r.ivwsfe.len(),
            r.failed,
            r.average,
            r.p95,
            r.relative_average,
            r.relative_p95
        );
    }
    w.write_all(out.as_bytes()).map_err(|e| Error::io("<forecast output>", e))
}
