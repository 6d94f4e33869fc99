//! The Monte Carlo study and the rolling-window forecast evaluation.
//!
//! Both harnesses split work into independent tasks (replications or
//! forecast origins), run them on a rayon pool of the requested size and
//! reduce in task order, so results do not depend on the worker count.

mod forecast;
mod monte_carlo;

pub use forecast::{
    forecast_windows, ivwsfe, run_forecast, write_forecast_csv, ForecastConfig, ForecastReport,
    ForecastRow, ForecastWindow,
};
pub use monte_carlo::{
    replication_rng, run_monte_carlo, write_mc_csv, McConfig, McResult,
};

use crate::error::{Error, Result};

/// Largest tolerated share of failed tasks.
pub const MAX_FAILURE_RATE: f64 = 0.05;

/// Nearest-rank percentile: the `ceil(pct * N)`-th smallest value.
pub fn nearest_rank(values: &[f64], pct: f64) -> Option<f64> {
    if values.is_empty() || !(pct > 0.0 && pct <= 1.0) {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rank = ((pct * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    Some(sorted[rank - 1])
}

pub(crate) fn thread_pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {workers} workers: {e}")))
}

pub(crate) fn check_failures(failed: usize, total: usize) -> Result<()> {
    if total > 0 && failed as f64 > MAX_FAILURE_RATE * total as f64 {
        return Err(Error::TooManyFailures { failed, total });
    }
    Ok(())
}
