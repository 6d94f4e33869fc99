//! Data-driven penalization: the penalty level, penalty loadings and the
//! estimation loops that tie them to the solvers.

mod algorithms;
mod loadings;
mod quantile;

pub use algorithms::{
    algorithm1, algorithm2_with_intercepts, algorithm3_refit, deviation_bound_holds, estimate,
    fit_design, sqrt_lasso_pipeline, DataDrivenFit, Estimator, RefitFallback,
};
pub use loadings::{
    block_length, ideal_blocked_loadings, ideal_score_max, initial_loadings,
    regressor_scale_loadings, residual_loadings, LoadingStage, LoadingsMatrix,
};
pub use quantile::inverse_normal_cdf;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct PenaltyConfig {
    /// Slack constant `c > 1`.
    pub c: f64,
    /// Replaces the default `gamma_n = 0.1 / ln(max(n, pq))` when set.
    pub gamma_override: Option<f64>,
    /// Number of loading updates `K`.
    pub k_updates: usize,
    /// Replace exactly-zero loadings by `1e-12` times the regressor scale
    /// instead of failing.
    pub loading_floor: bool,
}

impl Default for PenaltyConfig {
    fn default() -> Self {
        Self {
            c: 1.1,
            gamma_override: None,
            k_updates: 15,
            loading_floor: false,
        }
    }
}

impl PenaltyConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 1.0 && self.c.is_finite()) {
            return Err(Error::Config(format!("c must exceed 1, got {}", self.c)));
        }
        if let Some(g) = self.gamma_override {
            if !(g > 0.0 && g < 1.0) {
                return Err(Error::Config(format!("gamma must lie in (0, 1), got {g}")));
            }
        }
        Ok(())
    }

    pub fn gamma(&self, n: usize, pq: usize) -> f64 {
        self.gamma_override
            .unwrap_or_else(|| 0.1 / (n.max(pq) as f64).ln())
    }

    pub fn lambda_star(&self, n: usize, p: usize, q: usize) -> Result<f64> {
        penalty_level(n, p, q, self)
    }
}

/// `lambda* = 2 c sqrt(n) Phi^{-1}(1 - gamma_n / (2 p^2 q))`.
pub fn penalty_level(n: usize, p: usize, q: usize, cfg: &PenaltyConfig) -> Result<f64> {
    if n < 3 || p < 2 || q < 1 {
        return Err(Error::Argument(format!(
            "penalty level needs n >= 3, p >= 2, q >= 1 (got n={n}, p={p}, q={q})"
        )));
    }
    let gamma = cfg.gamma(n, p * q);
    let arg = 1.0 - gamma / (2.0 * (p * p * q) as f64);
    if !(arg > 0.0 && arg < 1.0) {
        return Err(Error::Config(format!(
            "quantile argument {arg} outside (0, 1) for gamma={gamma}"
        )));
    }
    Ok(2.0 * cfg.c * (n as f64).sqrt() * inverse_normal_cdf(arg)?)
}
