//! Per-equation optimizers: weighted Lasso, sqrt-Lasso and least-squares
//! refitting on a selected support.
//!
//! Both penalized solvers run cyclic coordinate descent in natural column
//! order. Columns are never standardized here; scale enters only through the
//! penalty loadings.

mod lasso;
mod ols;
mod sqrt_lasso;

use nalgebra::DVector;

use crate::error::{Error, Result};

pub use lasso::{kkt_gap_lasso, lasso_objective, weighted_lasso};
pub use ols::ols_refit;
pub use sqrt_lasso::{sqrt_lasso, sqrt_lasso_gap, sqrt_lasso_objective};

pub(crate) use lasso::{lasso_gram, GramSystem};
pub(crate) use ols::ols_refit_gram;

/// First-order optimality threshold a converged weighted Lasso must meet.
pub const LASSO_KKT_TOL: f64 = 1e-8;

/// Subgradient optimality threshold a converged sqrt-Lasso must meet.
pub const SQRT_LASSO_KKT_TOL: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    pub max_passes: usize,
    /// Threshold on the largest absolute coefficient change over a full pass.
    pub tol: f64,
    pub warm_start: Option<DVector<f64>>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            max_passes: 10_000,
            tol: 1e-9,
            warm_start: None,
        }
    }
}

impl SolverOptions {
    pub(crate) fn validate(&self, k: usize) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::Argument(format!("tol must be positive, got {}", self.tol)));
        }
        if self.max_passes == 0 {
            return Err(Error::Argument("max_passes must be at least 1".into()));
        }
        if let Some(w) = &self.warm_start {
            if w.len() != k {
                return Err(Error::Shape(format!(
                    "warm start of length {} for {k} coefficients",
                    w.len()
                )));
            }
        }
        Ok(())
    }
}

/// Result of a penalized fit. `converged == false` still carries the last
/// iterate so the caller can decide what to do with it.
#[derive(Debug, Clone, PartialEq)]
pub struct LassoFit {
    pub beta: DVector<f64>,
    pub objective: f64,
    pub kkt_gap: f64,
    pub passes_used: usize,
    pub converged: bool,
}

pub(crate) fn check_loadings(loadings: &[f64], k: usize) -> Result<()> {
    if loadings.len() != k {
        return Err(Error::Shape(format!(
            "{} loadings for {k} coefficients",
            loadings.len()
        )));
    }
    if let Some(j) = loadings.iter().position(|u| !(u.is_finite() && *u > 0.0)) {
        return Err(Error::Argument(format!(
            "loading {j} must be positive and finite, got {}",
            loadings[j]
        )));
    }
    Ok(())
}

pub(crate) fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(Error::Argument(format!("lambda must be >= 0, got {lambda}")));
    }
    Ok(())
}

#[inline]
pub(crate) fn soft_threshold(z: f64, t: f64) -> f64 {
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        0.0
    }
}
