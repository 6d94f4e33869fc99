//! Equation-by-equation estimation with data-driven penalty level and
//! loadings.
//!
//! Every estimator shares one loop per equation: fit a weighted Lasso at
//! `lambda*` with loadings built from the current residual proxy (the
//! responses at stage 0), then rebuild the loadings from the stage residuals
//! `K` times. The refitting variant takes those residuals from a least-squares
//! refit on the Lasso support instead of from the Lasso itself. Later stages
//! warm-start from the previous stage's Lasso coefficients.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::loadings::{regressor_scale_loadings, SquaredRegressors};
use super::{ideal_blocked_loadings, ideal_score_max, penalty_level, LoadingStage, LoadingsMatrix, PenaltyConfig};
use crate::error::{Error, Result};
use crate::model::{build_lag_design, demean_design, FitMeta, LagDesign, TimeSeriesPanel, VarEstimate};
use crate::solvers::{lasso_gram, ols_refit_gram, sqrt_lasso, GramSystem, SolverOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Estimator {
    /// Weighted Lasso with iterated residual loadings.
    Lasso,
    /// Least-squares refit on the Lasso support, refitting at every stage.
    PostLasso,
    /// Sqrt-Lasso at `lambda*/2` with regressor-scale loadings.
    SqrtLasso,
}

impl Estimator {
    pub const ALL: [Estimator; 3] = [Estimator::Lasso, Estimator::PostLasso, Estimator::SqrtLasso];

    pub fn as_str(self) -> &'static str {
        match self {
            Estimator::Lasso => "lasso",
            Estimator::PostLasso => "post_lasso",
            Estimator::SqrtLasso => "sqrt_lasso",
        }
    }
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

impl FromStr for Estimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "lasso" => Ok(Estimator::Lasso),
            "post_lasso" => Ok(Estimator::PostLasso),
            "sqrt_lasso" => Ok(Estimator::SqrtLasso),
            other => Err(Error::Config(format!(
                "unknown estimator {other:?} (expected lasso, post_lasso or sqrt_lasso)"
            ))),
        }
    }
}

/// A stage at which the least-squares refit was singular and the Lasso
/// residuals were used instead.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RefitFallback {
    pub equation: usize,
    pub stage: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DataDrivenFit {
    pub estimate: VarEstimate,
    /// Loadings used by the final penalized fit of each equation.
    pub loadings: LoadingsMatrix,
    pub refit_fallbacks: Vec<RefitFallback>,
}

struct EquationFit {
    beta: DVector<f64>,
    loadings: Vec<f64>,
    fallbacks: Vec<usize>,
}

struct Shared<'a> {
    design: &'a LagDesign,
    gram: DMatrix<f64>,
    squares: SquaredRegressors,
    lambda: f64,
    cfg: &'a PenaltyConfig,
    opts: &'a SolverOptions,
}

fn iterate_equation(sh: &Shared<'_>, i: usize, refit: bool) -> Result<EquationFit> {
    let x = sh.design.x();
    let y = sh.design.response(i).clone_owned();
    let system = GramSystem {
        gram: &sh.gram,
        xty: x.tr_mul(&y),
        yty: y.norm_squared(),
        n: sh.design.n(),
    };
    let mut proxy = y.clone();
    let mut warm = sh.opts.warm_start.clone();
    let mut fallbacks = Vec::new();
    let mut last = None;
    for stage in 0..=sh.cfg.k_updates {
        let loadings = sh
            .squares
            .loading_row(&proxy, sh.cfg.loading_floor)
            .map_err(|j| {
                Error::DegenerateLoading {
                    equation: i,
                    regressor: j,
                }
                .at(i, stage)
            })?;
        let opts = SolverOptions {
            warm_start: warm.take(),
            ..sh.opts.clone()
        };
        let fit = lasso_gram(&system, sh.lambda, &loadings, &opts).map_err(|e| e.at(i, stage))?;
        if !fit.converged {
            return Err(Error::NonConvergence {
                iterations: fit.passes_used,
            }
            .at(i, stage));
        }
        let used = if refit {
            let support: Vec<usize> = (0..fit.beta.len()).filter(|&j| fit.beta[j] != 0.0).collect();
            match ols_refit_gram(&sh.gram, &system.xty, &support) {
                Ok(b) => b,
                Err(Error::RankDeficient { .. }) => {
                    fallbacks.push(stage);
                    fit.beta.clone()
                }
                Err(e) => return Err(e.at(i, stage)),
            }
        } else {
            fit.beta.clone()
        };
        proxy = &y - x * &used;
        warm = Some(fit.beta);
        last = Some((used, loadings));
    }
    let (beta, loadings) = last.expect("at least one stage runs");
    Ok(EquationFit {
        beta,
        loadings,
        fallbacks,
    })
}

fn assemble(
    fits: Vec<EquationFit>,
    k: usize,
    stage: LoadingStage,
) -> Result<(DMatrix<f64>, LoadingsMatrix, Vec<RefitFallback>)> {
    let p = fits.len();
    let mut beta = DMatrix::zeros(p, k);
    let mut loads = DMatrix::zeros(p, k);
    let mut fallbacks = Vec::new();
    for (i, f) in fits.into_iter().enumerate() {
        beta.row_mut(i).copy_from(&f.beta.transpose());
        loads.row_mut(i).copy_from_slice(&f.loadings);
        fallbacks.extend(f.fallbacks.into_iter().map(|stage| RefitFallback { equation: i, stage }));
    }
    Ok((beta, LoadingsMatrix::new(loads, stage)?, fallbacks))
}

fn penalized_loop(
    design: &LagDesign,
    refit: bool,
    cfg: &PenaltyConfig,
    opts: &SolverOptions,
) -> Result<(DMatrix<f64>, LoadingsMatrix, Vec<RefitFallback>, f64)> {
    cfg.validate()?;
    let lambda = penalty_level(design.n(), design.p(), design.q(), cfg)?;
    let shared = Shared {
        design,
        gram: design.x().tr_mul(design.x()),
        squares: SquaredRegressors::new(design.x()),
        lambda,
        cfg,
        opts,
    };
    let fits = (0..design.p())
        .into_par_iter()
        .map(|i| iterate_equation(&shared, i, refit))
        .collect::<Result<Vec<_>>>()?;
    let stage = if cfg.k_updates == 0 {
        LoadingStage::Initial
    } else {
        LoadingStage::Residual(cfg.k_updates)
    };
    let (beta, loadings, fallbacks) = assemble(fits, design.k(), stage)?;
    Ok((beta, loadings, fallbacks, lambda))
}

fn sqrt_loop(
    design: &LagDesign,
    cfg: &PenaltyConfig,
    opts: &SolverOptions,
) -> Result<(DMatrix<f64>, LoadingsMatrix, f64)> {
    cfg.validate()?;
    let lambda = 0.5 * penalty_level(design.n(), design.p(), design.q(), cfg)?;
    let loadings = regressor_scale_loadings(design)?;
    let x = design.x();
    let fits = (0..design.p())
        .into_par_iter()
        .map(|i| {
            let y = design.response(i).clone_owned();
            let fit = sqrt_lasso(x, &y, lambda, &loadings, opts).map_err(|e| e.at(i, 0))?;
            if !fit.converged {
                return Err(Error::NonConvergence {
                    iterations: fit.passes_used,
                }
                .at(i, 0));
            }
            Ok(EquationFit {
                beta: fit.beta,
                loadings: loadings.clone(),
                fallbacks: Vec::new(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let (beta, loads, _) = assemble(fits, design.k(), LoadingStage::SqrtScale)?;
    Ok((beta, loads, lambda))
}

/// Runs `estimator` on an already-built design without intercepts.
pub fn fit_design(
    design: &LagDesign,
    estimator: Estimator,
    cfg: &PenaltyConfig,
    opts: &SolverOptions,
) -> Result<DataDrivenFit> {
    let (beta, loadings, fallbacks, lambda) = match estimator {
        Estimator::Lasso => penalized_loop(design, false, cfg, opts)?,
        Estimator::PostLasso => penalized_loop(design, true, cfg, opts)?,
        Estimator::SqrtLasso => {
            let (b, l, lam) = sqrt_loop(design, cfg, opts)?;
            (b, l, Vec::new(), lam)
        }
    };
    let meta = FitMeta {
        estimator,
        lambda,
        k_updates: if estimator == Estimator::SqrtLasso { 0 } else { cfg.k_updates },
    };
    Ok(DataDrivenFit {
        estimate: VarEstimate::new(beta, None, Some(meta))?,
        loadings,
        refit_fallbacks: fallbacks,
    })
}

/// Builds the lag design from `panel` and runs `estimator`, optionally with
/// unpenalized intercepts concentrated out by demeaning.
pub fn estimate(
    panel: &TimeSeriesPanel,
    q: usize,
    estimator: Estimator,
    intercept: bool,
    cfg: &PenaltyConfig,
    opts: &SolverOptions,
) -> Result<DataDrivenFit> {
    let design = build_lag_design(panel, q)?;
    if !intercept {
        return fit_design(&design, estimator, cfg, opts);
    }
    let dm = demean_design(&design)?;
    let fit = fit_design(&dm.design, estimator, cfg, opts)?;
    let beta = fit.estimate.beta().clone();
    // mu_i = ybar_i - zbar' beta_i
    let intercepts = &dm.y_means - &beta * &dm.z_means;
    Ok(DataDrivenFit {
        estimate: VarEstimate::new(beta, Some(intercepts), fit.estimate.meta().copied())?,
        ..fit
    })
}

/// Weighted Lasso at `lambda*` after `K` residual-loading updates.
pub fn algorithm1(
    panel: &TimeSeriesPanel,
    q: usize,
    cfg: &PenaltyConfig,
    opts: &SolverOptions,
) -> Result<VarEstimate> {
    Ok(estimate(panel, q, Estimator::Lasso, false, cfg, opts)?.estimate)
}

/// [`algorithm1`] on demeaned data, with intercepts recovered from the means.
pub fn algorithm2_with_intercepts(
    panel: &TimeSeriesPanel,
    q: usize,
    cfg: &PenaltyConfig,
    opts: &SolverOptions,
) -> Result<VarEstimate> {
    Ok(estimate(panel, q, Estimator::Lasso, true, cfg, opts)?.estimate)
}

/// Post-Lasso with loadings rebuilt from post-Lasso residuals at every stage.
pub fn algorithm3_refit(
    panel: &TimeSeriesPanel,
    q: usize,
    cfg: &PenaltyConfig,
    opts: &SolverOptions,
) -> Result<VarEstimate> {
    Ok(estimate(panel, q, Estimator::PostLasso, false, cfg, opts)?.estimate)
}

/// One sqrt-Lasso per equation at `lambda*/2` with regressor-scale loadings.
pub fn sqrt_lasso_pipeline(
    panel: &TimeSeriesPanel,
    q: usize,
    cfg: &PenaltyConfig,
    opts: &SolverOptions,
) -> Result<VarEstimate> {
    Ok(estimate(panel, q, Estimator::SqrtLasso, false, cfg, opts)?.estimate)
}

/// Whether `lambda*/n >= c max_i ||S_{n,i}||_inf` for the scores built from
/// the true innovations (`p x n`) and the ideal blocked loadings.
pub fn deviation_bound_holds(
    design: &LagDesign,
    eps: &DMatrix<f64>,
    cfg: &PenaltyConfig,
    tau: f64,
) -> Result<bool> {
    let ideal = ideal_blocked_loadings(design, eps, tau)?;
    let score = ideal_score_max(design, eps, &ideal)?;
    let lambda = penalty_level(design.n(), design.p(), design.q(), cfg)?;
    Ok(lambda / design.n() as f64 >= cfg.c * score)
}
