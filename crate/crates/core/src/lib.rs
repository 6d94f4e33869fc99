//! Data-driven l1-penalized estimation of high-dimensional vector
//! autoregressions.
//!
//! Each equation of a VAR(q) is fit by a weighted Lasso whose penalty level
//! depends only on `(n, p, q)` and whose per-coefficient loadings are
//! iterated from residuals. Post-Lasso refitting and a sqrt-Lasso with
//! regressor-scale loadings are provided alongside, together with the
//! simulation designs, the Monte Carlo and rolling-forecast harnesses, and a
//! command-line front end.
//!
//! ```no_run
//! use varlasso::{estimate, read_panel_csv, Estimator, PenaltyConfig, SolverOptions};
//!
//! let panel = read_panel_csv("panel.csv")?;
//! let fit = estimate(&panel, 1, Estimator::Lasso, false, &PenaltyConfig::default(), &SolverOptions::default())?;
//! println!("lambda = {}", fit.estimate.meta().unwrap().lambda);
//! # Ok::<(), varlasso::Error>(())
//! ```

// `!(x > 0.0)` is used on purpose so NaN lands on the error branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod diagnostics;
pub mod error;
pub mod experiments;
pub mod io;
pub mod model;
pub mod penalization;
pub mod simulation;
pub mod solvers;

pub use config::RunConfig;
pub use error::{Error, Result};
pub use io::{read_panel_csv, write_panel_csv};
pub use model::{
    build_lag_design, companion_matrix, demean_design, spectral_radius, CompanionMatrix, DemeanedDesign,
    FitMeta, LagDesign, TimeSeriesPanel, VarEstimate,
};
pub use penalization::{
    algorithm1, algorithm2_with_intercepts, algorithm3_refit, estimate, fit_design, penalty_level,
    sqrt_lasso_pipeline, DataDrivenFit, Estimator, LoadingsMatrix, PenaltyConfig,
};
pub use simulation::{make_design, simulate_var, DesignSpec, DesignTag, Simulation};
pub use solvers::{ols_refit, sqrt_lasso, weighted_lasso, LassoFit, SolverOptions};
