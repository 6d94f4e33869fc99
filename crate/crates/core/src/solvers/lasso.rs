use nalgebra::{DMatrix, DVector};

use super::{check_lambda, check_loadings, soft_threshold, LassoFit, SolverOptions, LASSO_KKT_TOL};
use crate::error::{Error, Result};

/// Sufficient statistics of a least-squares problem: `X'X`, `X'y`, `y'y`, `n`.
///
/// Coordinate descent on the Gram form costs `O(k)` per coordinate update
/// regardless of `n`, and `X'X` is shared by every equation of a VAR.
pub(crate) struct GramSystem<'a> {
    pub gram: &'a DMatrix<f64>,
    pub xty: DVector<f64>,
    pub yty: f64,
    pub n: usize,
}

impl GramSystem<'_> {
    /// `X'(y - X beta)`.
    fn correlations(&self, beta: &DVector<f64>) -> DVector<f64> {
        &self.xty - self.gram * beta
    }

    fn loss(&self, beta: &DVector<f64>) -> f64 {
        let rss = self.yty - 2.0 * beta.dot(&self.xty) + beta.dot(&(self.gram * beta));
        rss.max(0.0) / self.n as f64
    }
}

fn gap_from_correlations(
    corr: &DVector<f64>,
    beta: &DVector<f64>,
    n: f64,
    lambda: f64,
    loadings: &[f64],
) -> f64 {
    corr.iter()
        .zip(beta.iter())
        .zip(loadings)
        .map(|((&c, &b), &u)| {
            let grad = 2.0 * c / n;
            let pen = lambda * u / n;
            if b != 0.0 {
                (grad - pen * b.signum()).abs()
            } else {
                (grad.abs() - pen).max(0.0)
            }
        })
        .fold(0.0, f64::max)
}

/// Largest violation of the weighted-Lasso first-order conditions at `beta`.
///
/// For `beta_j != 0` the violation is `|(2/n) X_j'(y - X beta) - (lambda/n) u_j sign(beta_j)|`;
/// for `beta_j == 0` it is the excess of `|(2/n) X_j'(y - X beta)|` over `(lambda/n) u_j`.
pub fn kkt_gap_lasso(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    beta: &DVector<f64>,
    lambda: f64,
    loadings: &[f64],
) -> f64 {
    let resid = y - x * beta;
    let corr = x.tr_mul(&resid);
    gap_from_correlations(&corr, beta, x.nrows() as f64, lambda, loadings)
}

/// `(1/n)||y - X beta||^2 + (lambda/n) sum_j u_j |beta_j|`.
pub fn lasso_objective(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    beta: &DVector<f64>,
    lambda: f64,
    loadings: &[f64],
) -> f64 {
    let n = x.nrows() as f64;
    (y - x * beta).norm_squared() / n + penalty(beta, lambda, loadings) / n
}

fn penalty(beta: &DVector<f64>, lambda: f64, loadings: &[f64]) -> f64 {
    lambda * beta.iter().zip(loadings).map(|(b, u)| u * b.abs()).sum::<f64>()
}

/// Weighted Lasso by cyclic coordinate descent with exact soft-threshold
/// coordinate updates.
pub fn weighted_lasso(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    lambda: f64,
    loadings: &[f64],
    opts: &SolverOptions,
) -> Result<LassoFit> {
    if x.nrows() != y.len() || x.nrows() == 0 {
        return Err(Error::Shape(format!(
            "X is {}x{}, y has length {}",
            x.nrows(),
            x.ncols(),
            y.len()
        )));
    }
    let gram = x.tr_mul(x);
    let system = GramSystem {
        gram: &gram,
        xty: x.tr_mul(y),
        yty: y.norm_squared(),
        n: x.nrows(),
    };
    let mut fit = lasso_gram(&system, lambda, loadings, opts)?;
    fit.objective = lasso_objective(x, y, &fit.beta, lambda, loadings);
    fit.kkt_gap = kkt_gap_lasso(x, y, &fit.beta, lambda, loadings);
    Ok(fit)
}

pub(crate) fn lasso_gram(
    sys: &GramSystem<'_>,
    lambda: f64,
    loadings: &[f64],
    opts: &SolverOptions,
) -> Result<LassoFit> {
    let k = sys.gram.ncols();
    opts.validate(k)?;
    check_loadings(loadings, k)?;
    check_lambda(lambda)?;
    let n = sys.n as f64;

    let mut beta = opts
        .warm_start
        .clone()
        .unwrap_or_else(|| DVector::zeros(k));
    for j in 0..k {
        if sys.gram[(j, j)] == 0.0 {
            beta[j] = 0.0;
        }
    }
    let mut corr = sys.correlations(&beta);
    let mut gap = f64::INFINITY;
    let mut passes = 0;
    let mut converged = false;

    while passes < opts.max_passes {
        passes += 1;
        let mut max_change: f64 = 0.0;
        for j in 0..k {
            let d = sys.gram[(j, j)];
            if d == 0.0 {
                continue;
            }
            let old = beta[j];
            let a = corr[j] + d * old;
            let new = soft_threshold(a, 0.5 * lambda * loadings[j]) / d;
            let delta = new - old;
            if delta != 0.0 {
                beta[j] = new;
                corr.axpy(-delta, &sys.gram.column(j), 1.0);
                max_change = max_change.max(delta.abs());
            }
        }
        if max_change < opts.tol {
            // resynchronise the running correlations before judging optimality
            corr = sys.correlations(&beta);
            gap = gap_from_correlations(&corr, &beta, n, lambda, loadings);
            if gap <= LASSO_KKT_TOL {
                converged = true;
                break;
            }
        }
    }
    if !converged {
        gap = gap_from_correlations(&sys.correlations(&beta), &beta, n, lambda, loadings);
    }
    let objective = sys.loss(&beta) + penalty(&beta, lambda, loadings) / n;
    Ok(LassoFit {
        beta,
        objective,
        kkt_gap: gap,
        passes_used: passes,
        converged,
    })
}
