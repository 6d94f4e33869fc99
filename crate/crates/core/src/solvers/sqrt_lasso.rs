use nalgebra::{DMatrix, DVector};

use super::{check_lambda, check_loadings, LassoFit, SolverOptions, SQRT_LASSO_KKT_TOL};
use crate::error::{Error, Result};

/// `sqrt((1/n)||y - X beta||^2) + (lambda/n) sum_j u_j |beta_j|`.
pub fn sqrt_lasso_objective(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    beta: &DVector<f64>,
    lambda: f64,
    loadings: &[f64],
) -> f64 {
    let n = x.nrows() as f64;
    let pen: f64 = beta.iter().zip(loadings).map(|(b, u)| u * b.abs()).sum();
    ((y - x * beta).norm_squared() / n).sqrt() + lambda * pen / n
}

/// Largest violation of the sqrt-Lasso subgradient conditions, using the
/// gradient `-X_j'(y - X beta) / (n sqrt(Q))` of the root loss.
pub fn sqrt_lasso_gap(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    beta: &DVector<f64>,
    lambda: f64,
    loadings: &[f64],
) -> f64 {
    let resid = y - x * beta;
    gap_from_residual(x, &resid, beta, lambda, loadings)
}

fn gap_from_residual(
    x: &DMatrix<f64>,
    resid: &DVector<f64>,
    beta: &DVector<f64>,
    lambda: f64,
    loadings: &[f64],
) -> f64 {
    let n = x.nrows() as f64;
    let root = (resid.norm_squared() / n).sqrt();
    if root == 0.0 {
        return f64::INFINITY;
    }
    x.column_iter()
        .zip(beta.iter())
        .zip(loadings)
        .map(|((col, &b), &u)| {
            let g = col.dot(resid) / (n * root);
            let pen = lambda * u / n;
            if b != 0.0 {
                (g - pen * b.signum()).abs()
            } else {
                (g.abs() - pen).max(0.0)
            }
        })
        .fold(0.0, f64::max)
}

/// Minimizer along coordinate `j` of the sqrt-Lasso objective.
///
/// With `a = X_j' r_{-j}`, `d = ||X_j||^2` and `rss = ||r_{-j}||^2` (the
/// residual with coordinate `j` removed), zero is optimal iff
/// `|a| <= w sqrt(rss / n)` where `w = lambda u_j`. Otherwise the stationarity
/// condition `a - d b = w sqrt(Q(b))` is a quadratic in `b - a/d` with root
/// `b = sign(a) (|a|/d - w sqrt(e / (n d^2 - w^2 d)))`, `e = rss - a^2/d`.
#[inline]
fn coordinate_minimizer(a: f64, d: f64, rss: f64, w: f64, n: f64) -> f64 {
    if a.abs() <= w * (rss / n).sqrt() {
        return 0.0;
    }
    if w == 0.0 {
        return a / d;
    }
    let e = (rss - a * a / d).max(0.0);
    let shrink = w * (e / (n * d * d - w * w * d)).sqrt();
    a.signum() * (a.abs() / d - shrink).max(0.0)
}

/// Sqrt-Lasso by cyclic coordinate descent with closed-form coordinate
/// minimizers. The residual vector is maintained explicitly.
pub fn sqrt_lasso(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    lambda: f64,
    loadings: &[f64],
    opts: &SolverOptions,
) -> Result<LassoFit> {
    let (n_rows, k) = x.shape();
    if n_rows != y.len() || n_rows == 0 {
        return Err(Error::Shape(format!(
            "X is {n_rows}x{k}, y has length {}",
            y.len()
        )));
    }
    opts.validate(k)?;
    check_loadings(loadings, k)?;
    check_lambda(lambda)?;
    let n = n_rows as f64;

    let y_norm = y.norm();
    if y_norm == 0.0 {
        return Ok(LassoFit {
            beta: DVector::zeros(k),
            objective: 0.0,
            kkt_gap: 0.0,
            passes_used: 0,
            converged: true,
        });
    }
    let floor = 1e-12 * y_norm / n.sqrt();

    let col_sq: Vec<f64> = x.column_iter().map(|c| c.norm_squared()).collect();
    let mut beta = opts
        .warm_start
        .clone()
        .unwrap_or_else(|| DVector::zeros(k));
    for j in 0..k {
        if col_sq[j] == 0.0 {
            beta[j] = 0.0;
        }
    }
    let mut resid = y - x * &beta;
    let mut rss = resid.norm_squared();
    let mut gap = f64::INFINITY;
    let mut passes = 0;
    let mut converged = false;

    while passes < opts.max_passes {
        passes += 1;
        let mut max_change: f64 = 0.0;
        for j in 0..k {
            let d = col_sq[j];
            if d == 0.0 {
                continue;
            }
            let col = x.column(j);
            let old = beta[j];
            let c = col.dot(&resid);
            let a = c + d * old;
            let rss_minus = (rss + 2.0 * old * c + old * old * d).max(0.0);
            let new = coordinate_minimizer(a, d, rss_minus, lambda * loadings[j], n);
            let delta = new - old;
            if delta != 0.0 {
                beta[j] = new;
                resid.axpy(-delta, &col, 1.0);
                rss = (rss_minus - 2.0 * a * new + d * new * new).max(0.0);
                max_change = max_change.max(delta.abs());
            }
            if (rss / n).sqrt() < floor {
                rss = resid.norm_squared();
                if (rss / n).sqrt() < floor {
                    return Err(Error::SqrtLassoDegenerate {
                        pass: passes,
                        coordinate: j,
                    });
                }
            }
        }
        resid = y - x * &beta;
        rss = resid.norm_squared();
        if max_change < opts.tol {
            gap = gap_from_residual(x, &resid, &beta, lambda, loadings);
            if gap <= SQRT_LASSO_KKT_TOL {
                converged = true;
                break;
            }
        }
    }
    if !converged {
        gap = gap_from_residual(x, &resid, &beta, lambda, loadings);
    }
    Ok(LassoFit {
        objective: sqrt_lasso_objective(x, y, &beta, lambda, loadings),
        beta,
        kkt_gap: gap,
        passes_used: passes,
        converged,
    })
}
