use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Pivot ratio below which a Gram submatrix is treated as singular.
const RANK_TOL: f64 = 1e-12;

/// Least squares restricted to `support`; coefficients outside it are zero.
pub fn ols_refit(x: &DMatrix<f64>, y: &DVector<f64>, support: &[usize]) -> Result<DVector<f64>> {
    if x.nrows() != y.len() {
        return Err(Error::Shape(format!(
            "X has {} rows, y has length {}",
            x.nrows(),
            y.len()
        )));
    }
    let gram = x.tr_mul(x);
    ols_refit_gram(&gram, &x.tr_mul(y), support)
}

pub(crate) fn ols_refit_gram(
    gram: &DMatrix<f64>,
    xty: &DVector<f64>,
    support: &[usize],
) -> Result<DVector<f64>> {
    let k = gram.ncols();
    let mut beta = DVector::zeros(k);
    if support.is_empty() {
        return Ok(beta);
    }
    if let Some(&j) = support.iter().find(|&&j| j >= k) {
        return Err(Error::Shape(format!("support index {j} out of range for {k} columns")));
    }
    let s = support.len();
    let sub = DMatrix::from_fn(s, s, |a, b| gram[(support[a], support[b])]);
    let rhs = DVector::from_fn(s, |a, _| xty[support[a]]);
    let deficient = || Error::RankDeficient {
        support: support.to_vec(),
    };
    let max_diag = sub.diagonal().max();
    let chol = sub.cholesky().ok_or_else(deficient)?;
    let min_pivot = chol.l_dirty().diagonal().map(|v| v * v).min();
    if !(max_diag > 0.0) || min_pivot <= RANK_TOL * max_diag {
        return Err(deficient());
    }
    let coef = chol.solve(&rhs);
    for (a, &j) in support.iter().enumerate() {
        beta[j] = coef[a];
    }
    Ok(beta)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_support_is_zero() {
        let x = DMatrix::from_element(3, 2, 1.0);
        let y = DVector::from_element(3, 1.0);
        assert_eq!(ols_refit(&x, &y, &[]).unwrap(), DVector::zeros(2));
    }

    #[test]
    fn scalar_least_squares() {
        let x = DMatrix::from_row_slice(2, 2, &[1.0, 5.0, 1.0, -3.0]);
        let y = DVector::from_vec(vec![1.0, 3.0]);
        let b = ols_refit(&x, &y, &[0]).unwrap();
        assert!((b[0] - 2.0).abs() < 1e-14);
        assert_eq!(b[1], 0.0);
    }

    #[test]
    fn collinear_support_is_rank_deficient() {
        let x = DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 0.0, 2.0, 4.0, 1.0, 3.0, 6.0, 0.0]);
        let y = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        match ols_refit(&x, &y, &[0, 1]) {
            Err(Error::RankDeficient { support }) => assert_eq!(support, vec![0, 1]),
            other => panic!("expected rank deficiency, got {other:?}"),
        }
        assert!(ols_refit(&x, &y, &[0, 2]).is_ok());
    }
}
