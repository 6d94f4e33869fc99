//! Penalty loadings: the data-driven constructions used by the estimators
//! and the infeasible blocked loadings built from true innovations.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::LagDesign;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LoadingStage {
    /// Built from the responses themselves.
    Initial,
    /// Built from residuals of update round `k >= 1`.
    Residual(usize),
    /// Regressor second moments, shared across equations.
    SqrtScale,
    /// Blocked sums of true innovations times regressors.
    IdealBlocked,
}

/// `p x pq` strictly positive penalty loadings, row `i` for equation `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadingsMatrix {
    values: DMatrix<f64>,
    stage: LoadingStage,
}

impl LoadingsMatrix {
    pub fn new(values: DMatrix<f64>, stage: LoadingStage) -> Result<Self> {
        for i in 0..values.nrows() {
            for j in 0..values.ncols() {
                let v = values[(i, j)];
                if !(v.is_finite() && v > 0.0) {
                    return Err(Error::DegenerateLoading {
                        equation: i,
                        regressor: j,
                    });
                }
            }
        }
        Ok(Self { values, stage })
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn stage(&self) -> LoadingStage {
        self.stage
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.values.row(i).iter().copied().collect()
    }
}

/// Squared regressors, reused across equations and update rounds.
pub(crate) struct SquaredRegressors {
    xsq: DMatrix<f64>,
    floors: Vec<f64>,
}

impl SquaredRegressors {
    pub fn new(x: &DMatrix<f64>) -> Self {
        let xsq = x.map(|v| v * v);
        let n = x.nrows() as f64;
        let floors = xsq
            .column_iter()
            .map(|c| {
                let scale = (c.sum() / n).sqrt();
                1e-12 * if scale > 0.0 { scale } else { 1.0 }
            })
            .collect();
        Self { xsq, floors }
    }

    /// `sqrt((1/n) sum_t w_t^2 X_{t,j}^2)` for every `j`. Returns the first
    /// degenerate regressor index as the error unless `floor` is set.
    pub fn loading_row(&self, weights: &DVector<f64>, floor: bool) -> std::result::Result<Vec<f64>, usize> {
        let n = self.xsq.nrows() as f64;
        let wsq = weights.map(|v| v * v);
        let raw = self.xsq.tr_mul(&wsq);
        raw.iter()
            .enumerate()
            .map(|(j, s)| {
                let v = (s / n).sqrt();
                if v > 0.0 && v.is_finite() {
                    Ok(v)
                } else if floor && v == 0.0 {
                    Ok(self.floors[j])
                } else {
                    Err(j)
                }
            })
            .collect()
    }
}

fn loadings_from_weights(d: &LagDesign, weights: &DMatrix<f64>, stage: LoadingStage) -> Result<LoadingsMatrix> {
    if weights.ncols() != d.n() || weights.nrows() != d.p() {
        return Err(Error::Shape(format!(
            "weights are {}x{}, expected {}x{}",
            weights.nrows(),
            weights.ncols(),
            d.p(),
            d.n()
        )));
    }
    let sq = SquaredRegressors::new(d.x());
    let mut values = DMatrix::zeros(d.p(), d.k());
    for i in 0..d.p() {
        let row = sq
            .loading_row(&weights.row(i).transpose(), false)
            .map_err(|j| Error::DegenerateLoading {
                equation: i,
                regressor: j,
            })?;
        values.row_mut(i).copy_from_slice(&row);
    }
    LoadingsMatrix::new(values, stage)
}

/// `u_{i,j} = sqrt((1/n) sum_t y_i(t)^2 X(t,j)^2)`.
pub fn initial_loadings(d: &LagDesign) -> Result<LoadingsMatrix> {
    loadings_from_weights(d, &d.responses().transpose(), LoadingStage::Initial)
}

/// As [`initial_loadings`] with the responses replaced by `residuals` (`p x n`).
pub fn residual_loadings(d: &LagDesign, residuals: &DMatrix<f64>) -> Result<LoadingsMatrix> {
    loadings_from_weights(d, residuals, LoadingStage::Residual(1))
}

/// `sqrt((1/n) sum_t X(t,j)^2)`, identical for every equation.
pub fn regressor_scale_loadings(d: &LagDesign) -> Result<Vec<f64>> {
    let n = d.n() as f64;
    d.x()
        .column_iter()
        .enumerate()
        .map(|(j, c)| {
            let v = (c.norm_squared() / n).sqrt();
            if v > 0.0 {
                Ok(v)
            } else {
                Err(Error::DegenerateLoading {
                    equation: 0,
                    regressor: j,
                })
            }
        })
        .collect()
}

/// Block length `max(1, floor(n^{1/(1+4 tau)}))`, computed without
/// floating-point rounding at exact powers.
pub fn block_length(n: usize, tau: f64) -> usize {
    let exponent = 1.0 + 4.0 * tau;
    let mut m = (n as f64).powf(1.0 / exponent).floor().max(1.0) as usize;
    while ((m + 1) as f64).powf(exponent) <= n as f64 {
        m += 1;
    }
    while m > 1 && (m as f64).powf(exponent) > n as f64 {
        m -= 1;
    }
    m
}

/// Infeasible ideal loadings
/// `sqrt((1/n) sum_k (sum_{t in H_k} eps_{t,i} Z_{t-1,j})^2)` over `floor(n/m)`
/// consecutive blocks of length `m`; trailing indices that do not fill a
/// block are dropped and the divisor stays `n`.
pub fn ideal_blocked_loadings(d: &LagDesign, eps: &DMatrix<f64>, tau: f64) -> Result<LoadingsMatrix> {
    check_innovations(d, eps)?;
    if !(tau > 0.0 && tau <= 1.0) {
        return Err(Error::Argument(format!("tau must lie in (0, 1], got {tau}")));
    }
    let n = d.n();
    let m = block_length(n, tau);
    let blocks = n / m;
    let x = d.x();
    let mut values = DMatrix::zeros(d.p(), d.k());
    for i in 0..d.p() {
        for j in 0..d.k() {
            let mut acc = 0.0;
            for b in 0..blocks {
                let s: f64 = (b * m..(b + 1) * m).map(|t| eps[(i, t)] * x[(t, j)]).sum();
                acc += s * s;
            }
            values[(i, j)] = (acc / n as f64).sqrt();
        }
    }
    LoadingsMatrix::new(values, LoadingStage::IdealBlocked)
}

fn check_innovations(d: &LagDesign, eps: &DMatrix<f64>) -> Result<()> {
    if eps.nrows() != d.p() || eps.ncols() != d.n() {
        return Err(Error::Shape(format!(
            "innovations are {}x{}, expected {}x{}",
            eps.nrows(),
            eps.ncols(),
            d.p(),
            d.n()
        )));
    }
    Ok(())
}

/// `max_i ||S_{n,i}||_inf` where `S_{n,i,j} = (2/n) sum_t Z_{t-1,j} eps_{t,i} / u0_{i,j}`.
pub fn ideal_score_max(d: &LagDesign, eps: &DMatrix<f64>, ideal: &LoadingsMatrix) -> Result<f64> {
    check_innovations(d, eps)?;
    let n = d.n() as f64;
    // p x pq matrix of sum_t eps_{t,i} Z_{t-1,j}
    let cross = eps * d.x();
    let v = ideal.values();
    let mut best: f64 = 0.0;
    for i in 0..d.p() {
        for j in 0..d.k() {
            best = best.max((2.0 / n * cross[(i, j)]).abs() / v[(i, j)]);
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn design(x: &[f64], y: &[f64]) -> LagDesign {
        let n = y.len();
        LagDesign::from_parts(
            DMatrix::from_column_slice(n, 1, x),
            DMatrix::from_column_slice(n, 1, y),
            1,
        )
        .unwrap()
    }

    #[test]
    fn initial_loading_arithmetic() {
        let d = design(&[1.0, 1.0], &[1.0, 1.0]);
        assert_eq!(initial_loadings(&d).unwrap().values()[(0, 0)], 1.0);
        let d = design(&[2.0, 2.0], &[1.0, -1.0]);
        assert_eq!(initial_loadings(&d).unwrap().values()[(0, 0)], 2.0);
        let flipped = design(&[-2.0, 2.0], &[-1.0, -1.0]);
        assert_eq!(initial_loadings(&flipped).unwrap(), initial_loadings(&d).unwrap());
    }

    #[test]
    fn residual_loadings_match_initial_on_responses() {
        let d = design(&[0.3, -1.0, 2.0], &[1.0, 0.5, -0.2]);
        let r = residual_loadings(&d, &d.responses().transpose()).unwrap();
        assert_eq!(r.values(), initial_loadings(&d).unwrap().values());
        assert_eq!(r.stage(), LoadingStage::Residual(1));
    }

    #[test]
    fn zero_residuals_are_degenerate() {
        let d = design(&[0.3, -1.0, 2.0], &[1.0, 0.5, -0.2]);
        let err = residual_loadings(&d, &DMatrix::zeros(1, 3)).unwrap_err();
        assert!(matches!(err, Error::DegenerateLoading { equation: 0, regressor: 0 }));
    }

    #[test]
    fn floor_replaces_zero_loadings() {
        let sq = SquaredRegressors::new(&DMatrix::from_column_slice(2, 2, &[1.0, 1.0, 0.0, 0.0]));
        let w = DVector::from_vec(vec![1.0, 1.0]);
        assert_eq!(sq.loading_row(&w, false), Err(1));
        let row = sq.loading_row(&w, true).unwrap();
        assert_eq!(row, vec![1.0, 1e-12]);
    }

    #[test]
    fn block_length_arithmetic() {
        assert_eq!(block_length(32, 1.0), 2);
        assert_eq!(block_length(31, 1.0), 1);
        assert_eq!(block_length(243, 1.0), 3);
        assert_eq!(block_length(3, 1.0), 1);
        assert_eq!(block_length(1000, 0.5), 10);
    }

    #[test]
    fn singleton_blocks_reduce_to_unblocked() {
        let x = [0.5, -1.0, 2.0, 0.1];
        let eps = [0.2, 0.3, -0.1, 0.7];
        let d = design(&x, &[0.0; 4]);
        let e = DMatrix::from_row_slice(1, 4, &eps);
        let got = ideal_blocked_loadings(&d, &e, 1.0).unwrap().values()[(0, 0)];
        let expect = (x.iter().zip(&eps).map(|(a, b)| (a * b).powi(2)).sum::<f64>() / 4.0).sqrt();
        assert!((got - expect).abs() < 1e-15);
    }

    #[test]
    fn blocked_sums_drop_remainder() {
        // n = 33 -> m = 2, 16 blocks, index 32 dropped
        let x: Vec<f64> = (0..33).map(|t| 1.0 + t as f64 * 0.1).collect();
        let eps: Vec<f64> = (0..33).map(|t| if t % 3 == 0 { 1.0 } else { -0.5 }).collect();
        let d = design(&x, &[0.0; 33]);
        let e = DMatrix::from_row_slice(1, 33, &eps);
        let got = ideal_blocked_loadings(&d, &e, 1.0).unwrap().values()[(0, 0)];
        let mut acc = 0.0;
        for b in 0..16 {
            let s: f64 = (2 * b..2 * b + 2).map(|t| x[t] * eps[t]).sum();
            acc += s * s;
        }
        assert!((got - (acc / 33.0).sqrt()).abs() < 1e-15);
    }
}
