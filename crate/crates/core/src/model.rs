//! VAR data model: observation panels, lagged regression designs, companion
//! matrices and coefficient estimates.
//!
//! Panels are stored oldest-first. For a lag order `q` the first `q` rows are
//! initial conditions and the remaining `n = T - q` rows are responses, so
//! row `t` of the design carries `Z_{t-1} = (Y_{t-1}', ..., Y_{t-q}')'` with
//! the newest lag block first.

use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector, DVectorView};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::error::{Error, Result};
use crate::Estimator;

/// A `T x p` matrix of observations, one row per time point, oldest first.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesPanel {
    data: DMatrix<f64>,
    names: Vec<String>,
    dates: Option<Vec<String>>,
}

impl TimeSeriesPanel {
    pub fn new(data: DMatrix<f64>) -> Result<Self> {
        let names = (1..=data.ncols()).map(|i| format!("y{i}")).collect();
        Self::with_names(data, names)
    }

    pub fn with_names(data: DMatrix<f64>, names: Vec<String>) -> Result<Self> {
        if data.nrows() == 0 || data.ncols() == 0 {
            return Err(Error::Dimension("panel must be non-empty".into()));
        }
        if names.len() != data.ncols() {
            return Err(Error::Shape(format!(
                "{} series names for {} columns",
                names.len(),
                data.ncols()
            )));
        }
        for t in 0..data.nrows() {
            for i in 0..data.ncols() {
                if !data[(t, i)].is_finite() {
                    return Err(Error::Argument(format!(
                        "non-finite observation at row {t}, series {i}"
                    )));
                }
            }
        }
        Ok(Self {
            data,
            names,
            dates: None,
        })
    }

    /// Builds a panel from `rows` of equal length `p`.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let p = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != p) {
            return Err(Error::Shape("ragged panel rows".into()));
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        Self::new(DMatrix::from_row_slice(rows.len(), p, &flat))
    }

    pub fn with_dates(mut self, dates: Vec<String>) -> Result<Self> {
        if dates.len() != self.data.nrows() {
            return Err(Error::Shape(format!(
                "{} dates for {} observations",
                dates.len(),
                self.data.nrows()
            )));
        }
        self.dates = Some(dates);
        Ok(self)
    }

    pub fn n_obs(&self) -> usize {
        self.data.nrows()
    }

    pub fn n_series(&self) -> usize {
        self.data.ncols()
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn dates(&self) -> Option<&[String]> {
        self.dates.as_deref()
    }

    /// Rows `start..end` as a new panel.
    pub fn slice_rows(&self, start: usize, end: usize) -> Result<Self> {
        if start >= end || end > self.n_obs() {
            return Err(Error::Dimension(format!(
                "row range {start}..{end} invalid for {} observations",
                self.n_obs()
            )));
        }
        Ok(Self {
            data: self.data.rows(start, end - start).into_owned(),
            names: self.names.clone(),
            dates: self.dates.as_ref().map(|d| d[start..end].to_vec()),
        })
    }

    /// Per-series sample variance with the `T - 1` divisor.
    pub fn sample_variances(&self) -> DVector<f64> {
        let t = self.n_obs() as f64;
        DVector::from_iterator(
            self.n_series(),
            self.data.column_iter().map(|col| {
                let mean = col.sum() / t;
                col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (t - 1.0)
            }),
        )
    }
}

/// Regressor matrix and responses shared by all `p` equations of a VAR(q).
#[derive(Debug, Clone, PartialEq)]
pub struct LagDesign {
    x: DMatrix<f64>,
    y: DMatrix<f64>,
    p: usize,
    q: usize,
}

impl LagDesign {
    /// Assembles a design from raw parts; `x` is `n x pq`, `y` is `n x p`.
    pub fn from_parts(x: DMatrix<f64>, y: DMatrix<f64>, q: usize) -> Result<Self> {
        let p = y.ncols();
        if q == 0 || x.ncols() != p * q || x.nrows() != y.nrows() || x.nrows() == 0 {
            return Err(Error::Shape(format!(
                "regressors {}x{} and responses {}x{} inconsistent with q={q}",
                x.nrows(),
                x.ncols(),
                y.nrows(),
                y.ncols()
            )));
        }
        Ok(Self { x, y, p, q })
    }

    /// Effective sample size.
    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn q(&self) -> usize {
        self.q
    }

    /// Number of regressors, `p * q`.
    pub fn k(&self) -> usize {
        self.x.ncols()
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn responses(&self) -> &DMatrix<f64> {
        &self.y
    }

    pub fn response(&self, i: usize) -> DVectorView<'_, f64> {
        self.y.column(i)
    }

    /// `n x p` residual matrix `y_i - X beta_i` for a `p x pq` coefficient matrix.
    pub fn residuals(&self, beta: &DMatrix<f64>) -> DMatrix<f64> {
        &self.y - &self.x * beta.transpose()
    }
}

pub fn build_lag_design(panel: &TimeSeriesPanel, q: usize) -> Result<LagDesign> {
    if q == 0 {
        return Err(Error::Dimension("lag order must be at least 1".into()));
    }
    let big_t = panel.n_obs();
    if big_t <= q {
        return Err(Error::Dimension(format!(
            "{big_t} observations cannot support {q} lags"
        )));
    }
    let p = panel.n_series();
    let n = big_t - q;
    let data = panel.data();
    let x = DMatrix::from_fn(n, p * q, |t, col| {
        let (lag, series) = (col / p, col % p);
        data[(t + q - 1 - lag, series)]
    });
    let y = data.rows(q, n).into_owned();
    Ok(LagDesign { x, y, p, q })
}

/// A design with zero-mean columns and the sample means that were removed.
#[derive(Debug, Clone, PartialEq)]
pub struct DemeanedDesign {
    pub design: LagDesign,
    pub y_means: DVector<f64>,
    pub z_means: DVector<f64>,
}

fn center_columns(m: &DMatrix<f64>) -> (DMatrix<f64>, DVector<f64>) {
    let n = m.nrows() as f64;
    let means = DVector::from_iterator(m.ncols(), m.column_iter().map(|c| c.sum() / n));
    let mut centered = m.clone();
    for (j, mut col) in centered.column_iter_mut().enumerate() {
        col.add_scalar_mut(-means[j]);
    }
    (centered, means)
}

pub fn demean_design(d: &LagDesign) -> Result<DemeanedDesign> {
    if d.n() < 2 {
        return Err(Error::Dimension(
            "demeaning needs at least two observations".into(),
        ));
    }
    let (x, z_means) = center_columns(&d.x);
    let (y, y_means) = center_columns(&d.y);
    Ok(DemeanedDesign {
        design: LagDesign { x, y, p: d.p, q: d.q },
        y_means,
        z_means,
    })
}

/// The `pq x pq` companion matrix of a VAR(q).
#[derive(Debug, Clone, PartialEq)]
pub struct CompanionMatrix {
    m: DMatrix<f64>,
    p: usize,
}

impl CompanionMatrix {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn lag_order(&self) -> usize {
        self.m.nrows() / self.p
    }

    /// The coefficient blocks `Theta_1, ..., Theta_q` from the top block-row.
    pub fn blocks(&self) -> Vec<DMatrix<f64>> {
        (0..self.lag_order())
            .map(|j| self.m.view((0, j * self.p), (self.p, self.p)).into_owned())
            .collect()
    }

    /// The top block-row, `p x pq`, whose row `i` is `beta_i'`.
    pub fn top_rows(&self) -> DMatrix<f64> {
        self.m.rows(0, self.p).into_owned()
    }

    pub fn spectral_radius(&self) -> Result<f64> {
        spectral_radius(&self.m)
    }
}

pub fn companion_matrix(theta_blocks: &[DMatrix<f64>]) -> Result<CompanionMatrix> {
    let first = theta_blocks
        .first()
        .ok_or_else(|| Error::Shape("at least one coefficient block required".into()))?;
    let p = first.nrows();
    if p == 0 {
        return Err(Error::Shape("empty coefficient block".into()));
    }
    for (j, b) in theta_blocks.iter().enumerate() {
        if b.nrows() != p || b.ncols() != p {
            return Err(Error::Shape(format!(
                "block {j} is {}x{}, expected {p}x{p}",
                b.nrows(),
                b.ncols()
            )));
        }
    }
    let q = theta_blocks.len();
    let mut m = DMatrix::zeros(p * q, p * q);
    for (j, b) in theta_blocks.iter().enumerate() {
        m.view_mut((0, j * p), (p, p)).copy_from(b);
    }
    for k in 1..q {
        for i in 0..p {
            m[(k * p + i, (k - 1) * p + i)] = 1.0;
        }
    }
    Ok(CompanionMatrix { m, p })
}

/// Dimension at or below which the spectral radius comes from a full Schur
/// decomposition; larger matrices use subspace iteration.
pub const DENSE_EIGEN_LIMIT: usize = 256;

pub fn spectral_radius(m: &DMatrix<f64>) -> Result<f64> {
    check_square(m)?;
    if m.nrows() <= DENSE_EIGEN_LIMIT {
        spectral_radius_dense(m)
    } else {
        spectral_radius_iterative(m, 0x5eed)
    }
}

fn check_square(m: &DMatrix<f64>) -> Result<()> {
    if m.nrows() != m.ncols() || m.nrows() == 0 {
        return Err(Error::Shape(format!(
            "spectral radius needs a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::Argument("matrix has non-finite entries".into()));
    }
    Ok(())
}

pub fn spectral_radius_dense(m: &DMatrix<f64>) -> Result<f64> {
    check_square(m)?;
    const MAX_ITER: usize = 100_000;
    let schur = m
        .clone()
        .try_schur(f64::EPSILON, MAX_ITER)
        .ok_or(Error::NonConvergence {
            iterations: MAX_ITER,
        })?;
    Ok(schur
        .complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max))
}

/// Block subspace iteration with Rayleigh-Ritz extraction. When the Ritz
/// estimate does not settle (e.g. more equal-modulus eigenvalues than basis
/// vectors) the block size doubles, ending in a dense solve at full size.
pub fn spectral_radius_iterative(m: &DMatrix<f64>, seed: u64) -> Result<f64> {
    check_square(m)?;
    const MAX_ITER: usize = 1_000;
    let dim = m.nrows();
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut block = dim.min(8);
    while block < dim {
        let start = DMatrix::from_fn(dim, block, |_, _| rng.random::<f64>() - 0.5);
        let mut basis = start.qr().q();
        let mut previous = f64::NAN;
        let mut settled = 0;
        for _ in 0..MAX_ITER {
            let image = m * &basis;
            if image.norm() == 0.0 {
                return Ok(0.0);
            }
            let ritz = basis.transpose() * &image;
            let estimate = spectral_radius_dense(&ritz)?;
            if (estimate - previous).abs() <= 1e-13 * estimate.max(f64::MIN_POSITIVE) {
                settled += 1;
                if settled >= 5 {
                    return Ok(estimate);
                }
            } else {
                settled = 0;
            }
            previous = estimate;
            basis = image.qr().q();
        }
        block *= 2;
    }
    spectral_radius_dense(m)
}

/// Bookkeeping attached to an estimate produced by one of the estimators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitMeta {
    pub estimator: Estimator,
    pub lambda: f64,
    pub k_updates: usize,
}

/// A `p x pq` coefficient matrix with its supports and optional intercepts.
#[derive(Debug, Clone, PartialEq)]
pub struct VarEstimate {
    beta: DMatrix<f64>,
    intercepts: Option<DVector<f64>>,
    supports: Vec<BTreeSet<usize>>,
    meta: Option<FitMeta>,
}

impl VarEstimate {
    pub fn new(
        beta: DMatrix<f64>,
        intercepts: Option<DVector<f64>>,
        meta: Option<FitMeta>,
    ) -> Result<Self> {
        if let Some(mu) = &intercepts {
            if mu.len() != beta.nrows() {
                return Err(Error::Shape(format!(
                    "{} intercepts for {} equations",
                    mu.len(),
                    beta.nrows()
                )));
            }
        }
        let supports = beta
            .row_iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .filter(|(_, v)| **v != 0.0)
                    .map(|(j, _)| j)
                    .collect()
            })
            .collect();
        Ok(Self {
            beta,
            intercepts,
            supports,
            meta,
        })
    }

    /// The true coefficients of a simulated process.
    pub fn truth(companion: &CompanionMatrix) -> Self {
        Self::new(companion.top_rows(), None, None).expect("shapes are consistent")
    }

    pub fn beta(&self) -> &DMatrix<f64> {
        &self.beta
    }

    pub fn intercepts(&self) -> Option<&DVector<f64>> {
        self.intercepts.as_ref()
    }

    pub fn supports(&self) -> &[BTreeSet<usize>] {
        &self.supports
    }

    pub fn meta(&self) -> Option<&FitMeta> {
        self.meta.as_ref()
    }

    pub fn p(&self) -> usize {
        self.beta.nrows()
    }

    /// Largest support size across equations.
    pub fn sparsity(&self) -> usize {
        self.supports.iter().map(BTreeSet::len).max().unwrap_or(0)
    }

    /// Coefficient blocks `Theta_1, ..., Theta_q`.
    pub fn blocks(&self) -> Vec<DMatrix<f64>> {
        let p = self.p();
        (0..self.beta.ncols() / p)
            .map(|j| self.beta.columns(j * p, p).into_owned())
            .collect()
    }

    /// One-step-ahead forecast from the `q` most recent rows of `history`
    /// (oldest first): `mu + sum_j Theta_j Y_{t+1-j}`.
    pub fn forecast_next(&self, history: &DMatrix<f64>) -> Result<DVector<f64>> {
        let p = self.p();
        let q = self.beta.ncols() / p;
        if history.ncols() != p || history.nrows() < q {
            return Err(Error::Shape(format!(
                "history {}x{} cannot feed a VAR({q}) in {p} series",
                history.nrows(),
                history.ncols()
            )));
        }
        let last = history.nrows() - 1;
        let z = DVector::from_fn(p * q, |col, _| history[(last - col / p, col % p)]);
        let mut y = &self.beta * z;
        if let Some(mu) = &self.intercepts {
            y += mu;
        }
        Ok(y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn panel(rows: &[&[f64]]) -> TimeSeriesPanel {
        TimeSeriesPanel::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn lag_design_shifts_by_one() {
        let d = build_lag_design(&panel(&[&[1., 10.], &[2., 20.], &[3., 30.]]), 1).unwrap();
        assert_eq!(d.x(), &DMatrix::from_row_slice(2, 2, &[1., 10., 2., 20.]));
        assert_eq!(d.response(0).as_slice(), &[2., 3.]);
        assert_eq!(d.response(1).as_slice(), &[20., 30.]);
    }

    #[test]
    fn lag_design_newest_lag_first() {
        let d = build_lag_design(&panel(&[&[1.], &[2.], &[3.], &[4.]]), 2).unwrap();
        assert_eq!(d.x(), &DMatrix::from_row_slice(2, 2, &[2., 1., 3., 2.]));
        assert_eq!(d.response(0).as_slice(), &[3., 4.]);
    }

    #[test]
    fn lag_design_rejects_short_panel() {
        let p = panel(&[&[1., 2.], &[3., 4.]]);
        assert!(matches!(build_lag_design(&p, 2), Err(Error::Dimension(_))));
        assert!(matches!(build_lag_design(&p, 0), Err(Error::Dimension(_))));
    }

    #[test]
    fn demean_two_points() {
        let x = DMatrix::from_column_slice(2, 1, &[2., 4.]);
        let y = DMatrix::from_column_slice(2, 1, &[1., 3.]);
        let dm = demean_design(&LagDesign::from_parts(x, y, 1).unwrap()).unwrap();
        assert_eq!(dm.design.response(0).as_slice(), &[-1., 1.]);
        assert_eq!(dm.design.x().as_slice(), &[-1., 1.]);
        assert_eq!(dm.y_means[0], 2.0);
        assert_eq!(dm.z_means[0], 3.0);
    }

    #[test]
    fn demean_centered_is_unchanged() {
        let x = DMatrix::from_column_slice(2, 1, &[-1., 1.]);
        let y = DMatrix::from_column_slice(2, 1, &[0.5, -0.5]);
        let d = LagDesign::from_parts(x, y, 1).unwrap();
        let dm = demean_design(&d).unwrap();
        assert_eq!(dm.design, d);
        assert_eq!(dm.y_means[0], 0.0);
        assert_eq!(dm.z_means[0], 0.0);
    }

    #[test]
    fn companion_scalar_q2() {
        let c = companion_matrix(&[DMatrix::from_element(1, 1, 0.3), DMatrix::from_element(1, 1, -0.2)])
            .unwrap();
        assert_eq!(c.matrix(), &DMatrix::from_row_slice(2, 2, &[0.3, -0.2, 1.0, 0.0]));
    }

    #[test]
    fn companion_q1_is_block() {
        let theta = DMatrix::identity(2, 2) * 0.5;
        let c = companion_matrix(std::slice::from_ref(&theta)).unwrap();
        assert_eq!(c.matrix(), &theta);
    }

    #[test]
    fn companion_rejects_mismatched_blocks() {
        let r = companion_matrix(&[DMatrix::zeros(2, 2), DMatrix::zeros(3, 3)]);
        assert!(matches!(r, Err(Error::Shape(_))));
        assert!(companion_matrix(&[]).is_err());
    }

    #[test]
    fn spectral_radius_basics() {
        let m = DMatrix::identity(16, 16) * 0.5;
        assert!((spectral_radius(&m).unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(spectral_radius(&DMatrix::zeros(5, 5)).unwrap(), 0.0);
        assert!(spectral_radius(&DMatrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn spectral_radius_rotation() {
        // eigenvalues 0.8 e^{+-i pi/3}: modulus 0.8 with no real dominant eigenvalue
        let (c, s) = (0.8 * (std::f64::consts::PI / 3.0).cos(), 0.8 * (std::f64::consts::PI / 3.0).sin());
        let m = DMatrix::from_row_slice(2, 2, &[c, -s, s, c]);
        assert!((spectral_radius_dense(&m).unwrap() - 0.8).abs() < 1e-12);
        assert!((spectral_radius_iterative(&m, 1).unwrap() - 0.8).abs() < 1e-10);
    }

    #[test]
    fn iterative_matches_dense_above_limit() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let dim = 300;
        let m = DMatrix::from_fn(dim, dim, |_, _| rng.random::<f64>() - 0.5) / (dim as f64).sqrt();
        let dense = spectral_radius_dense(&m).unwrap();
        let iter = spectral_radius_iterative(&m, 11).unwrap();
        assert!((dense - iter).abs() / dense < 1e-8, "{dense} vs {iter}");
    }

    #[test]
    fn estimate_supports_and_forecast() {
        let beta = DMatrix::from_row_slice(2, 4, &[0.5, 0.0, 0.1, 0.0, 0.0, 0.0, 0.0, -0.2]);
        let est = VarEstimate::new(beta, Some(DVector::from_vec(vec![1.0, 2.0])), None).unwrap();
        assert_eq!(est.supports()[0].iter().copied().collect::<Vec<_>>(), vec![0, 2]);
        assert_eq!(est.supports()[1].iter().copied().collect::<Vec<_>>(), vec![3]);
        assert_eq!(est.sparsity(), 2);
        // history rows: Y_{t-1} = (1, 1), Y_t = (2, 3)
        let hist = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 2.0, 3.0]);
        let f = est.forecast_next(&hist).unwrap();
        assert!((f[0] - (1.0 + 0.5 * 2.0 + 0.1 * 1.0)).abs() < 1e-15);
        assert!((f[1] - (2.0 - 0.2 * 1.0)).abs() < 1e-15);
    }

    #[test]
    fn panel_rejects_non_finite() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, f64::NAN, 0.0, 1.0]);
        assert!(TimeSeriesPanel::new(m).is_err());
    }
}
