//! Error metrics and sparse/restricted eigenvalue diagnostics.

use std::io::Write;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::seq::index::sample;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::model::{LagDesign, VarEstimate};

/// Largest dimension accepted by [`sparse_eigenvalue_bruteforce`].
pub const MAX_BRUTEFORCE_DIM: usize = 20;

/// `||delta||_{2,n} = sqrt((1/n) sum_t (Z_{t-1}' delta)^2)`.
pub fn prediction_norm(d: &LagDesign, delta: &DVector<f64>) -> Result<f64> {
    if delta.len() != d.k() {
        return Err(Error::Shape(format!("delta has length {}, expected {}", delta.len(), d.k())));
    }
    Ok(((d.x() * delta).norm_squared() / d.n() as f64).sqrt())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SupportCounts {
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    pub max_l1: f64,
    pub max_l2: f64,
    pub max_prediction: f64,
    /// One entry per equation.
    pub supports: Vec<SupportCounts>,
}

impl ErrorReport {
    pub fn total_support(&self) -> SupportCounts {
        self.supports.iter().fold(SupportCounts::default(), |a, s| SupportCounts {
            true_positives: a.true_positives + s.true_positives,
            false_positives: a.false_positives + s.false_positives,
            false_negatives: a.false_negatives + s.false_negatives,
        })
    }

    fn metrics(&self) -> [(&'static str, f64); 6] {
        let t = self.total_support();
        [
            ("max_l1", self.max_l1),
            ("max_l2", self.max_l2),
            ("max_prediction", self.max_prediction),
            ("true_positives", t.true_positives as f64),
            ("false_positives", t.false_positives as f64),
            ("false_negatives", t.false_negatives as f64),
        ]
    }
}

/// Row-wise errors of `est` against `truth`, maximized over equations.
pub fn error_report(est: &VarEstimate, truth: &VarEstimate, d: &LagDesign) -> Result<ErrorReport> {
    let (b, b0) = (est.beta(), truth.beta());
    if b.shape() != b0.shape() {
        return Err(Error::Shape(format!("estimate is {:?}, truth is {:?}", b.shape(), b0.shape())));
    }
    let diff = b - b0;
    let mut report = ErrorReport {
        max_l1: 0.0,
        max_l2: 0.0,
        max_prediction: 0.0,
        supports: Vec::with_capacity(b.nrows()),
    };
    for i in 0..b.nrows() {
        let row = diff.row(i).transpose();
        report.max_l1 = report.max_l1.max(row.lp_norm(1));
        report.max_l2 = report.max_l2.max(row.norm());
        report.max_prediction = report.max_prediction.max(prediction_norm(d, &row)?);
        let (s, s0) = (&est.supports()[i], &truth.supports()[i]);
        report.supports.push(SupportCounts {
            true_positives: s.intersection(s0).count(),
            false_positives: s.difference(s0).count(),
            false_negatives: s0.difference(s).count(),
        });
    }
    Ok(report)
}

/// Writes `estimator,metric,value` rows.
pub fn write_report_csv<W: Write>(mut w: W, reports: &[(&str, &ErrorReport)]) -> Result<()> {
    let mut out = String::from("estimator,metric,value\n");
    for (label, r) in reports {
        for (metric, v) in r.metrics() {
            out.push_str(&format!("{label},{metric},{v}\n"));
        }
    }
    w.write_all(out.as_bytes())
        .map_err(|e| Error::io("<report>", e))
}

fn check_symmetric(sigma: &DMatrix<f64>) -> Result<()> {
    if !sigma.is_square() {
        return Err(Error::Shape(format!("matrix is {}x{}", sigma.nrows(), sigma.ncols())));
    }
    if sigma.iter().any(|v| !v.is_finite()) {
        return Err(Error::Argument("matrix has non-finite entries".into()));
    }
    let tol = 1e-10 * sigma.amax().max(1.0);
    if (sigma - sigma.transpose()).amax() > tol {
        return Err(Error::Argument("matrix is not symmetric".into()));
    }
    Ok(())
}

fn top_eigenvalue(m: DMatrix<f64>) -> f64 {
    SymmetricEigen::new(m).eigenvalues.max()
}

/// `phi_max(m) = max over |S| <= floor(m) of the largest eigenvalue of
/// `sigma[S, S]`, by enumeration. Only subsets of size exactly
/// `min(floor(m), k)` are visited; eigenvalue interlacing covers the smaller
/// ones.
pub fn sparse_eigenvalue_bruteforce(sigma: &DMatrix<f64>, m: f64) -> Result<f64> {
    check_symmetric(sigma)?;
    let k = sigma.nrows();
    if k > MAX_BRUTEFORCE_DIM {
        return Err(Error::Argument(format!(
            "brute-force enumeration limited to k <= {MAX_BRUTEFORCE_DIM}, got {k}"
        )));
    }
    if !(m >= 1.0) {
        return Err(Error::Argument(format!("sparsity m must be >= 1, got {m}")));
    }
    let size = (m.floor() as usize).min(k);
    if size == k {
        return Ok(top_eigenvalue(sigma.clone()));
    }
    let mut idx: Vec<usize> = (0..size).collect();
    let mut best = f64::NEG_INFINITY;
    loop {
        let sub = DMatrix::from_fn(size, size, |a, b| sigma[(idx[a], idx[b])]);
        best = best.max(top_eigenvalue(sub));
        // next combination in lexicographic order
        let Some(pos) = (0..size).rev().find(|&i| idx[i] < k - size + i) else {
            break;
        };
        idx[pos] += 1;
        for i in pos + 1..size {
            idx[i] = idx[i - 1] + 1;
        }
    }
    Ok(best)
}

fn rayleigh(gram: &DMatrix<f64>, delta: &DVector<f64>) -> f64 {
    delta.dot(&(gram * delta)) / delta.norm_squared()
}

/// Sampled upper bound on the restricted eigenvalue
/// `min { delta' gram delta / ||delta||^2 : ||delta_{T^c}||_1 <= C ||delta_T||_1, |T| <= s }`.
///
/// Each sample draws a support size in `1..=s`, a support, a Gaussian
/// direction on it and a Gaussian direction off it. The off-support part is
/// scaled once to a uniform fraction of the cone budget and once to the
/// boundary. The returned minimum is an estimate, never a certified bound.
pub fn restricted_eigenvalue_estimate<R: Rng + ?Sized>(
    gram: &DMatrix<f64>,
    s: usize,
    c: f64,
    samples: usize,
    rng: &mut R,
) -> Result<f64> {
    check_symmetric(gram)?;
    let k = gram.nrows();
    if samples == 0 || s == 0 || k == 0 {
        return Err(Error::Argument("need samples >= 1, s >= 1 and a non-empty matrix".into()));
    }
    if !(c >= 0.0 && c.is_finite()) {
        return Err(Error::Argument(format!("cone constant must be finite and >= 0, got {c}")));
    }
    let s = s.min(k);
    let mut best = f64::INFINITY;
    for _ in 0..samples {
        let size = rng.random_range(1..=s);
        let support = sample(rng, k, size).into_vec();
        let mut on = DVector::zeros(k);
        for &j in &support {
            on[j] = StandardNormal.sample(rng);
        }
        let mut off = DVector::<f64>::zeros(k);
        if size < k {
            for j in 0..k {
                if !support.contains(&j) {
                    off[j] = StandardNormal.sample(rng);
                }
            }
        }
        let budget = c * on.lp_norm(1);
        let off_l1 = off.lp_norm(1);
        best = best.min(rayleigh(gram, &on));
        if off_l1 > 0.0 && budget > 0.0 {
            let unit = off / off_l1;
            let frac: f64 = rng.random();
            best = best.min(rayleigh(gram, &(&on + &unit * (frac * budget))));
            best = best.min(rayleigh(gram, &(&on + &unit * budget)));
        }
    }
    Ok(best)
}
