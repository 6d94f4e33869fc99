//! VAR simulation and the experimental designs A to G.
//!
//! All samplers draw from an explicit [`ChaCha20Rng`] stream. A given seed
//! produces the same panel on every platform and for every thread count.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::model::{companion_matrix, CompanionMatrix, TimeSeriesPanel, VarEstimate};

/// Innovation scale shared by every design.
pub const SIGMA: f64 = 0.1;

/// Minimum number of discarded pre-sample steps.
pub const MIN_BURN_IN: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DesignTag {
    A,
    B,
    C,
    D,
    E,
    F,
    G,
}

impl DesignTag {
    pub const ALL: [DesignTag; 7] = [
        DesignTag::A,
        DesignTag::B,
        DesignTag::C,
        DesignTag::D,
        DesignTag::E,
        DesignTag::F,
        DesignTag::G,
    ];

    pub fn as_char(self) -> char {
        match self {
            DesignTag::A => 'A',
            DesignTag::B => 'B',
            DesignTag::C => 'C',
            DesignTag::D => 'D',
            DesignTag::E => 'E',
            DesignTag::F => 'F',
            DesignTag::G => 'G',
        }
    }
}

impl fmt::Display for DesignTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_char().encode_utf8(&mut [0; 4]))
    }
}

impl FromStr for DesignTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        DesignTag::ALL
            .into_iter()
            .find(|d| t.len() == 1 && t.eq_ignore_ascii_case(&d.as_char().to_string()))
            .ok_or_else(|| Error::Config(format!("unknown design {s:?} (expected A-G)")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum InnovationLaw {
    /// `N(0, cov)`.
    Gaussian { cov: DMatrix<f64> },
    /// `factor * t_dof(0, scale)`.
    StudentT {
        scale: DMatrix<f64>,
        dof: f64,
        factor: f64,
    },
    /// `eps_t = diag(sigma_i(eta_{t-1})) eta_t` with
    /// `sigma_i = sigma * exp(-1.5|eta_{t-1,i}| + 1.5|eta_{t-1,i+1}|)`, indices
    /// wrapping at `p`. With `censor = Some(b)` the exponential factor is
    /// clamped to `[1/b, b]`.
    HeteroF { sigma: f64, censor: Option<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DesignSpec {
    pub tag: DesignTag,
    pub p: usize,
    pub n: usize,
    pub q: usize,
    /// Coefficient blocks `Theta_1 .. Theta_q`.
    pub theta: Vec<DMatrix<f64>>,
    pub law: InnovationLaw,
    /// Maximum number of nonzero true coefficients in any equation.
    pub s: usize,
}

impl DesignSpec {
    pub fn companion(&self) -> Result<CompanionMatrix> {
        companion_matrix(&self.theta)
    }

    pub fn truth(&self) -> Result<VarEstimate> {
        Ok(VarEstimate::truth(&self.companion()?))
    }

    /// Clamps Design F's volatility factor to `[1/bound, bound]`.
    pub fn with_censor(mut self, bound: f64) -> Result<Self> {
        if !(bound >= 1.0 && bound.is_finite()) {
            return Err(Error::Argument(format!("censor bound must be finite and >= 1, got {bound}")));
        }
        match &mut self.law {
            InnovationLaw::HeteroF { censor, .. } => *censor = Some(bound),
            _ => return Err(Error::Argument(format!("design {} has no volatility to censor", self.tag))),
        }
        Ok(self)
    }
}

fn equicorrelated(p: usize, rho: f64) -> DMatrix<f64> {
    DMatrix::from_fn(p, p, |i, j| if i == j { 1.0 } else { rho })
}

pub fn make_design(tag: DesignTag, p: usize, n: usize) -> Result<DesignSpec> {
    if p < 2 {
        return Err(Error::Argument(format!("designs need p >= 2, got {p}")));
    }
    if n < 1 {
        return Err(Error::Argument("effective sample size must be positive".into()));
    }
    let s2 = SIGMA * SIGMA;
    let half = DMatrix::identity(p, p) * 0.5;
    let diag_gauss = InnovationLaw::Gaussian {
        cov: DMatrix::identity(p, p) * s2,
    };
    let equi_gauss = InnovationLaw::Gaussian {
        cov: equicorrelated(p, 0.9) * s2,
    };
    let (theta, law, s) = match tag {
        DesignTag::A => (vec![half], diag_gauss, 1),
        DesignTag::B => {
            let t = DMatrix::from_fn(p, p, |i, j| {
                let d = i.abs_diff(j) as i32;
                let sign = if d % 2 == 0 { 1.0 } else { -1.0 };
                sign * 0.4f64.powi(1 + d)
            });
            (vec![t], diag_gauss, p)
        }
        DesignTag::C => {
            if !p.is_multiple_of(4) {
                return Err(Error::Argument(format!("design C needs p divisible by 4, got {p}")));
            }
            let block = |v: f64| DMatrix::from_fn(p, p, |i, j| if i / 4 == j / 4 { v } else { 0.0 });
            let zero = DMatrix::zeros(p, p);
            (vec![block(0.15), zero.clone(), zero, block(-0.1)], diag_gauss, 8)
        }
        DesignTag::D => (vec![half], equi_gauss, 1),
        DesignTag::E => (
            vec![half],
            InnovationLaw::StudentT {
                scale: equicorrelated(p, 0.9),
                dof: 5.0,
                factor: SIGMA / (5.0f64 / 3.0).sqrt(),
            },
            1,
        ),
        DesignTag::F => (
            vec![half],
            InnovationLaw::HeteroF {
                sigma: SIGMA,
                censor: None,
            },
            1,
        ),
        DesignTag::G => (vec![DMatrix::identity(p, p) * (1.0 - 5.0 / n as f64)], equi_gauss, 1),
    };
    Ok(DesignSpec {
        tag,
        p,
        n,
        q: theta.len(),
        theta,
        law,
        s,
    })
}

fn standard_normal_vec<R: Rng + ?Sized>(p: usize, rng: &mut R) -> DVector<f64> {
    DVector::from_fn(p, |_, _| StandardNormal.sample(rng))
}

/// Gaussian sampler through the lower Cholesky factor of the covariance.
#[derive(Debug, Clone)]
pub struct MultivariateNormal {
    chol: DMatrix<f64>,
}

impl MultivariateNormal {
    pub fn new(cov: &DMatrix<f64>) -> Result<Self> {
        if !cov.is_square() {
            return Err(Error::Shape(format!("covariance is {}x{}", cov.nrows(), cov.ncols())));
        }
        let chol = cov.clone().cholesky().ok_or(Error::NotPositiveDefinite)?;
        Ok(Self { chol: chol.l() })
    }

    pub fn dim(&self) -> usize {
        self.chol.nrows()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> DVector<f64> {
        &self.chol * standard_normal_vec(self.dim(), rng)
    }
}

/// Multivariate Student-t: a Gaussian draw with the scale structure divided
/// by `sqrt(chi2_dof / dof)`.
#[derive(Debug, Clone)]
pub struct MultivariateT {
    normal: MultivariateNormal,
    chi2: ChiSquared<f64>,
    dof: f64,
}

impl MultivariateT {
    pub fn new(scale: &DMatrix<f64>, dof: f64) -> Result<Self> {
        let chi2 = ChiSquared::new(dof).map_err(|e| Error::Argument(format!("degrees of freedom {dof}: {e}")))?;
        Ok(Self {
            normal: MultivariateNormal::new(scale)?,
            chi2,
            dof,
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> DVector<f64> {
        let z = self.normal.sample(rng);
        let w: f64 = self.chi2.sample(rng);
        z / (w / self.dof).sqrt()
    }
}

/// One multivariate t draw. Factorizes `scale` on every call; build a
/// [`MultivariateT`] for repeated sampling.
pub fn sample_mvt<R: Rng + ?Sized>(scale: &DMatrix<f64>, dof: f64, rng: &mut R) -> Result<DVector<f64>> {
    Ok(MultivariateT::new(scale, dof)?.sample(rng))
}

/// Conditional standard deviations of Design F given `eta_prev`.
pub fn hetero_f_scales(eta_prev: &DVector<f64>, sigma: f64, censor: Option<f64>) -> DVector<f64> {
    let p = eta_prev.len();
    DVector::from_fn(p, |i, _| {
        let mut f = (-1.5 * eta_prev[i].abs() + 1.5 * eta_prev[(i + 1) % p].abs()).exp();
        if let Some(b) = censor {
            f = f.clamp(1.0 / b, b);
        }
        sigma * f
    })
}

/// Draws `eta_t ~ N(0, I)` and returns `(eps_t, eta_t)`.
pub fn sample_hetero_f<R: Rng + ?Sized>(
    eta_prev: &DVector<f64>,
    sigma: f64,
    censor: Option<f64>,
    rng: &mut R,
) -> (DVector<f64>, DVector<f64>) {
    let eta = standard_normal_vec(eta_prev.len(), rng);
    let eps = hetero_f_scales(eta_prev, sigma, censor).component_mul(&eta);
    (eps, eta)
}

/// Draws innovations for one design. Design F keeps the previous `eta`
/// between calls; the other laws are i.i.d.
#[derive(Debug, Clone)]
pub struct InnovationSampler {
    kind: SamplerKind,
    eta: DVector<f64>,
}

#[derive(Debug, Clone)]
enum SamplerKind {
    Normal(MultivariateNormal),
    T(MultivariateT, f64),
    Hetero(f64, Option<f64>),
}

impl InnovationSampler {
    pub fn new(law: &InnovationLaw, p: usize) -> Result<Self> {
        let kind = match law {
            InnovationLaw::Gaussian { cov } => SamplerKind::Normal(MultivariateNormal::new(cov)?),
            InnovationLaw::StudentT { scale, dof, factor } => {
                SamplerKind::T(MultivariateT::new(scale, *dof)?, *factor)
            }
            InnovationLaw::HeteroF { sigma, censor } => SamplerKind::Hetero(*sigma, *censor),
        };
        let dim = match &kind {
            SamplerKind::Normal(m) => m.dim(),
            SamplerKind::T(t, _) => t.normal.dim(),
            SamplerKind::Hetero(..) => p,
        };
        if dim != p {
            return Err(Error::Shape(format!("innovation law has dimension {dim}, expected {p}")));
        }
        Ok(Self {
            kind,
            eta: DVector::zeros(p),
        })
    }

    pub fn draw<R: Rng + ?Sized>(&mut self, rng: &mut R) -> DVector<f64> {
        match &self.kind {
            SamplerKind::Normal(m) => m.sample(rng),
            SamplerKind::T(t, factor) => t.sample(rng) * *factor,
            SamplerKind::Hetero(sigma, censor) => {
                let (eps, eta) = sample_hetero_f(&self.eta, *sigma, *censor, rng);
                self.eta = eta;
                eps
            }
        }
    }
}

/// A simulated sample ready for estimation.
#[derive(Debug, Clone, PartialEq)]
pub struct Simulation {
    /// `n + q` observations, oldest first.
    pub panel: TimeSeriesPanel,
    /// `p x n` innovations; column `t` drives panel row `t + q`.
    pub innovations: DMatrix<f64>,
    pub truth: VarEstimate,
}

/// `max(500, ceil(10 / (1 - rho)))`.
pub fn default_burn_in(rho: f64) -> usize {
    let scaled = (10.0 / (1.0 - rho)).ceil();
    if scaled.is_finite() && scaled > MIN_BURN_IN as f64 {
        scaled as usize
    } else {
        MIN_BURN_IN
    }
}

pub fn simulate_var(spec: &DesignSpec, seed: u64, burn_in: Option<usize>) -> Result<Simulation> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    simulate_var_with_rng(spec, &mut rng, burn_in)
}

/// Runs the recursion from a zero state for `burn_in + n + q` steps and keeps
/// the last `n + q`. `burn_in = None` uses [`default_burn_in`].
pub fn simulate_var_with_rng<R: Rng + ?Sized>(
    spec: &DesignSpec,
    rng: &mut R,
    burn_in: Option<usize>,
) -> Result<Simulation> {
    let companion = spec.companion()?;
    let rho = companion.spectral_radius()?;
    if rho >= 1.0 {
        return Err(Error::Explosive { radius: rho });
    }
    let (p, q, n) = (spec.p, spec.q, spec.n);
    let burn = burn_in.unwrap_or_else(|| default_burn_in(rho));
    let total = burn + n + q;
    let mut sampler = InnovationSampler::new(&spec.law, p)?;
    // lags[j] = Y_{t-1-j}
    let mut lags: Vec<DVector<f64>> = vec![DVector::zeros(p); q];
    let mut data = DMatrix::zeros(n + q, p);
    let mut innovations = DMatrix::zeros(p, n);
    for step in 0..total {
        let eps = sampler.draw(rng);
        let mut y = eps.clone();
        for (theta, lag) in spec.theta.iter().zip(&lags) {
            y.gemv(1.0, theta, lag, 1.0);
        }
        if step >= burn {
            let row = step - burn;
            data.row_mut(row).copy_from(&y.transpose());
            if row >= q {
                innovations.column_mut(row - q).copy_from(&eps);
            }
        }
        lags.rotate_right(1);
        lags[0] = y;
    }
    Ok(Simulation {
        panel: TimeSeriesPanel::new(data)?,
        innovations,
        truth: VarEstimate::truth(&companion),
    })
}
