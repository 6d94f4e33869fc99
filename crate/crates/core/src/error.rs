use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("probability {0} outside the open interval (0, 1)")]
    Domain(f64),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("degenerate penalty loading at equation {equation}, regressor {regressor}")]
    DegenerateLoading { equation: usize, regressor: usize },

    #[error("rank-deficient Gram submatrix on support {support:?}")]
    RankDeficient { support: Vec<usize> },

    #[error("sqrt-lasso residual vanished at pass {pass}, coordinate {coordinate}")]
    SqrtLassoDegenerate { pass: usize, coordinate: usize },

    #[error("iteration did not converge after {iterations} iterations")]
    NonConvergence { iterations: usize },

    #[error("process is not stationary: companion spectral radius {radius}")]
    Explosive { radius: f64 },

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("equation {equation}, stage {stage}: {source}")]
    Estimation {
        equation: usize,
        stage: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("csv error at row {row}, column {column}: {message}")]
    Csv {
        row: usize,
        column: usize,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{failed} of {total} tasks failed (limit 5%)")]
    TooManyFailures { failed: usize, total: usize },
}

impl Error {
    pub(crate) fn at(self, equation: usize, stage: usize) -> Error {
        Error::Estimation {
            equation,
            stage,
            source: Box::new(self),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Error {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by bad user input rather than a failed computation.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Dimension(_)
                | Error::Shape(_)
                | Error::Argument(_)
                | Error::Domain(_)
                | Error::Config(_)
                | Error::Csv { .. }
                | Error::Io { .. }
                | Error::Explosive { .. }
        )
    }
}
