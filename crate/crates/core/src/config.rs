//! Flat `key = value` run configuration.
//!
//! Recognised keys: `c`, `gamma_override`, `K`, `q`, `tol`, `max_passes`,
//! `seed`, `estimator` (`lasso`, `post_lasso`, `sqrt_lasso`) and `intercept`
//! (`true`, `false`). Blank lines and lines starting with `#` are ignored.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::penalization::{Estimator, PenaltyConfig};
use crate::solvers::SolverOptions;

pub const CONFIG_KEYS: [&str; 9] = [
    "c",
    "gamma_override",
    "K",
    "q",
    "tol",
    "max_passes",
    "seed",
    "estimator",
    "intercept",
];

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub penalty: PenaltyConfig,
    pub solver: SolverOptions,
    pub q: usize,
    pub seed: u64,
    pub estimator: Estimator,
    pub intercept: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            penalty: PenaltyConfig::default(),
            solver: SolverOptions::default(),
            q: 1,
            seed: 0,
            estimator: Estimator::Lasso,
            intercept: false,
        }
    }
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("cannot parse {key} = {value:?}")))
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", no + 1)))?;
            cfg.set(key.trim(), value.trim())
                .map_err(|e| Error::Config(format!("line {}: {e}", no + 1)))?;
        }
        Ok(cfg)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "c" => self.penalty.c = parse_value(key, value)?,
            "gamma_override" => {
                self.penalty.gamma_override = match value {
                    "" | "none" => None,
                    v => Some(parse_value(key, v)?),
                }
            }
            "K" => self.penalty.k_updates = parse_value(key, value)?,
            "q" => self.q = parse_value(key, value)?,
            "tol" => self.solver.tol = parse_value(key, value)?,
            "max_passes" => self.solver.max_passes = parse_value(key, value)?,
            "seed" => self.seed = parse_value(key, value)?,
            "estimator" => self.estimator = value.parse()?,
            "intercept" => self.intercept = parse_value(key, value)?,
            other => {
                return Err(Error::Config(format!(
                    "unknown key {other:?} (expected one of {})",
                    CONFIG_KEYS.join(", ")
                )))
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.penalty.validate()?;
        if self.q == 0 {
            return Err(Error::Config("q must be at least 1".into()));
        }
        if !(self.solver.tol > 0.0) || self.solver.max_passes == 0 {
            return Err(Error::Config("tol must be positive and max_passes at least 1".into()));
        }
        Ok(())
    }

    /// Every key with its resolved value, in [`CONFIG_KEYS`] order.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        vec![
            ("c", self.penalty.c.to_string()),
            (
                "gamma_override",
                self.penalty
                    .gamma_override
                    .map_or_else(|| "none".to_string(), |g| g.to_string()),
            ),
            ("K", self.penalty.k_updates.to_string()),
            ("q", self.q.to_string()),
            ("tol", self.solver.tol.to_string()),
            ("max_passes", self.solver.max_passes.to_string()),
            ("seed", self.seed.to_string()),
            ("estimator", self.estimator.to_string()),
            ("intercept", self.intercept.to_string()),
        ]
    }

    /// The resolved configuration in the file format, so it can be read back.
    pub fn to_text(&self) -> String {
        self.entries()
            .into_iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }
}
