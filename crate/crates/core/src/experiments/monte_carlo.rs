use std::fmt::Write as _;
use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;

use super::{check_failures, thread_pool};
use crate::diagnostics::error_report;
use crate::error::{Error, Result};
use crate::model::build_lag_design;
use crate::penalization::{fit_design, Estimator, PenaltyConfig};
use crate::simulation::{make_design, simulate_var_with_rng, DesignTag};
use crate::solvers::SolverOptions;

#[derive(Debug, Clone, PartialEq)]
pub struct McConfig {
    pub design: DesignTag,
    pub p: usize,
    pub n_list: Vec<usize>,
    pub reps: usize,
    /// The weighted Lasso is always run as the reference and is added in
    /// front when missing.
    pub estimators: Vec<Estimator>,
    pub master_seed: u64,
    pub penalty: PenaltyConfig,
    pub solver: SolverOptions,
    /// `None` uses the default burn-in of the simulator.
    pub burn_in: Option<usize>,
    /// Size of the worker pool; 0 picks the number of cores.
    pub workers: usize,
}

impl McConfig {
    pub fn new(design: DesignTag, p: usize, n_list: Vec<usize>, reps: usize, master_seed: u64) -> Self {
        Self {
            design,
            p,
            n_list,
            reps,
            estimators: Estimator::ALL.to_vec(),
            master_seed,
            penalty: PenaltyConfig::default(),
            solver: SolverOptions::default(),
            burn_in: None,
            workers: 0,
        }
    }

    fn resolved_estimators(&self) -> Vec<Estimator> {
        let mut out = vec![Estimator::Lasso];
        for &e in &self.estimators {
            if !out.contains(&e) {
                out.push(e);
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct McResult {
    pub design: DesignTag,
    pub p: usize,
    pub n: usize,
    pub estimator: Estimator,
    /// Replications that entered the averages.
    pub reps: usize,
    /// Replications dropped because some estimator failed on them.
    pub failed: usize,
    pub mean_max_l2: f64,
    /// `mean_max_l2` divided by the weighted Lasso's over the same replications.
    pub relative_to_lasso: f64,
    /// Max row-wise l2 error per kept replication, in replication order.
    pub errors: Vec<f64>,
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Stream for replication `rep` of cell `(design, p, n)`: a ChaCha20 key
/// derived from the master seed and the cell, with `rep` as the stream id.
pub fn replication_rng(master_seed: u64, design: DesignTag, p: usize, n: usize, rep: u64) -> ChaCha20Rng {
    let mut key = splitmix(master_seed);
    for v in [design.as_char() as u64, p as u64, n as u64] {
        key = splitmix(key ^ v);
    }
    let mut rng = ChaCha20Rng::seed_from_u64(key);
    rng.set_stream(rep);
    rng
}

fn replication(cfg: &McConfig, estimators: &[Estimator], n: usize, rep: usize) -> Result<Vec<f64>> {
    let spec = make_design(cfg.design, cfg.p, n)?;
    let mut rng = replication_rng(cfg.master_seed, cfg.design, cfg.p, n, rep as u64);
    let sim = simulate_var_with_rng(&spec, &mut rng, cfg.burn_in)?;
    let design = build_lag_design(&sim.panel, spec.q)?;
    estimators
        .iter()
        .map(|&e| {
            let fit = fit_design(&design, e, &cfg.penalty, &cfg.solver)?;
            Ok(error_report(&fit.estimate, &sim.truth, &design)?.max_l2)
        })
        .collect()
}

/// Simulates `reps` panels per sample size, fits every estimator on each
/// and aggregates the max row-wise l2 error. A replication in which any
/// estimator fails is dropped for all of them; more than 5% dropped in a
/// cell fails the run.
pub fn run_monte_carlo(cfg: &McConfig) -> Result<Vec<McResult>> {
    if cfg.reps == 0 || cfg.n_list.is_empty() {
        return Err(Error::Argument("need at least one replication and one sample size".into()));
    }
    cfg.penalty.validate()?;
    // fail fast on bad design parameters
    for &n in &cfg.n_list {
        make_design(cfg.design, cfg.p, n)?;
    }
    let estimators = cfg.resolved_estimators();
    let pool = thread_pool(cfg.workers)?;
    let mut results = Vec::new();
    for &n in &cfg.n_list {
        let outcomes: Vec<Result<Vec<f64>>> = pool.install(|| {
            (0..cfg.reps)
                .into_par_iter()
                .map(|rep| replication(cfg, &estimators, n, rep))
                .collect()
        });
        let mut kept: Vec<Vec<f64>> = Vec::with_capacity(cfg.reps);
        let mut failed = 0;
        for (rep, o) in outcomes.into_iter().enumerate() {
            match o {
                Ok(errs) => kept.push(errs),
                Err(e) if e.is_validation() => return Err(e),
                Err(e) => {
                    failed += 1;
                    eprintln!("mc: design {} p={} n={n} replication {rep} dropped: {e}", cfg.design, cfg.p);
                }
            }
        }
        check_failures(failed, cfg.reps)?;
        let mean = |col: usize| kept.iter().map(|r| r[col]).sum::<f64>() / kept.len() as f64;
        let baseline = mean(0);
        for (col, &estimator) in estimators.iter().enumerate() {
            let m = mean(col);
            results.push(McResult {
                design: cfg.design,
                p: cfg.p,
                n,
                estimator,
                reps: kept.len(),
                failed,
                mean_max_l2: m,
                relative_to_lasso: if col == 0 { 1.0 } else { m / baseline },
                errors: kept.iter().map(|r| r[col]).collect(),
            });
        }
    }
    Ok(results)
}

/// Long-format CSV, one row per `(n, estimator)`, after `# `-prefixed
/// header comments.
pub fn write_mc_csv<W: Write>(mut w: W, results: &[McResult], comments: &[String]) -> Result<()> {
    let mut out = String::new();
    for c in comments {
        let _ = writeln!(out, "# {c}");
    }
    out.push_str("design,p,n,estimator,reps,failed,mean_max_l2,relative_to_lasso\n");
    for r in results {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.design, r.p, r.n, r.estimator, r.reps, r.failed, r.mean_max_l2, r.relative_to_lasso
        );
    }
    w.write_all(out.as_bytes()).map_err(|e| Error::io("<mc output>", e))
}

impl McResult {
    /// Aligned text table for terminals.
    pub fn table(results: &[McResult]) -> String {
        let mut out = format!(
            "{:<6} {:>4} {:>6} {:<11} {:>5} {:>6} {:>13} {:>9}\n",
            "design", "p", "n", "estimator", "reps", "failed", "mean_max_l2", "relative"
        );
        for r in results {
            let _ = writeln!(
                out,
                "{:<6} {:>4} {:>6} {:<11} {:>5} {:>6} {:>13.6e} {:>9.4}",
                r.design, r.p, r.n, r.estimator, r.reps, r.failed, r.mean_max_l2, r.relative_to_lasso
            );
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn streams_differ_by_cell_and_replication() {
        let draw = |n, rep| replication_rng(1, DesignTag::A, 16, n, rep).random::<u64>();
        assert_eq!(draw(100, 0), draw(100, 0));
        assert_ne!(draw(100, 0), draw(100, 1));
        assert_ne!(draw(100, 0), draw(200, 0));
    }

    #[test]
    fn lasso_added_as_reference() {
        let mut cfg = McConfig::new(DesignTag::A, 4, vec![60], 2, 5);
        cfg.estimators = vec![Estimator::SqrtLasso];
        cfg.workers = 1;
        let res = run_monte_carlo(&cfg).unwrap();
        assert_eq!(res.len(), 2);
        assert_eq!(res[0].estimator, Estimator::Lasso);
        assert_eq!(res[0].relative_to_lasso, 1.0);
        assert_eq!(res[1].errors.len(), 2);
    }
}
