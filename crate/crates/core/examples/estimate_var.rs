//! Simulates a sparse VAR, fits it with the three estimators and compares
//! the row-wise errors and supports against the truth.
//!
//! cargo run --release --example estimate_var -- [design] [p] [n] [seed]

use varlasso::diagnostics::error_report;
use varlasso::simulation::{make_design, simulate_var, DesignTag};
use varlasso::{build_lag_design, fit_design, Estimator, PenaltyConfig, SolverOptions};

fn main() -> varlasso::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let tag: DesignTag = args.first().map_or(Ok(DesignTag::A), |s| s.parse())?;
    let p: usize = args.get(1).map_or(16, |s| s.parse().expect("p"));
    let n: usize = args.get(2).map_or(500, |s| s.parse().expect("n"));
    let seed: u64 = args.get(3).map_or(7, |s| s.parse().expect("seed"));

    let spec = make_design(tag, p, n)?;
    let sim = simulate_var(&spec, seed, None)?;
    let design = build_lag_design(&sim.panel, spec.q)?;
    println!("design {tag}: p={p}, n={n}, q={}, s={}", spec.q, spec.s);

    for est in Estimator::ALL {
        let fit = fit_design(&design, est, &PenaltyConfig::default(), &SolverOptions::default())?;
        let r = error_report(&fit.estimate, &sim.truth, &design)?;
        let t = r.total_support();
        println!(
            "{est:<11} lambda={:>9.3}  max_l2={:.4}  max_l1={:.4}  tp={} fp={} fn={}",
            fit.estimate.meta().unwrap().lambda,
            r.max_l2,
            r.max_l1,
            t.true_positives,
            t.false_positives,
            t.false_negatives
        );
    }
    Ok(())
}
