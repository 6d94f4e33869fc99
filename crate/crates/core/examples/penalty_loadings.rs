//! Penalty level across problem sizes, and how the data-driven loadings
//! approach the infeasible ideal loadings built from true innovations.
//!
//! cargo run --release --example penalty_loadings

use varlasso::penalization::{ideal_blocked_loadings, initial_loadings, penalty_level, PenaltyConfig};
use varlasso::simulation::{make_design, simulate_var, DesignTag};
use varlasso::{build_lag_design, fit_design, Estimator, SolverOptions};

fn main() -> varlasso::Result<()> {
    let cfg = PenaltyConfig::default();
    println!("lambda*/n for c = {}:", cfg.c);
    println!("    n     p   q   lambda*/n");
    for n in [100, 626, 1000] {
        for (p, q) in [(16, 1), (127, 1), (16, 4)] {
            let l = penalty_level(n, p, q, &cfg)?;
            println!("{n:>5} {p:>5} {q:>3}   {:.5}", l / n as f64);
        }
    }

    println!("\nmax_ij |u_hat / u_ideal - 1| on design A, p = 16:");
    println!("    n   initial   K=5");
    for n in [250, 1000, 4000] {
        let spec = make_design(DesignTag::A, 16, n)?;
        let sim = simulate_var(&spec, 3, None)?;
        let d = build_lag_design(&sim.panel, 1)?;
        let ideal = ideal_blocked_loadings(&d, &sim.innovations, 1.0)?;
        let gap = |u: &nalgebra::DMatrix<f64>| {
            u.zip_map(ideal.values(), |a, b| (a / b - 1.0).abs()).max()
        };
        let init = initial_loadings(&d)?;
        let k5 = PenaltyConfig { k_updates: 5, ..cfg.clone() };
        let fit = fit_design(&d, Estimator::Lasso, &k5, &SolverOptions::default())?;
        println!("{n:>5}   {:.4}   {:.4}", gap(init.values()), gap(fit.loadings.values()));
    }
    Ok(())
}
