//! A desk-scale Monte Carlo comparison on one design.
//!
//! cargo run --release --example monte_carlo -- [design] [p] [reps] [workers]

use varlasso::experiments::{run_monte_carlo, McConfig, McResult};
use varlasso::simulation::DesignTag;

fn main() -> varlasso::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let tag: DesignTag = args.first().map_or(Ok(DesignTag::A), |s| s.parse())?;
    let p: usize = args.get(1).map_or(16, |s| s.parse().expect("p"));
    let reps: usize = args.get(2).map_or(20, |s| s.parse().expect("reps"));
    let workers: usize = args.get(3).map_or(0, |s| s.parse().expect("workers"));

    let mut cfg = McConfig::new(tag, p, vec![100, 250, 500], reps, 2024);
    cfg.workers = workers;
    let results = run_monte_carlo(&cfg)?;
    print!("{}", McResult::table(&results));
    Ok(())
}
