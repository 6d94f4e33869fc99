//! Builds each simulation design and reports its lag order, sparsity,
//! companion spectral radius and the sample standard deviation of a draw.
//!
//! cargo run --example simulate_designs -- [p] [n] [seed]

use varlasso::simulation::{make_design, simulate_var, DesignTag};

fn main() -> varlasso::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let p: usize = args.first().map_or(16, |s| s.parse().expect("p"));
    let n: usize = args.get(1).map_or(500, |s| s.parse().expect("n"));
    let seed: u64 = args.get(2).map_or(1, |s| s.parse().expect("seed"));

    println!("design  q   s  spectral_radius  sd(Y_1)");
    for tag in DesignTag::ALL {
        let spec = make_design(tag, p, n)?;
        let rho = spec.companion()?.spectral_radius()?;
        let sim = simulate_var(&spec, seed, None)?;
        let sd = sim.panel.sample_variances()[0].sqrt();
        println!("{tag:<6} {:>2} {:>3}  {rho:>15.10}  {sd:.4}", spec.q, spec.s);
    }
    Ok(())
}
