//! Sparse and restricted eigenvalues of the population covariance of
//! design D, where regressors are strongly equicorrelated.
//!
//! cargo run --release --example diagnostics

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use varlasso::diagnostics::{restricted_eigenvalue_estimate, sparse_eigenvalue_bruteforce};

fn main() -> varlasso::Result<()> {
    let k = 12;
    // VAR(1) with 0.5 I: Sigma_Y = Sigma_eps / (1 - 0.25)
    let sigma = DMatrix::from_fn(k, k, |i, j| if i == j { 1.0 } else { 0.9 }) * (0.01 / 0.75);
    println!("m   phi_max(m)");
    for m in 1..=5 {
        println!("{m}   {:.6}", sparse_eigenvalue_bruteforce(&sigma, m as f64)?);
    }
    let mut rng = ChaCha20Rng::seed_from_u64(3);
    for c in [1.0, 3.0] {
        let re = restricted_eigenvalue_estimate(&sigma, 1, c, 20_000, &mut rng)?;
        println!("restricted eigenvalue (s=1, C={c}) sampled upper bound: {re:.6}");
    }
    Ok(())
}
