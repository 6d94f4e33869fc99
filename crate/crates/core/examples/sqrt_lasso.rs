//! The sqrt-Lasso's penalty does not depend on the noise level: rescaling
//! the response rescales the solution, while the Lasso at a fixed penalty
//! selects differently.
//!
//! cargo run --example sqrt_lasso

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use varlasso::solvers::{sqrt_lasso, sqrt_lasso_gap, weighted_lasso, SolverOptions};

fn main() -> varlasso::Result<()> {
    let (n, k) = (200, 20);
    let mut rng = ChaCha20Rng::seed_from_u64(11);
    let x = DMatrix::from_fn(n, k, |_, _| StandardNormal.sample(&mut rng));
    let mut beta = DVector::zeros(k);
    beta[0] = 1.0;
    beta[3] = -0.5;
    let noise = DVector::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
    let loadings = vec![1.0; k];
    let opts = SolverOptions::default();
    // lambda/n ~ 1.1 * sqrt(2 ln(2k) / n) per unit noise
    let lambda = 1.1 * (2.0 * (2.0 * k as f64).ln() * n as f64).sqrt();

    println!("sigma   sqrt-lasso nnz  |b0|     lasso nnz  |b0|");
    for sigma in [0.1, 1.0, 5.0] {
        let y = &x * &beta + &noise * sigma;
        let s = sqrt_lasso(&x, &y, lambda, &loadings, &opts)?;
        let l = weighted_lasso(&x, &y, 2.0 * lambda, &loadings, &opts)?;
        let nnz = |b: &DVector<f64>| b.iter().filter(|v| **v != 0.0).count();
        println!(
            "{sigma:<6}  {:>14}  {:.3}    {:>9}  {:.3}",
            nnz(&s.beta),
            s.beta[0],
            nnz(&l.beta),
            l.beta[0]
        );
        assert!(sqrt_lasso_gap(&x, &y, &s.beta, lambda, &loadings) <= 1e-7);
    }
    Ok(())
}
