use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::stats::SampleMatrix;
use crate::{Error, Result};

fn check_rho(rho: f64) -> Result<()> {
    if !(0.0..1.0).contains(&rho) {
        return Err(Error::invalid("rho", rho, "must lie in [0, 1)"));
    }
    Ok(())
}

/// Fills `row` with one `N(0, Sigma)` draw, `Sigma_jk = rho^{|j-k|}`, via the
/// stationary AR(1) recursion `Y_1 = xi_1`, `Y_j = rho Y_{j-1} + sqrt(1 - rho^2) xi_j`.
pub fn fill_ar1_row<R: Rng + ?Sized>(rho: f64, rng: &mut R, row: &mut [f64]) {
    let innovation = (1.0 - rho * rho).sqrt();
    let mut prev = 0.0;
    for (j, y) in row.iter_mut().enumerate() {
        let xi: f64 = StandardNormal.sample(rng);
        prev = if j == 0 { xi } else { rho * prev + innovation * xi };
        *y = prev;
    }
}

/// `n` independent Gaussian rows with Toeplitz covariance `rho^{|j-k|}`.
pub fn gen_ar1_gaussian_rows<R: Rng + ?Sized>(
    n: usize,
    p: usize,
    rho: f64,
    rng: &mut R,
) -> Result<SampleMatrix> {
    check_rho(rho)?;
    let mut values = vec![0.0; n * p];
    if p > 0 {
        for row in values.chunks_exact_mut(p) {
            fill_ar1_row(rho, rng, row);
        }
    }
    SampleMatrix::new(n, p, values)
}
