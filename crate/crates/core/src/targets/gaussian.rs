//! Exact multivariate Gaussian targets.

use super::TargetDensity;
use crate::error::Result;
use crate::linalg;
use crate::rng::stream_rng;
use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use rand::RngExt;
use rand_distr::StandardNormal;

/// Normalized multivariate Gaussian with analytic log-density, gradient,
/// and direct sampler.
#[derive(Debug, Clone)]
pub struct GaussianTarget {
    mean: Array1<f64>,
    cov: Array2<f64>,
    chol: Array2<f64>,
    log_norm: f64,
}

impl GaussianTarget {
    pub fn new(mean: Array1<f64>, cov: Array2<f64>) -> Result<Self> {
        let chol = linalg::cholesky(&cov.view())?;
        let d = mean.len() as f64;
        let log_norm =
            0.5 * d * (2.0 * std::f64::consts::PI).ln() + 0.5 * linalg::chol_log_det(&chol.view());
        Ok(Self {
            mean,
            cov,
            chol,
            log_norm,
        })
    }

    pub fn mean(&self) -> &Array1<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &Array2<f64> {
        &self.cov
    }

    /// One draw using an externally managed RNG.
    pub fn draw<R: rand::Rng>(&self, rng: &mut R) -> Array1<f64> {
        let z = Array1::from_iter((0..self.mean.len()).map(|_| rng.sample::<f64, _>(StandardNormal)));
        &self.mean + &linalg::lower_matvec(&self.chol.view(), &z.view())
    }
}

impl TargetDensity for GaussianTarget {
    fn dim(&self) -> usize {
        self.mean.len()
    }

    fn log_density(&self, x: &ArrayView1<f64>) -> f64 {
        let diff = x - &self.mean;
        let w = linalg::solve_lower(&self.chol.view(), &diff.view());
        -0.5 * w.dot(&w) - self.log_norm
    }

    fn grad_log_density(&self, x: &ArrayView1<f64>) -> Option<Array1<f64>> {
        let diff = x - &self.mean;
        Some(-linalg::chol_solve(&self.chol.view(), &diff.view()))
    }

    fn sample_reference(&self, n: usize, seed: u64) -> Option<Array2<f64>> {
        let mut rng = stream_rng(seed, 0);
        let mut out = Array2::zeros((n, self.dim()));
        for mut row in out.rows_mut() {
            row.assign(&self.draw(&mut rng));
        }
        Some(out)
    }
}

/// Gaussian target from explicit moments; the covariance must be SPD.
pub fn make_gaussian(mean: Array1<f64>, cov: &ArrayView2<f64>) -> Result<GaussianTarget> {
    GaussianTarget::new(mean, cov.to_owned())
}

/// Zero-mean Gaussian with unit diagonal and correlations `rho^|i-j|`.
/// The five-dimensional instance of this family is used by the
/// ensemble-size study.
pub fn make_gaussian_ar1(dim: usize, rho: f64) -> Result<GaussianTarget> {
    let mut cov = Array2::zeros((dim, dim));
    for i in 0..dim {
        for j in 0..dim {
            cov[[i, j]] = rho.powi((i as i32 - j as i32).abs());
        }
    }
    GaussianTarget::new(Array1::zeros(dim), cov)
}
