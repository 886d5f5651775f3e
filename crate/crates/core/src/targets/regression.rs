//! Bayesian linear regression on a B-spline basis with a squared-exponential
//! Gaussian-process prior over the coefficients, including the analytic
//! least-squares posterior used as the reference distribution.

use super::gaussian::GaussianTarget;
use super::spline::SplineBasis;
use crate::error::Result;
use crate::linalg;
use crate::rng::stream_rng;
use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use rand::RngExt;
use rand_distr::StandardNormal;
use serde_json::json;

/// Small ridge added to the squared-exponential Gram matrix. The kernel is
/// numerically rank-deficient at these length scales; without the ridge the
/// precision `Σ_prior⁻¹` in the posterior formulas is not computable in
/// double precision.
const PRIOR_RIDGE: f64 = 1e-4;

/// Analytic Gaussian posterior of a linear model `d = G x + ε`,
/// `ε ~ N(0, σ_d² I)`, `x ~ N(0, Σ_prior)`:
///
/// `x̂ = (Gᵀ G + σ_d² Σ_prior⁻¹)⁻¹ Gᵀ d`,
/// `Σ̂ = σ_d² (Gᵀ G + σ_d² Σ_prior⁻¹)⁻¹`.
#[derive(Debug, Clone)]
pub struct RegressionPosterior {
    pub design: Array2<f64>,
    pub data: Array1<f64>,
    pub sigma_d: f64,
    pub sigma_prior: Array2<f64>,
    pub x_hat: Array1<f64>,
    pub sigma_hat: Array2<f64>,
}

impl RegressionPosterior {
    /// JSON export of the posterior and its inputs for external checking.
    pub fn to_json(&self) -> serde_json::Value {
        let mat = |m: &Array2<f64>| -> Vec<Vec<f64>> {
            m.rows().into_iter().map(|r| r.to_vec()).collect()
        };
        json!({
            "x_hat": self.x_hat.to_vec(),
            "sigma_hat": mat(&self.sigma_hat),
            "design": mat(&self.design),
            "data": self.data.to_vec(),
            "sigma_d": self.sigma_d,
        })
    }
}

/// Posterior moments from the normal-equation formulas.
pub fn regression_posterior(
    design: &ArrayView2<f64>,
    data: &ArrayView1<f64>,
    sigma_d: f64,
    sigma_prior: &ArrayView2<f64>,
) -> Result<RegressionPosterior> {
    let prior_chol = linalg::cholesky(sigma_prior)?;
    let prior_inv = linalg::chol_inverse(&prior_chol.view());
    let a = design.t().dot(design) + &(sigma_d * sigma_d * &prior_inv);
    let a_chol = linalg::cholesky(&a.view())?;
    let gtd = design.t().dot(data);
    let x_hat = linalg::chol_solve(&a_chol.view(), &gtd.view());
    let a_inv = linalg::chol_inverse(&a_chol.view());
    let mut sigma_hat = a_inv * (sigma_d * sigma_d);
    // resymmetrize against roundoff so downstream factorizations are clean
    sigma_hat = (&sigma_hat + &sigma_hat.t()) * 0.5;
    Ok(RegressionPosterior {
        design: design.to_owned(),
        data: data.to_owned(),
        sigma_d,
        sigma_prior: sigma_prior.to_owned(),
        x_hat,
        sigma_hat,
    })
}

/// A regression problem bundled with its exact posterior target.
pub struct BlrProblem {
    pub target: GaussianTarget,
    pub posterior: RegressionPosterior,
    pub basis: SplineBasis,
}

impl BlrProblem {
    /// Prior covariance over the spline coefficients (feeds the
    /// localization-style forward process).
    pub fn prior_covariance(&self) -> &Array2<f64> {
        &self.posterior.sigma_prior
    }
}

/// Squared-exponential Gram matrix over 1-d positions plus a stabilizing
/// ridge: `K_ij = exp(-(ξ_i - ξ_j)² / (2 L²)) + ridge δ_ij`.
fn squared_exponential(positions: &ArrayView1<f64>, length_scale: f64) -> Array2<f64> {
    let n = positions.len();
    let mut k = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            let d = positions[i] - positions[j];
            k[[i, j]] = (-d * d / (2.0 * length_scale * length_scale)).exp();
        }
        k[[i, i]] += PRIOR_RIDGE;
    }
    k
}

/// White noise convolved with a Gaussian kernel of width `length_scale`
/// over `positions`, rescaled so its standard deviation is exactly `std`.
fn correlated_noise(
    positions: &ArrayView1<f64>,
    length_scale: f64,
    std: f64,
    rng: &mut impl rand::Rng,
) -> Array1<f64> {
    let n = positions.len();
    let white = Array1::from_iter((0..n).map(|_| rng.sample::<f64, _>(StandardNormal)));
    let mut filtered = Array1::<f64>::zeros(n);
    for i in 0..n {
        let mut wsum = 0.0;
        let mut acc = 0.0;
        for j in 0..n {
            let d = positions[i] - positions[j];
            let w = (-d * d / (2.0 * length_scale * length_scale)).exp();
            wsum += w;
            acc += w * white[j];
        }
        filtered[i] = acc / wsum;
    }
    let mean = filtered.mean().unwrap();
    let sd = (filtered.mapv(|v| (v - mean) * (v - mean)).sum() / n as f64).sqrt();
    filtered * (std / sd)
}

fn make_blr(
    n_splines: usize,
    n_points: usize,
    length_scale: f64,
    noise_scale: f64,
    sigma_d: f64,
    seed: u64,
) -> Result<BlrProblem> {
    let basis = SplineBasis::cubic(n_splines, n_points, -1.0, 1.0);
    let centers = basis.centers();
    let sigma_prior = squared_exponential(&centers.view(), length_scale);

    let mut rng = stream_rng(seed, 0);
    let x_true = Array1::from_iter((0..n_splines).map(|_| rng.sample::<f64, _>(StandardNormal)));
    let clean = basis.design().dot(&x_true);
    let noise = correlated_noise(&basis.sample_points().view(), noise_scale, sigma_d, &mut rng);
    let data = &clean + &noise;

    let posterior = regression_posterior(
        &basis.design().view(),
        &data.view(),
        sigma_d,
        &sigma_prior.view(),
    )?;
    let target = GaussianTarget::new(posterior.x_hat.clone(), posterior.sigma_hat.clone())?;
    Ok(BlrProblem {
        target,
        posterior,
        basis,
    })
}

/// The 20-coefficient problem: 20 cubic B-splines on `[-1, 1]`, 500 data
/// points, prior length scale `L = 0.5`, noise of std `2.0` correlated over
/// a length scale of `0.05`.
pub fn make_blr20(seed: u64) -> Result<BlrProblem> {
    make_blr(20, 500, 0.5, 0.05, 2.0, seed)
}

/// A 100-coefficient synthetic stand-in with the same structure (denser
/// basis, shorter prior length scale). This is NOT a PDE inversion — it
/// exists so the high-dimensional configuration has a runnable target.
pub fn make_blr100_surrogate(seed: u64) -> Result<BlrProblem> {
    make_blr(100, 2000, 0.1, 0.02, 2.0, seed)
}
