//! Reference target densities.
//!
//! A target exposes an unnormalized log-density and, where available, an
//! analytic gradient (used only by the gradient-based baselines) and a
//! direct reference sampler (used by the evaluation harness).

mod gaussian;
mod regression;
mod spline;
mod toys;

pub use gaussian::{make_gaussian, make_gaussian_ar1, GaussianTarget};
pub use regression::{
    make_blr100_surrogate, make_blr20, regression_posterior, BlrProblem, RegressionPosterior,
};
pub use spline::SplineBasis;
pub use toys::{make_banana, make_mixture3, make_ridged, Banana, Mixture3, Ridged};

use ndarray::{Array1, Array2, ArrayView1};

/// An unnormalized target density on `R^dim`.
///
/// `log_density` must be finite on the declared support and `-inf` outside
/// it. Implementations are immutable after construction; evaluation is pure.
pub trait TargetDensity: Send + Sync {
    fn dim(&self) -> usize;

    /// Unnormalized log-density, `-inf` outside the support.
    fn log_density(&self, x: &ArrayView1<f64>) -> f64;

    /// Analytic gradient of the log-density, if available.
    fn grad_log_density(&self, _x: &ArrayView1<f64>) -> Option<Array1<f64>> {
        None
    }

    /// Seeded direct sampler, if the target admits one.
    fn sample_reference(&self, _n: usize, _seed: u64) -> Option<Array2<f64>> {
        None
    }

    /// Whether `log_density` may be called concurrently. All built-in
    /// targets are safe; a black-box wrapper may opt out, forcing callers
    /// to serialize evaluations.
    fn concurrency_safe(&self) -> bool {
        true
    }
}
