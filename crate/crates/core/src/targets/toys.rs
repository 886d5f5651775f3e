//! Two-dimensional toy targets: a curved "banana" ridge, parallel
//! high-probability ridges, and a three-component Gaussian mixture with
//! well-separated means.

use super::TargetDensity;
use crate::linalg::kahan_sum;
use crate::rng::stream_rng;
use ndarray::{array, Array1, Array2, ArrayView1};
use rand::RngExt;
use rand_distr::StandardNormal;

/// `log p(x) = -x₁²/2 - (x₂ - x₁² - c)² / (2 s²)` with `c = 1`, `s = 0.5`.
#[derive(Debug, Clone)]
pub struct Banana {
    pub curvature_offset: f64,
    pub ridge_width: f64,
}

pub fn make_banana() -> Banana {
    Banana {
        curvature_offset: 1.0,
        ridge_width: 0.5,
    }
}

impl TargetDensity for Banana {
    fn dim(&self) -> usize {
        2
    }

    fn log_density(&self, x: &ArrayView1<f64>) -> f64 {
        let r = x[1] - x[0] * x[0] - self.curvature_offset;
        -0.5 * x[0] * x[0] - r * r / (2.0 * self.ridge_width * self.ridge_width)
    }

    fn grad_log_density(&self, x: &ArrayView1<f64>) -> Option<Array1<f64>> {
        let s2 = self.ridge_width * self.ridge_width;
        let r = x[1] - x[0] * x[0] - self.curvature_offset;
        Some(array![-x[0] + 2.0 * x[0] * r / s2, -r / s2])
    }

    fn sample_reference(&self, n: usize, seed: u64) -> Option<Array2<f64>> {
        let mut rng = stream_rng(seed, 0);
        let mut out = Array2::zeros((n, 2));
        for mut row in out.rows_mut() {
            let x1: f64 = rng.sample(StandardNormal);
            let z: f64 = rng.sample(StandardNormal);
            row[0] = x1;
            row[1] = x1 * x1 + self.curvature_offset + self.ridge_width * z;
        }
        Some(out)
    }
}

/// `log p(x) = -(x₁² + x₂²)/8 - a sin²(k x₁)` with `a = 3`, `k = 3`:
/// a broad Gaussian envelope cut into parallel ridges.
#[derive(Debug, Clone)]
pub struct Ridged {
    pub depth: f64,
    pub frequency: f64,
}

pub fn make_ridged() -> Ridged {
    Ridged {
        depth: 3.0,
        frequency: 3.0,
    }
}

impl Ridged {
    /// Acceptance probability of the rejection sampler at `x₁`.
    fn accept_prob(&self, x1: f64) -> f64 {
        let s = (self.frequency * x1).sin();
        (-self.depth * s * s).exp()
    }
}

impl TargetDensity for Ridged {
    fn dim(&self) -> usize {
        2
    }

    fn log_density(&self, x: &ArrayView1<f64>) -> f64 {
        let s = (self.frequency * x[0]).sin();
        -(x[0] * x[0] + x[1] * x[1]) / 8.0 - self.depth * s * s
    }

    fn grad_log_density(&self, x: &ArrayView1<f64>) -> Option<Array1<f64>> {
        // d/dx of a sin²(kx) is a k sin(2kx)
        Some(array![
            -x[0] / 4.0 - self.depth * self.frequency * (2.0 * self.frequency * x[0]).sin(),
            -x[1] / 4.0
        ])
    }

    fn sample_reference(&self, n: usize, seed: u64) -> Option<Array2<f64>> {
        // rejection from the Gaussian envelope N(0, 4 I)
        let mut rng = stream_rng(seed, 0);
        let mut out = Array2::zeros((n, 2));
        let mut filled = 0;
        while filled < n {
            let z1: f64 = rng.sample(StandardNormal);
            let z2: f64 = rng.sample(StandardNormal);
            let u: f64 = rng.random();
            if u < self.accept_prob(2.0 * z1) {
                out[[filled, 0]] = 2.0 * z1;
                out[[filled, 1]] = 2.0 * z2;
                filled += 1;
            }
        }
        Some(out)
    }
}

/// Equal-weight mixture of three Gaussians `N(m_k, comp_std² I)`.
#[derive(Debug, Clone)]
pub struct Mixture3 {
    pub means: [Array1<f64>; 3],
    pub comp_std: f64,
}

pub fn make_mixture3() -> Mixture3 {
    Mixture3 {
        means: [
            array![-2.5, -1.5],
            array![2.5, -1.5],
            array![0.0, 2.5],
        ],
        comp_std: 0.3,
    }
}

impl Mixture3 {
    fn component_log_density(&self, k: usize, x: &ArrayView1<f64>) -> f64 {
        let v = self.comp_std * self.comp_std;
        let dx = x[0] - self.means[k][0];
        let dy = x[1] - self.means[k][1];
        -(dx * dx + dy * dy) / (2.0 * v) - (2.0 * std::f64::consts::PI * v).ln()
    }

    /// Index of the nearest component mean; used to count mode occupancy.
    pub fn nearest_component(&self, x: &ArrayView1<f64>) -> usize {
        (0..3)
            .min_by(|&a, &b| {
                let da = (x[0] - self.means[a][0]).powi(2) + (x[1] - self.means[a][1]).powi(2);
                let db = (x[0] - self.means[b][0]).powi(2) + (x[1] - self.means[b][1]).powi(2);
                da.partial_cmp(&db).unwrap()
            })
            .unwrap()
    }
}

impl TargetDensity for Mixture3 {
    fn dim(&self) -> usize {
        2
    }

    fn log_density(&self, x: &ArrayView1<f64>) -> f64 {
        let logs: Vec<f64> = (0..3).map(|k| self.component_log_density(k, x)).collect();
        let m = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if m == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        m + kahan_sum(logs.iter().map(|l| (l - m).exp())).ln() - 3.0f64.ln()
    }

    fn grad_log_density(&self, x: &ArrayView1<f64>) -> Option<Array1<f64>> {
        let v = self.comp_std * self.comp_std;
        let logs: Vec<f64> = (0..3).map(|k| self.component_log_density(k, x)).collect();
        let m = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut weights = [0.0; 3];
        let mut total = 0.0;
        for k in 0..3 {
            weights[k] = (logs[k] - m).exp();
            total += weights[k];
        }
        let mut g = Array1::zeros(2);
        for k in 0..3 {
            let w = weights[k] / total;
            g[0] += w * (self.means[k][0] - x[0]) / v;
            g[1] += w * (self.means[k][1] - x[1]) / v;
        }
        Some(g)
    }

    fn sample_reference(&self, n: usize, seed: u64) -> Option<Array2<f64>> {
        let mut rng = stream_rng(seed, 0);
        let mut out = Array2::zeros((n, 2));
        for mut row in out.rows_mut() {
            let k = rng.random_range(0..3usize);
            let z1: f64 = rng.sample(StandardNormal);
            let z2: f64 = rng.sample(StandardNormal);
            row[0] = self.means[k][0] + self.comp_std * z1;
            row[1] = self.means[k][1] + self.comp_std * z2;
        }
        Some(out)
    }
}
