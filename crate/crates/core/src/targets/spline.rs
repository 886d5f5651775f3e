//! Uniform clamped B-spline basis on an interval.

use ndarray::{Array1, Array2};

/// A set of `n_splines` cubic B-splines with uniform clamped knots,
/// evaluated at uniformly spaced sample points to form a design matrix.
#[derive(Debug, Clone)]
pub struct SplineBasis {
    n_splines: usize,
    degree: usize,
    knots: Vec<f64>,
    sample_points: Array1<f64>,
    design: Array2<f64>,
}

impl SplineBasis {
    /// Cubic basis with `n_splines` bump functions on `[lo, hi]` sampled at
    /// `n_points` uniform locations.
    pub fn cubic(n_splines: usize, n_points: usize, lo: f64, hi: f64) -> Self {
        Self::new(n_splines, 3, n_points, lo, hi)
    }

    pub fn new(n_splines: usize, degree: usize, n_points: usize, lo: f64, hi: f64) -> Self {
        assert!(n_splines > degree, "need more splines than the degree");
        assert!(n_points >= 2 && hi > lo);
        // clamped uniform knots: (degree+1)-fold endpoints with
        // n_splines - degree - 1 interior knots
        let n_interior = n_splines - degree - 1;
        let mut knots = Vec::with_capacity(n_splines + degree + 1);
        for _ in 0..=degree {
            knots.push(lo);
        }
        for j in 1..=n_interior {
            knots.push(lo + (hi - lo) * j as f64 / (n_interior + 1) as f64);
        }
        for _ in 0..=degree {
            knots.push(hi);
        }

        let sample_points = Array1::from_iter(
            (0..n_points).map(|k| lo + (hi - lo) * k as f64 / (n_points - 1) as f64),
        );
        let mut design = Array2::zeros((n_points, n_splines));
        for (r, &x) in sample_points.iter().enumerate() {
            for i in 0..n_splines {
                design[[r, i]] = eval_bspline(&knots, i, degree, x, hi);
            }
        }
        Self {
            n_splines,
            degree,
            knots,
            sample_points,
            design,
        }
    }

    pub fn n_splines(&self) -> usize {
        self.n_splines
    }

    /// Design matrix `G` (rows = sample points, columns = splines).
    pub fn design(&self) -> &Array2<f64> {
        &self.design
    }

    pub fn sample_points(&self) -> &Array1<f64> {
        &self.sample_points
    }

    /// Greville abscissae: the effective center position of each spline,
    /// used as coordinates for spatial covariance kernels.
    pub fn centers(&self) -> Array1<f64> {
        Array1::from_iter((0..self.n_splines).map(|i| {
            self.knots[i + 1..=i + self.degree].iter().sum::<f64>() / self.degree as f64
        }))
    }
}

/// Cox–de Boor evaluation of `B_{i,k}(x)`; the right endpoint is folded
/// into the last non-empty interval.
fn eval_bspline(knots: &[f64], i: usize, k: usize, x: f64, hi: f64) -> f64 {
    if k == 0 {
        let in_half_open = knots[i] <= x && x < knots[i + 1];
        let at_end = x == hi && knots[i] < knots[i + 1] && knots[i + 1] == hi;
        return if in_half_open || at_end { 1.0 } else { 0.0 };
    }
    let mut value = 0.0;
    let denom_left = knots[i + k] - knots[i];
    if denom_left > 0.0 {
        value += (x - knots[i]) / denom_left * eval_bspline(knots, i, k - 1, x, hi);
    }
    let denom_right = knots[i + k + 1] - knots[i + 1];
    if denom_right > 0.0 {
        value += (knots[i + k + 1] - x) / denom_right * eval_bspline(knots, i + 1, k - 1, x, hi);
    }
    value
}
