//! Energy distance between sample sets, plus summary statistics.
//!
//! `ε(X, Y) = 2 E‖X − Y‖_p − E‖X − X'‖_p − E‖Y − Y'‖_p` is nonnegative in
//! expectation and zero iff the distributions coincide. Two estimators are
//! provided: the exact all-pairs V-statistic (quadratic cost, used as the
//! oracle and for small sets) and a permutation estimator that averages
//! `‖·‖_p` over randomly paired samples, repeated `n_repeats` times.

use crate::error::{Error, Result};
use crate::linalg::kahan_sum;
use crate::rng::stream_rng;
use ndarray::{Array2, ArrayView1, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::Serialize;

/// Energy-distance estimates, one value per permutation repeat.
#[derive(Debug, Clone, Serialize)]
pub struct EnergyResult {
    pub values: Vec<f64>,
    pub p_norm: f64,
    pub n_repeats: usize,
}

impl EnergyResult {
    pub fn median(&self) -> f64 {
        let mut v = self.values.clone();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = v.len();
        if n % 2 == 1 {
            v[n / 2]
        } else {
            0.5 * (v[n / 2 - 1] + v[n / 2])
        }
    }

    pub fn mean(&self) -> f64 {
        kahan_sum(self.values.iter().copied()) / self.values.len() as f64
    }

    /// Empirical quantile (linear interpolation between order statistics).
    pub fn quantile(&self, q: f64) -> f64 {
        let mut v = self.values.clone();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        quantile_sorted(&v, q)
    }
}

fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = q.clamp(0.0, 1.0) * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] * (1.0 - frac) + sorted[hi] * frac
}

fn p_distance(a: &ArrayView1<f64>, b: &ArrayView1<f64>, p: f64) -> f64 {
    if p == 2.0 {
        a.iter()
            .zip(b.iter())
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt()
    } else if p == 1.0 {
        a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()).sum()
    } else {
        a.iter()
            .zip(b.iter())
            .map(|(x, y)| (x - y).abs().powf(p))
            .sum::<f64>()
            .powf(1.0 / p)
    }
}

fn check_inputs(x: &ArrayView2<f64>, y: &ArrayView2<f64>) -> Result<()> {
    if x.nrows() == 0 || y.nrows() == 0 {
        return Err(Error::InvalidConfig("empty sample set".into()));
    }
    if x.ncols() != y.ncols() {
        return Err(Error::DimensionMismatch {
            expected: x.ncols(),
            got: y.ncols(),
        });
    }
    Ok(())
}

/// Deterministic argument ordering shared by both estimators, so that
/// `ε(X, Y)` and `ε(Y, X)` run the identical computation.
fn canonical_order<'a>(
    x: &'a ArrayView2<'a, f64>,
    y: &'a ArrayView2<'a, f64>,
) -> (&'a ArrayView2<'a, f64>, &'a ArrayView2<'a, f64>) {
    let swap = match x.nrows().cmp(&y.nrows()) {
        std::cmp::Ordering::Less => false,
        std::cmp::Ordering::Greater => true,
        std::cmp::Ordering::Equal => x
            .iter()
            .zip(y.iter())
            .find_map(|(a, b)| a.partial_cmp(b).filter(|o| o.is_ne()))
            .map(|o| o == std::cmp::Ordering::Greater)
            .unwrap_or(false),
    };
    if swap {
        (y, x)
    } else {
        (x, y)
    }
}

/// Exact all-pairs V-statistic (diagonal included), `O(n²)`; equal bit for
/// bit under argument swap.
pub fn energy_distance_exact(
    x: &ArrayView2<f64>,
    y: &ArrayView2<f64>,
    p_norm: f64,
) -> Result<f64> {
    check_inputs(x, y)?;
    let (x, y) = canonical_order(x, y);
    let mean_pairwise = |a: &ArrayView2<f64>, b: &ArrayView2<f64>| -> f64 {
        let partials: Vec<f64> = a
            .rows()
            .into_iter()
            .collect::<Vec<_>>()
            .par_iter()
            .map(|ra| kahan_sum(b.rows().into_iter().map(|rb| p_distance(ra, &rb, p_norm))))
            .collect();
        kahan_sum(partials.into_iter()) / (a.nrows() as f64 * b.nrows() as f64)
    };
    Ok(2.0 * mean_pairwise(x, y) - mean_pairwise(x, x) - mean_pairwise(y, y))
}

/// A fixed-point-free permutation of `0..n` (when `n > 1`): shuffle, then
/// repair any fixed points by swapping with a neighbor.
fn derangement(n: usize, rng: &mut impl rand::Rng) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(rng);
    if n > 1 {
        for i in 0..n {
            if perm[i] == i {
                let j = (i + 1) % n;
                perm.swap(i, j);
            }
        }
    }
    perm
}

/// Permutation estimator: each repeat pairs `X` against a shuffled `Y` for
/// the cross term and each set against a fixed-point-free self-permutation
/// for the within terms. Repeats use independent seeded streams, so the
/// result is deterministic and parallelizable.
pub fn energy_distance(
    x: &ArrayView2<f64>,
    y: &ArrayView2<f64>,
    p_norm: f64,
    n_repeats: usize,
    seed: u64,
) -> Result<EnergyResult> {
    check_inputs(x, y)?;
    if n_repeats == 0 {
        return Err(Error::InvalidConfig("n_repeats must be >= 1".into()));
    }
    let (x, y) = canonical_order(x, y);
    let n = x.nrows();
    let m = y.nrows();
    let k = n.min(m);
    let values: Vec<f64> = (0..n_repeats as u64)
        .into_par_iter()
        .map(|rep| {
            let mut rng = stream_rng(seed, rep);
            let mut x_order: Vec<usize> = (0..n).collect();
            x_order.shuffle(&mut rng);
            let mut y_order: Vec<usize> = (0..m).collect();
            y_order.shuffle(&mut rng);
            let cross = kahan_sum(
                (0..k).map(|i| p_distance(&x.row(x_order[i]), &y.row(y_order[i]), p_norm)),
            ) / k as f64;
            let perm_x = derangement(n, &mut rng);
            let self_x = kahan_sum(
                (0..n).map(|i| p_distance(&x.row(i), &x.row(perm_x[i]), p_norm)),
            ) / n as f64;
            let perm_y = derangement(m, &mut rng);
            let self_y = kahan_sum(
                (0..m).map(|i| p_distance(&y.row(i), &y.row(perm_y[i]), p_norm)),
            ) / m as f64;
            2.0 * cross - self_x - self_y
        })
        .collect();
    Ok(EnergyResult {
        values,
        p_norm,
        n_repeats,
    })
}

/// 95th percentile of the permutation estimates between two independent
/// same-distribution sample sets: the "self distance" noise floor used to
/// gate sampler output quality.
pub fn self_distance_threshold(
    reference_a: &ArrayView2<f64>,
    reference_b: &ArrayView2<f64>,
    p_norm: f64,
    n_repeats: usize,
    seed: u64,
) -> Result<f64> {
    let r = energy_distance(reference_a, reference_b, p_norm, n_repeats, seed)?;
    Ok(r.quantile(0.95))
}

/// Per-dimension summary of a sample set.
#[derive(Debug, Clone, Serialize)]
pub struct SampleSummary {
    pub count: usize,
    pub dim: usize,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub p05: Vec<f64>,
    pub p50: Vec<f64>,
    pub p95: Vec<f64>,
    pub covariance: Vec<Vec<f64>>,
    pub nonfinite_count: usize,
}

/// Means, standard deviations, percentiles (5/50/95), full covariance, and
/// a non-finite entry count (which must be zero for a healthy run).
pub fn summarize(samples: &ArrayView2<f64>) -> Result<SampleSummary> {
    let n = samples.nrows();
    if n == 0 {
        return Err(Error::InvalidConfig("empty sample set".into()));
    }
    let d = samples.ncols();
    let nonfinite_count = samples.iter().filter(|v| !v.is_finite()).count();
    let mean_arr = samples.mean_axis(Axis(0)).unwrap();
    let centered = samples - &mean_arr;
    let cov = centered.t().dot(&centered) / n as f64;
    let mut std = Vec::with_capacity(d);
    let mut p05 = Vec::with_capacity(d);
    let mut p50 = Vec::with_capacity(d);
    let mut p95 = Vec::with_capacity(d);
    for j in 0..d {
        std.push(cov[[j, j]].sqrt());
        let mut col: Vec<f64> = samples.column(j).to_vec();
        col.sort_by(|a, b| a.partial_cmp(b).unwrap());
        p05.push(quantile_sorted(&col, 0.05));
        p50.push(quantile_sorted(&col, 0.50));
        p95.push(quantile_sorted(&col, 0.95));
    }
    Ok(SampleSummary {
        count: n,
        dim: d,
        mean: mean_arr.to_vec(),
        std,
        p05,
        p50,
        p95,
        covariance: cov.rows().into_iter().map(|r| r.to_vec()).collect(),
        nonfinite_count,
    })
}

/// Pool sampler outputs from repeated runs until `n_total` rows are filled
/// (used when comparing across ensemble sizes at a fixed evaluation size).
pub fn pool_rows(runs: &[Array2<f64>], n_total: usize) -> Array2<f64> {
    let d = runs[0].ncols();
    let mut out = Array2::zeros((n_total, d));
    let mut filled = 0;
    'outer: for r in runs {
        for row in r.rows() {
            if filled == n_total {
                break 'outer;
            }
            out.row_mut(filled).assign(&row);
            filled += 1;
        }
    }
    assert_eq!(filled, n_total, "not enough rows to pool");
    out
}
