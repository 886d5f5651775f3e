//! Importance-sampling Monte Carlo estimation of the diffused log-density
//! and its score.
//!
//! The estimator approximates `p_t(x) = ∫ κ_t(x|x') p_0(x') dx'` by
//!
//! `p̂_t(x) = (1/N) Σ_i κ_t(x | x'_i) · p_0(x'_i) / p_is(x'_i)`,
//!
//! with nodes `x'_i` and log-ratios frozen once per resampling step. Two
//! importance distributions are available: a single Gaussian fitted to the
//! ensemble moments, and an equal-weight mixture of transition kernels
//! centered on the ensemble members (one node drawn per member, which is
//! the balance-heuristic multiple-importance estimator with one draw per
//! component). An antithetic variant mirrors every node through the origin.
//!
//! All kernel evaluations run in whitened coordinates `G⁻¹ x`, where the
//! kernel covariance `Σ_t = c(t) G Gᵀ` becomes isotropic; the per-node cost
//! is then O(D) instead of O(D²).

use crate::diffusion::ForwardSpec;
use crate::error::{Error, Result};
use crate::linalg::{self, kahan_sum, KahanVec};
use crate::rng::stream_rng;
use crate::targets::TargetDensity;
use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use rand::RngExt;
use rand_distr::StandardNormal;
use rayon::prelude::*;

/// How importance nodes are obtained when freezing an estimator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeMode {
    /// Evaluate the Monte Carlo sum at the ensemble members themselves.
    ReuseEnsemble,
    /// Draw fresh nodes from the importance distribution.
    DrawFresh,
}

/// Sample mean and regularized covariance of an ensemble.
///
/// The covariance uses the biased 1/N normalization and is floored by
/// `ε_reg I` with `ε_reg = 1e-8 · trace/D + 1e-12`, so a collapsed ensemble
/// still yields a usable proposal.
pub fn ensemble_moments(ensemble: &ArrayView2<f64>) -> Result<(Array1<f64>, Array2<f64>)> {
    let n = ensemble.nrows();
    if n < 2 {
        return Err(Error::EnsembleTooSmall { min: 2, got: n });
    }
    let d = ensemble.ncols();
    let mean = ensemble.mean_axis(ndarray::Axis(0)).unwrap();
    let centered = ensemble - &mean;
    let mut cov = centered.t().dot(&centered) / n as f64;
    let trace: f64 = cov.diag().sum();
    let eps = 1e-8 * trace / d as f64 + 1e-12;
    for i in 0..d {
        cov[[i, i]] += eps;
    }
    Ok((mean, cov))
}

/// An importance sampling distribution derived from the current ensemble.
#[derive(Debug, Clone)]
pub enum ImportanceDistribution {
    /// `N(μ_ens, Σ_ens + ε_reg I)`.
    EnsembleGaussian {
        mean: Array1<f64>,
        cov: Array2<f64>,
        chol: Array2<f64>,
        log_norm: f64,
    },
    /// Equal-weight mixture of transition kernels `κ_t(· | x_j)` centered
    /// on the ensemble members.
    MixtureKernel {
        spec: ForwardSpec,
        centers: Array2<f64>,
        kernel_time: f64,
        mean_shrink: f64,
        var_factor: f64,
        white_centers: Array2<f64>,
        white_mu: Array1<f64>,
    },
}

/// Gaussian importance distribution from the ensemble moments.
pub fn build_gaussian_is(ensemble: &ArrayView2<f64>) -> Result<ImportanceDistribution> {
    let (mean, cov) = ensemble_moments(ensemble)?;
    let chol = linalg::cholesky(&cov.view())?;
    let d = mean.len() as f64;
    let log_norm =
        0.5 * d * (2.0 * std::f64::consts::PI).ln() + 0.5 * linalg::chol_log_det(&chol.view());
    Ok(ImportanceDistribution::EnsembleGaussian {
        mean,
        cov,
        chol,
        log_norm,
    })
}

impl ImportanceDistribution {
    /// Kernel mixture over the ensemble members at time `t`.
    pub fn mixture(ensemble: &ArrayView2<f64>, t: f64, spec: &ForwardSpec) -> Result<Self> {
        if ensemble.ncols() != spec.dim() {
            return Err(Error::DimensionMismatch {
                expected: spec.dim(),
                got: ensemble.ncols(),
            });
        }
        let f = spec.kernel_factors(t)?;
        if f.var_factor <= 0.0 {
            return Err(Error::SingularKernel(t));
        }
        let mut white_centers = Array2::zeros(ensemble.dim());
        for (i, row) in ensemble.rows().into_iter().enumerate() {
            white_centers.row_mut(i).assign(&spec.whiten(&row));
        }
        let mu = spec.mu();
        let white_mu = spec.whiten(&mu.view());
        Ok(ImportanceDistribution::MixtureKernel {
            spec: spec.clone(),
            centers: ensemble.to_owned(),
            kernel_time: t,
            mean_shrink: f.mean_shrink,
            var_factor: f.var_factor,
            white_centers,
            white_mu,
        })
    }

    pub fn dim(&self) -> usize {
        match self {
            ImportanceDistribution::EnsembleGaussian { mean, .. } => mean.len(),
            ImportanceDistribution::MixtureKernel { centers, .. } => centers.ncols(),
        }
    }

    /// Normalized log-density.
    pub fn log_density(&self, x: &ArrayView1<f64>) -> f64 {
        match self {
            ImportanceDistribution::EnsembleGaussian {
                mean,
                chol,
                log_norm,
                ..
            } => {
                let diff = x - mean;
                let w = linalg::solve_lower(&chol.view(), &diff.view());
                -0.5 * w.dot(&w) - log_norm
            }
            ImportanceDistribution::MixtureKernel {
                spec,
                mean_shrink,
                var_factor,
                white_centers,
                white_mu,
                ..
            } => {
                let d = white_mu.len() as f64;
                let y = spec.whiten(x);
                let yoff = &y - &(white_mu * (1.0 - mean_shrink));
                let n = white_centers.nrows();
                let mut max = f64::NEG_INFINITY;
                for z in white_centers.rows() {
                    let q: f64 = yoff
                        .iter()
                        .zip(z.iter())
                        .map(|(a, b)| {
                            let e = a - mean_shrink * b;
                            e * e
                        })
                        .sum();
                    max = max.max(-0.5 * q / var_factor);
                }
                let sum = kahan_sum(white_centers.rows().into_iter().map(|z| {
                    let q: f64 = yoff
                        .iter()
                        .zip(z.iter())
                        .map(|(a, b)| {
                            let e = a - mean_shrink * b;
                            e * e
                        })
                        .sum();
                    (-0.5 * q / var_factor - max).exp()
                }));
                let log_det = d * var_factor.ln() + 2.0 * spec.log_det_scale();
                max + sum.ln() - (n as f64).ln()
                    - 0.5 * d * (2.0 * std::f64::consts::PI).ln()
                    - 0.5 * log_det
            }
        }
    }

    /// Draw importance nodes. The Gaussian kind draws `n` IID samples; the
    /// mixture kind draws exactly one node per center (`n` must match).
    fn sample_nodes(&self, n: usize, rng: &mut impl rand::Rng) -> Result<Array2<f64>> {
        let d = self.dim();
        match self {
            ImportanceDistribution::EnsembleGaussian { mean, chol, .. } => {
                let mut out = Array2::zeros((n, d));
                for mut row in out.rows_mut() {
                    let z =
                        Array1::from_iter((0..d).map(|_| rng.sample::<f64, _>(StandardNormal)));
                    let v = mean + &linalg::lower_matvec(&chol.view(), &z.view());
                    row.assign(&v);
                }
                Ok(out)
            }
            ImportanceDistribution::MixtureKernel {
                spec,
                centers,
                kernel_time,
                mean_shrink,
                var_factor,
                ..
            } => {
                if n != centers.nrows() {
                    return Err(Error::InvalidConfig(format!(
                        "kernel mixture draws one node per center ({} centers, asked {n})",
                        centers.nrows()
                    )));
                }
                let mu = spec.mu();
                let sd = var_factor.sqrt();
                let mut out = Array2::zeros((n, d));
                for (i, c) in centers.rows().into_iter().enumerate() {
                    let z =
                        Array1::from_iter((0..d).map(|_| rng.sample::<f64, _>(StandardNormal)));
                    let noise = spec.scale_noise(*kernel_time, &z.view()) * sd;
                    for j in 0..d {
                        out[[i, j]] =
                            (1.0 - mean_shrink) * mu[j] + mean_shrink * c[j] + noise[j];
                    }
                }
                Ok(out)
            }
        }
    }
}

/// A frozen Monte Carlo score estimator: fixed nodes, fixed log-ratios,
/// evaluable at any `(t, x)` with `t` in `(0, 1]`.
///
/// Immutable after construction; evaluation is pure and thread-safe.
#[derive(Debug, Clone)]
pub struct ScoreEstimator {
    spec: ForwardSpec,
    nodes: Array2<f64>,
    log_ratios: Array1<f64>,
    white_nodes: Array2<f64>,
    white_mu: Array1<f64>,
    antithetic: bool,
    p0_evals: usize,
}

/// Freeze an estimator from a target, an importance distribution, and the
/// current ensemble.
///
/// `ReuseEnsemble` evaluates at the members themselves; `DrawFresh` draws
/// `N_ens` nodes from `p_is` using `seed`. With `antithetic` every node is
/// paired with its mirror image `-x'` (ratios evaluated at the mirror, the
/// doubled count absorbed in the normalization). The number of target
/// log-density calls is recorded for budget accounting.
pub fn freeze_estimator(
    target: &dyn TargetDensity,
    p_is: &ImportanceDistribution,
    ensemble: &ArrayView2<f64>,
    mode: NodeMode,
    antithetic: bool,
    spec: &ForwardSpec,
    seed: u64,
) -> Result<ScoreEstimator> {
    if ensemble.ncols() != target.dim() || p_is.dim() != target.dim() {
        return Err(Error::DimensionMismatch {
            expected: target.dim(),
            got: ensemble.ncols(),
        });
    }
    let base = match mode {
        NodeMode::ReuseEnsemble => {
            if let ImportanceDistribution::MixtureKernel { .. } = p_is {
                return Err(Error::InvalidConfig(
                    "the kernel-mixture proposal defines its own nodes; use DrawFresh".into(),
                ));
            }
            ensemble.to_owned()
        }
        NodeMode::DrawFresh => {
            let mut rng = stream_rng(seed, 0);
            p_is.sample_nodes(ensemble.nrows(), &mut rng)?
        }
    };
    let nodes = if antithetic {
        let n = base.nrows();
        let mut all = Array2::zeros((2 * n, base.ncols()));
        all.slice_mut(ndarray::s![..n, ..]).assign(&base);
        all.slice_mut(ndarray::s![n.., ..]).assign(&(-&base));
        all
    } else {
        base
    };
    let p0_evals = nodes.nrows();
    let log_p0 = evaluate_target(target, &nodes.view());
    let mut log_ratios = Array1::zeros(nodes.nrows());
    let mut any_finite = false;
    for (i, lp) in log_p0.iter().enumerate() {
        if lp.is_nan() || *lp == f64::INFINITY {
            return Err(Error::InvalidLogDensity);
        }
        let r = lp - p_is.log_density(&nodes.row(i));
        if r.is_finite() {
            any_finite = true;
        }
        log_ratios[i] = r;
    }
    if !any_finite {
        return Err(Error::DegenerateEstimator);
    }
    ScoreEstimator::from_parts(spec.clone(), nodes, log_ratios, antithetic, p0_evals)
}

/// Multiple-importance estimator: one node per ensemble member drawn from
/// the kernel `κ_t(· | x_i)`, weighted against the normalized equal-weight
/// mixture of all member kernels (balance heuristic with one draw per
/// component; algebraically identical to the unnormalized double sum).
pub fn build_mis(
    ensemble: &ArrayView2<f64>,
    t: f64,
    spec: &ForwardSpec,
    target: &dyn TargetDensity,
    antithetic: bool,
    seed: u64,
) -> Result<ScoreEstimator> {
    let p_is = ImportanceDistribution::mixture(ensemble, t, spec)?;
    freeze_estimator(
        target,
        &p_is,
        ensemble,
        NodeMode::DrawFresh,
        antithetic,
        spec,
        seed,
    )
}

/// Evaluate the target at each row, in parallel when the target allows it.
fn evaluate_target(target: &dyn TargetDensity, points: &ArrayView2<f64>) -> Vec<f64> {
    if target.concurrency_safe() && points.nrows() >= 64 {
        let rows: Vec<_> = points.rows().into_iter().collect();
        rows.par_iter().map(|r| target.log_density(r)).collect()
    } else {
        points
            .rows()
            .into_iter()
            .map(|r| target.log_density(&r))
            .collect()
    }
}

impl ScoreEstimator {
    fn from_parts(
        spec: ForwardSpec,
        nodes: Array2<f64>,
        log_ratios: Array1<f64>,
        antithetic: bool,
        p0_evals: usize,
    ) -> Result<Self> {
        let mut white_nodes = Array2::zeros(nodes.dim());
        for (i, row) in nodes.rows().into_iter().enumerate() {
            white_nodes.row_mut(i).assign(&spec.whiten(&row));
        }
        let mu = spec.mu();
        let white_mu = spec.whiten(&mu.view());
        Ok(Self {
            spec,
            nodes,
            log_ratios,
            white_nodes,
            white_mu,
            antithetic,
            p0_evals,
        })
    }

    /// Estimator over explicit nodes and log-ratios (diagnostics/testing).
    pub fn from_nodes(
        spec: &ForwardSpec,
        nodes: Array2<f64>,
        log_ratios: Array1<f64>,
    ) -> Result<Self> {
        if nodes.ncols() != spec.dim() {
            return Err(Error::DimensionMismatch {
                expected: spec.dim(),
                got: nodes.ncols(),
            });
        }
        if nodes.nrows() != log_ratios.len() {
            return Err(Error::DimensionMismatch {
                expected: nodes.nrows(),
                got: log_ratios.len(),
            });
        }
        if log_ratios.iter().any(|r| r.is_nan() || *r == f64::INFINITY) {
            return Err(Error::InvalidLogDensity);
        }
        if !log_ratios.iter().any(|r| r.is_finite()) {
            return Err(Error::DegenerateEstimator);
        }
        Self::from_parts(spec.clone(), nodes, log_ratios, false, 0)
    }

    pub fn node_count(&self) -> usize {
        self.nodes.nrows()
    }

    pub fn nodes(&self) -> &Array2<f64> {
        &self.nodes
    }

    pub fn log_ratios(&self) -> &Array1<f64> {
        &self.log_ratios
    }

    pub fn is_antithetic(&self) -> bool {
        self.antithetic
    }

    /// Target log-density calls spent freezing this estimator.
    pub fn p0_evals(&self) -> usize {
        self.p0_evals
    }

    pub fn spec(&self) -> &ForwardSpec {
        &self.spec
    }

    fn factors(&self, t: f64) -> Result<(f64, f64)> {
        let f = self.spec.kernel_factors(t)?;
        if f.var_factor <= 0.0 {
            return Err(Error::SingularKernel(t));
        }
        Ok((f.mean_shrink, f.var_factor))
    }

    /// Unnormalized exponents `a_i = log κ_t(x|x'_i) + log_ratio_i` up to
    /// the shared constant, plus the whitened offsets needed by the score.
    #[inline]
    fn exponent(
        yoff: &Array1<f64>,
        z: &ArrayView1<f64>,
        shrink: f64,
        var_factor: f64,
        rho: f64,
    ) -> f64 {
        let q: f64 = yoff
            .iter()
            .zip(z.iter())
            .map(|(a, b)| {
                let e = a - shrink * b;
                e * e
            })
            .sum();
        -0.5 * q / var_factor + rho
    }

    /// `log p̂_t(x)`: logsumexp over nodes minus `log N`, with the Gaussian
    /// kernel normalization included.
    pub fn log_p_hat(&self, t: f64, x: &ArrayView1<f64>) -> Result<f64> {
        let (shrink, c) = self.factors(t)?;
        let d = x.len() as f64;
        let y = self.spec.whiten(x);
        let yoff = &y - &(&self.white_mu * (1.0 - shrink));
        let n = self.white_nodes.nrows();

        let mut max = f64::NEG_INFINITY;
        for (z, rho) in self.white_nodes.rows().into_iter().zip(self.log_ratios.iter()) {
            max = max.max(Self::exponent(&yoff, &z, shrink, c, *rho));
        }
        if max == f64::NEG_INFINITY {
            return Ok(f64::NEG_INFINITY);
        }
        let sum = kahan_sum(
            self.white_nodes
                .rows()
                .into_iter()
                .zip(self.log_ratios.iter())
                .map(|(z, rho)| (Self::exponent(&yoff, &z, shrink, c, *rho) - max).exp()),
        );
        let log_det = d * c.ln() + 2.0 * self.spec.log_det_scale();
        Ok(max + sum.ln() - (n as f64).ln()
            - 0.5 * d * (2.0 * std::f64::consts::PI).ln()
            - 0.5 * log_det)
    }

    /// Softmax weights of the nodes at `(t, x)`: nonnegative, sum to one.
    pub fn softmax_weights(&self, t: f64, x: &ArrayView1<f64>) -> Result<Array1<f64>> {
        let (shrink, c) = self.factors(t)?;
        let y = self.spec.whiten(x);
        let yoff = &y - &(&self.white_mu * (1.0 - shrink));
        let mut a = Array1::zeros(self.white_nodes.nrows());
        let mut max = f64::NEG_INFINITY;
        for (i, (z, rho)) in self
            .white_nodes
            .rows()
            .into_iter()
            .zip(self.log_ratios.iter())
            .enumerate()
        {
            a[i] = Self::exponent(&yoff, &z, shrink, c, *rho);
            max = max.max(a[i]);
        }
        let total = kahan_sum(a.iter().map(|v| (v - max).exp()));
        Ok(a.mapv(|v| (v - max).exp() / total))
    }

    /// Score estimate `ŝ_t(x) = ∇ log p̂_t(x)`, computed as the
    /// softmax-weighted sum of Gaussian kernel gradients
    /// `Σ_i w_i Σ_t⁻¹ (μ_t(x'_i) - x)` — the exact gradient of
    /// [`Self::log_p_hat`] in a numerically stable form.
    pub fn score(&self, t: f64, x: &ArrayView1<f64>) -> Result<Array1<f64>> {
        let (shrink, c) = self.factors(t)?;
        let d = x.len();
        let y = self.spec.whiten(x);
        let yoff = &y - &(&self.white_mu * (1.0 - shrink));

        let mut max = f64::NEG_INFINITY;
        for (z, rho) in self.white_nodes.rows().into_iter().zip(self.log_ratios.iter()) {
            max = max.max(Self::exponent(&yoff, &z, shrink, c, *rho));
        }
        if max == f64::NEG_INFINITY {
            return Err(Error::DegenerateEstimator);
        }
        // weighted mean of whitened kernel displacements (m_i - y)
        let mut acc = KahanVec::zeros(d);
        let mut wsum = 0.0;
        let mut wcomp = 0.0;
        let mut disp = vec![0.0; d];
        for (z, rho) in self.white_nodes.rows().into_iter().zip(self.log_ratios.iter()) {
            let a = Self::exponent(&yoff, &z, shrink, c, *rho);
            let w = (a - max).exp();
            for j in 0..d {
                disp[j] = shrink * z[j] - yoff[j];
            }
            acc.add_scaled(w, &disp);
            // Neumaier step for the scalar weight total
            let tmp = wsum + w;
            if wsum.abs() >= w {
                wcomp += (wsum - tmp) + w;
            } else {
                wcomp += (w - tmp) + wsum;
            }
            wsum = tmp;
        }
        let total = wsum + wcomp;
        let grad_white = acc.into_array() / (total * c);
        Ok(self.spec.unwhiten_gradient(&grad_white.view()))
    }
}
