//! Gradient-based MALA and gradient-free random-walk Metropolis–Hastings
//! baselines for comparing against the ensemble sampler.

use crate::error::{Error, Result};
use crate::rng::stream_rng;
use crate::targets::TargetDensity;
use ndarray::{Array1, Array2};
use rand::RngExt;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainConfig {
    pub n_chains: usize,
    /// Steps per chain, including burn-in.
    pub n_steps: usize,
    pub burn_in: usize,
    /// Proposal scale ε.
    pub step_size: f64,
    pub seed: u64,
}

impl ChainConfig {
    fn validate(&self) -> Result<()> {
        if self.n_chains == 0 {
            return Err(Error::InvalidConfig("n_chains must be >= 1".into()));
        }
        if self.n_steps <= self.burn_in {
            return Err(Error::InvalidConfig(format!(
                "n_steps ({}) must exceed burn_in ({})",
                self.n_steps, self.burn_in
            )));
        }
        if self.step_size <= 0.0 {
            return Err(Error::InvalidConfig("step_size must be positive".into()));
        }
        Ok(())
    }
}

/// Post-burn-in samples thinned to the requested count, plus the overall
/// acceptance rate.
#[derive(Debug, Clone)]
pub struct SampleSet {
    pub samples: Array2<f64>,
    pub acceptance_rate: f64,
}

struct ChainOutput {
    kept: Vec<Array1<f64>>,
    accepted: usize,
    proposed: usize,
}

/// Metropolis-adjusted Langevin: proposals
/// `x' = x + (ε²/2) ∇log p(x) + ε ξ` with the asymmetric-proposal
/// correction. Requires the target gradient.
pub fn mala(target: &dyn TargetDensity, cfg: &ChainConfig, n_out: usize) -> Result<SampleSet> {
    cfg.validate()?;
    if target
        .grad_log_density(&Array1::zeros(target.dim()).view())
        .is_none()
    {
        return Err(Error::MissingGradient);
    }
    run_chains(target, cfg, n_out, true)
}

/// Random-walk Metropolis–Hastings with isotropic Gaussian proposals of
/// std ε. Gradient-free.
pub fn rwmh(target: &dyn TargetDensity, cfg: &ChainConfig, n_out: usize) -> Result<SampleSet> {
    cfg.validate()?;
    run_chains(target, cfg, n_out, false)
}

fn run_chains(
    target: &dyn TargetDensity,
    cfg: &ChainConfig,
    n_out: usize,
    langevin: bool,
) -> Result<SampleSet> {
    let d = target.dim();
    let eps = cfg.step_size;
    let chain = |c: usize| -> ChainOutput {
        let mut rng = stream_rng(cfg.seed, c as u64);
        let mut x: Array1<f64> =
            Array1::from_iter((0..d).map(|_| rng.sample::<f64, _>(StandardNormal)));
        let mut log_p = target.log_density(&x.view());
        let mut grad = langevin.then(|| target.grad_log_density(&x.view()).unwrap());
        let mut kept = Vec::with_capacity(cfg.n_steps - cfg.burn_in);
        let mut accepted = 0;
        for step in 0..cfg.n_steps {
            let xi = Array1::from_iter((0..d).map(|_| rng.sample::<f64, _>(StandardNormal)));
            let proposal = if let Some(g) = &grad {
                &x + &(g * (0.5 * eps * eps)) + &(&xi * eps)
            } else {
                &x + &(&xi * eps)
            };
            let log_p_new = target.log_density(&proposal.view());
            let log_alpha = if langevin {
                // q(x'|x) = N(x + (ε²/2) grad(x), ε² I); the reverse move
                // needs the gradient at the proposal
                let grad_new = target.grad_log_density(&proposal.view()).unwrap();
                let fwd_mean = &x + &(grad.as_ref().unwrap() * (0.5 * eps * eps));
                let rev_mean = &proposal + &(&grad_new * (0.5 * eps * eps));
                let log_q = |to: &Array1<f64>, mean: &Array1<f64>| -> f64 {
                    let q: f64 = to
                        .iter()
                        .zip(mean.iter())
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum();
                    -0.5 * q / (eps * eps)
                };
                let a = log_p_new - log_p + log_q(&x, &rev_mean) - log_q(&proposal, &fwd_mean);
                if a.is_nan() {
                    f64::NEG_INFINITY
                } else {
                    a
                }
            } else {
                log_p_new - log_p
            };
            if log_alpha >= 0.0 || rng.random::<f64>() < log_alpha.exp() {
                x = proposal;
                log_p = log_p_new;
                if langevin {
                    grad = Some(target.grad_log_density(&x.view()).unwrap());
                }
                accepted += 1;
            }
            if step >= cfg.burn_in {
                kept.push(x.clone());
            }
        }
        ChainOutput {
            kept,
            accepted,
            proposed: cfg.n_steps,
        }
    };

    let outputs: Vec<ChainOutput> = if target.concurrency_safe() && cfg.n_chains > 1 {
        (0..cfg.n_chains).into_par_iter().map(chain).collect()
    } else {
        (0..cfg.n_chains).map(chain).collect()
    };

    let pool: Vec<&Array1<f64>> = outputs.iter().flat_map(|o| o.kept.iter()).collect();
    if n_out == 0 || pool.len() < n_out {
        return Err(Error::InvalidConfig(format!(
            "requested {n_out} samples but chains produced {}",
            pool.len()
        )));
    }
    // even thinning across the pooled post-burn-in draws
    let stride = pool.len() as f64 / n_out as f64;
    let mut samples = Array2::zeros((n_out, d));
    for k in 0..n_out {
        let idx = (k as f64 * stride) as usize;
        samples.row_mut(k).assign(pool[idx]);
    }
    let accepted: usize = outputs.iter().map(|o| o.accepted).sum();
    let proposed: usize = outputs.iter().map(|o| o.proposed).sum();
    Ok(SampleSet {
        samples,
        acceptance_rate: accepted as f64 / proposed as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::rel_frobenius_distance;
    use crate::targets::{make_gaussian, make_gaussian_ar1, make_mixture3, TargetDensity};
    use ndarray::{ArrayView1, Axis};

    fn cfg(n_chains: usize, n_steps: usize, burn_in: usize, eps: f64) -> ChainConfig {
        ChainConfig {
            n_chains,
            n_steps,
            burn_in,
            step_size: eps,
            seed: 42,
        }
    }

    #[test]
    fn mala_acceptance_approaches_one_for_tiny_steps() {
        let t = make_gaussian(Array1::zeros(1), &Array2::eye(1).view()).unwrap();
        let out = mala(&t, &cfg(1, 4000, 1000, 1e-3), 100).unwrap();
        assert!(
            out.acceptance_rate > 0.995,
            "acceptance {}",
            out.acceptance_rate
        );
    }

    #[test]
    fn mala_recovers_gaussian_covariance() {
        let t = make_gaussian_ar1(5, 0.5).unwrap();
        let out = mala(&t, &cfg(8, 20_000, 5_000, 0.6), 100_000).unwrap();
        assert!(
            (0.2..0.9).contains(&out.acceptance_rate),
            "acceptance {}",
            out.acceptance_rate
        );
        let mean = out.samples.mean_axis(Axis(0)).unwrap();
        let centered = &out.samples - &mean;
        let cov = centered.t().dot(&centered) / out.samples.nrows() as f64;
        let rel = rel_frobenius_distance(&cov.view(), &t.cov().view());
        assert!(rel < 0.10, "covariance off by {rel:.3}");
    }

    #[test]
    fn mala_requires_a_gradient() {
        struct NoGrad;
        impl TargetDensity for NoGrad {
            fn dim(&self) -> usize {
                1
            }
            fn log_density(&self, x: &ArrayView1<f64>) -> f64 {
                -x[0] * x[0]
            }
        }
        assert!(matches!(
            mala(&NoGrad, &cfg(1, 100, 10, 0.1), 10),
            Err(Error::MissingGradient)
        ));
        // but the random walk happily runs gradient-free
        assert!(rwmh(&NoGrad, &cfg(1, 100, 10, 0.5), 10).is_ok());
    }

    #[test]
    fn rwmh_accepts_everything_on_a_flat_density() {
        struct FlatBox;
        impl TargetDensity for FlatBox {
            fn dim(&self) -> usize {
                2
            }
            fn log_density(&self, x: &ArrayView1<f64>) -> f64 {
                if x.iter().all(|v| v.abs() < 1e6) {
                    0.0
                } else {
                    f64::NEG_INFINITY
                }
            }
        }
        let out = rwmh(&FlatBox, &cfg(1, 2000, 100, 0.3), 100).unwrap();
        assert_eq!(out.acceptance_rate, 1.0);
    }

    #[test]
    fn rwmh_acceptance_in_the_classic_band() {
        // 1-d standard normal with ε = 2.4 sits in the 0.3-0.6 band
        let t = make_gaussian(Array1::zeros(1), &Array2::eye(1).view()).unwrap();
        let out = rwmh(&t, &cfg(4, 50_000, 5_000, 2.4), 1000).unwrap();
        assert!(
            (0.3..0.6).contains(&out.acceptance_rate),
            "acceptance {}",
            out.acceptance_rate
        );
    }

    #[test]
    fn rwmh_with_small_steps_fails_to_mix_across_modes() {
        // a deliberately under-scaled proposal traps chains in one mode
        let t = make_mixture3();
        let out = rwmh(&t, &cfg(1, 30_000, 2_000, 0.2), 5_000).unwrap();
        let mut counts = [0usize; 3];
        for row in out.samples.rows() {
            counts[t.nearest_component(&row)] += 1;
        }
        let occupancy: Vec<f64> = counts
            .iter()
            .map(|c| *c as f64 / out.samples.nrows() as f64)
            .collect();
        let worst = occupancy
            .iter()
            .map(|o| (o - 1.0 / 3.0).abs())
            .fold(0.0, f64::max);
        assert!(
            worst > 0.15,
            "expected visible occupancy imbalance, got {occupancy:?}"
        );
    }

    #[test]
    fn chains_satisfy_stationarity_on_a_three_level_density() {
        // piecewise-constant density over three unit cells with weights
        // 1:2:3; long-run occupancy must match
        struct ThreeLevel;
        impl TargetDensity for ThreeLevel {
            fn dim(&self) -> usize {
                1
            }
            fn log_density(&self, x: &ArrayView1<f64>) -> f64 {
                let v = x[0];
                if (0.0..1.0).contains(&v) {
                    0.0
                } else if (1.0..2.0).contains(&v) {
                    2.0f64.ln()
                } else if (2.0..3.0).contains(&v) {
                    3.0f64.ln()
                } else {
                    f64::NEG_INFINITY
                }
            }
        }
        let out = rwmh(&ThreeLevel, &cfg(4, 100_000, 10_000, 0.8), 100_000).unwrap();
        let mut counts = [0usize; 3];
        for row in out.samples.rows() {
            let cell = row[0].floor() as usize;
            counts[cell.min(2)] += 1;
        }
        let total: usize = counts.iter().sum();
        for (k, weight) in [1.0, 2.0, 3.0].iter().enumerate() {
            let got = counts[k] as f64 / total as f64;
            let want = weight / 6.0;
            assert!(
                (got - want).abs() < 0.02,
                "cell {k}: occupancy {got:.3} vs stationary {want:.3}"
            );
        }
    }

    #[test]
    fn mala_samples_the_banana_below_the_energy_threshold() {
        use crate::eval::{energy_distance, self_distance_threshold};
        use crate::targets::make_banana;
        let t = make_banana();
        let out = mala(&t, &cfg(4, 30_000, 5_000, 0.55), 1000).unwrap();
        assert!(
            (0.4..0.8).contains(&out.acceptance_rate),
            "acceptance {}",
            out.acceptance_rate
        );
        let reference = t.sample_reference(1000, 901).unwrap();
        let tau = self_distance_threshold(
            &t.sample_reference(1000, 902).unwrap().view(),
            &t.sample_reference(1000, 903).unwrap().view(),
            1.0,
            200,
            9,
        )
        .unwrap();
        let e = energy_distance(&out.samples.view(), &reference.view(), 1.0, 200, 10).unwrap();
        assert!(
            e.median() < 2.0 * tau,
            "energy {:.4} not below 2 tau ({:.4})",
            e.median(),
            2.0 * tau
        );
    }

    #[test]
    fn runs_are_deterministic_in_the_seed() {
        let t = make_gaussian_ar1(2, 0.3).unwrap();
        let a = mala(&t, &cfg(2, 2000, 500, 0.5), 500).unwrap();
        let b = mala(&t, &cfg(2, 2000, 500, 0.5), 500).unwrap();
        assert_eq!(a.samples, b.samples);
        let c = rwmh(&t, &cfg(2, 2000, 500, 0.5), 500).unwrap();
        let d_run = rwmh(&t, &cfg(2, 2000, 500, 0.5), 500).unwrap();
        assert_eq!(c.samples, d_run.samples);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let t = make_gaussian_ar1(2, 0.3).unwrap();
        assert!(mala(&t, &cfg(0, 100, 10, 0.1), 10).is_err());
        assert!(mala(&t, &cfg(1, 100, 100, 0.1), 10).is_err());
        assert!(mala(&t, &cfg(1, 100, 10, 0.0), 10).is_err());
        // asking for more samples than the chains produce
        assert!(mala(&t, &cfg(1, 100, 50, 0.1), 100).is_err());
    }
}
