//! Reverse-time ensemble integration with periodic estimator refreezes.
//!
//! The run starts from Gaussian draws at `t = 1` and integrates every
//! member backwards to `t ≈ 0`. Time is split into `N_r` equal intervals;
//! at the start of each interval the importance distribution and the score
//! estimator are rebuilt from the current ensemble (the only place the
//! target density is evaluated), then held fixed while all members advance
//! through the interval with fixed step `Δt_init`. The final interval stops
//! at `t_floor = Δt_init / 10` instead of zero, where the transition kernel
//! would be singular.
//!
//! Member `i` owns the random stream `(seed, i)`: results are bit-identical
//! across thread counts, and within one interval a permutation of members
//! (with their streams) permutes the output exactly.

use crate::diffusion::{probability_flow_drift, reverse_drift, ForwardSpec};
use crate::error::{Error, Result};
use crate::rng::{member_rng, stream_rng, AUX_STREAM_BASE};
use crate::score::{build_gaussian_is, build_mis, freeze_estimator, NodeMode, ScoreEstimator};
use crate::targets::TargetDensity;
use ndarray::{Array1, Array2};
use rand::RngExt;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Reverse-time integration scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    /// Euler–Maruyama on the reverse SDE (noise at every step).
    ReverseSdeEulerMaruyama,
    /// Heun predictor-corrector on the deterministic probability flow.
    ProbabilityFlowHeun,
}

/// Importance-distribution family used at each refreeze.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    /// Single Gaussian fitted to the ensemble moments.
    Gaussian,
    /// Equal-weight mixture of transition kernels (one node per member).
    Mis,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub n_ens: usize,
    /// Number of resampling steps `N_r`; the interval length is `1/N_r`.
    pub n_resample: usize,
    /// Fixed integration step `Δt_init`; must not exceed `1/N_r`.
    pub dt_init: f64,
    pub integrator: Integrator,
    pub estimator_kind: EstimatorKind,
    pub antithetic: bool,
    /// Node placement for the Gaussian estimator (ignored by `Mis`, which
    /// always draws one node per member).
    pub node_mode: NodeMode,
    pub seed: u64,
    /// Keep per-interval ensemble snapshots in the run record.
    #[serde(default)]
    pub record_snapshots: bool,
}

impl SamplerConfig {
    fn validate(&self) -> Result<()> {
        if self.n_ens < 2 {
            return Err(Error::EnsembleTooSmall {
                min: 2,
                got: self.n_ens,
            });
        }
        if self.n_resample < 1 {
            return Err(Error::InvalidConfig("n_resample must be >= 1".into()));
        }
        let dt_r = 1.0 / self.n_resample as f64;
        if !(self.dt_init > 0.0 && self.dt_init <= dt_r + 1e-12) {
            return Err(Error::InvalidConfig(format!(
                "dt_init must lie in (0, 1/n_resample = {dt_r}], got {}",
                self.dt_init
            )));
        }
        Ok(())
    }
}

/// Output of one sampler run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    /// Ensemble reported as the `t = 0` sample (integrated to `t_floor`).
    pub final_ensemble: Array2<f64>,
    /// Total target log-density evaluations.
    pub p0_eval_count: usize,
    /// Times at which the estimator was frozen, strictly decreasing.
    pub resample_times: Vec<f64>,
    /// `(t, ensemble)` snapshots at interval boundaries when requested.
    pub snapshots: Option<Vec<(f64, Array2<f64>)>>,
}

/// The backwards time grid of one resampling interval: pairs of
/// `(t, t_next)` with every step equal to `dt` except a shortened last one
/// that lands exactly on `t_end`.
pub fn substep_grid(t_start: f64, t_end: f64, dt: f64) -> Vec<(f64, f64)> {
    debug_assert!(t_start > t_end && dt > 0.0);
    let span = t_start - t_end;
    let ratio = span / dt;
    let k = if (ratio - ratio.round()).abs() < 1e-9 {
        (ratio.round() as usize).max(1)
    } else {
        ratio.ceil() as usize
    };
    let mut grid = Vec::with_capacity(k);
    let mut t = t_start;
    for i in 0..k {
        let t_next = if i + 1 == k {
            t_end
        } else {
            t_start - (i + 1) as f64 * dt
        };
        grid.push((t, t_next));
        t = t_next;
    }
    grid
}

/// Advance every member from `t_start` down to `t_end` under a frozen
/// estimator. Members are independent; each consumes only its own RNG, so
/// the result does not depend on scheduling order. The probability-flow
/// integrator never touches the RNGs.
pub fn integrate_interval(
    spec: &ForwardSpec,
    est: &ScoreEstimator,
    states: &mut [Array1<f64>],
    rngs: &mut [ChaCha8Rng],
    t_start: f64,
    t_end: f64,
    dt: f64,
    integrator: Integrator,
) -> Result<()> {
    let grid = substep_grid(t_start, t_end, dt);
    let results: Vec<Result<()>> = states
        .par_iter_mut()
        .zip_eq(rngs.par_iter_mut())
        .enumerate()
        .map(|(member, (x, rng))| {
            // a score evaluation that underflows every node weight means
            // the member's state has left the representable range
            let blown = |e: Error, time: f64| match e {
                Error::DegenerateEstimator => Error::NonFiniteState { member, time },
                other => other,
            };
            for &(t, t_next) in &grid {
                let step = t - t_next;
                match integrator {
                    Integrator::ReverseSdeEulerMaruyama => {
                        let s_hat = est.score(t, &x.view()).map_err(|e| blown(e, t))?;
                        let drift = reverse_drift(spec, t, &x.view(), &s_hat.view())?;
                        let xi = Array1::from_iter(
                            (0..x.len()).map(|_| rng.sample::<f64, _>(StandardNormal)),
                        );
                        let noise = spec.scale_noise(t, &xi.view());
                        for j in 0..x.len() {
                            x[j] += -step * drift[j] + step.sqrt() * noise[j];
                        }
                    }
                    Integrator::ProbabilityFlowHeun => {
                        let s1 = est.score(t, &x.view()).map_err(|e| blown(e, t))?;
                        let k1 = probability_flow_drift(spec, t, &x.view(), &s1.view())?;
                        let pred = Array1::from_iter(
                            (0..x.len()).map(|j| x[j] - step * k1[j]),
                        );
                        let s2 = est
                            .score(t_next, &pred.view())
                            .map_err(|e| blown(e, t_next))?;
                        let k2 = probability_flow_drift(spec, t_next, &pred.view(), &s2.view())?;
                        for j in 0..x.len() {
                            x[j] -= 0.5 * step * (k1[j] + k2[j]);
                        }
                    }
                }
                if !x.iter().all(|v| v.is_finite()) {
                    return Err(Error::NonFiniteState {
                        member,
                        time: t_next,
                    });
                }
            }
            Ok(())
        })
        .collect();
    for r in results {
        r?;
    }
    Ok(())
}

fn stack(states: &[Array1<f64>]) -> Array2<f64> {
    let d = states[0].len();
    let mut out = Array2::zeros((states.len(), d));
    for (i, s) in states.iter().enumerate() {
        out.row_mut(i).assign(s);
    }
    out
}

/// Initial ensemble at `t = 1`: `N(0, v(1) I)` for zero drift and
/// `N(μ, G Gᵀ)` (the inflated prior) for Ornstein–Uhlenbeck. Member `i`
/// consumes the first draws of its own noise stream.
fn draw_initial(spec: &ForwardSpec, rngs: &mut [ChaCha8Rng]) -> Result<Vec<Array1<f64>>> {
    let d = spec.dim();
    match spec {
        ForwardSpec::ZeroDrift { schedule, .. } => {
            let sd = schedule.accumulated_variance(1.0).sqrt();
            Ok(rngs
                .iter_mut()
                .map(|rng| {
                    Array1::from_iter((0..d).map(|_| sd * rng.sample::<f64, _>(StandardNormal)))
                })
                .collect())
        }
        ForwardSpec::OrnsteinUhlenbeck { mu, .. } => Ok(rngs
            .iter_mut()
            .map(|rng| {
                let z = Array1::from_iter((0..d).map(|_| rng.sample::<f64, _>(StandardNormal)));
                mu + &spec.scale_noise(1.0, &z.view())
            })
            .collect()),
    }
}

/// Run the full reverse diffusion with periodic refreezes.
pub fn run(
    spec: &ForwardSpec,
    target: &dyn TargetDensity,
    cfg: &SamplerConfig,
) -> Result<RunRecord> {
    cfg.validate()?;
    if spec.dim() != target.dim() {
        return Err(Error::DimensionMismatch {
            expected: target.dim(),
            got: spec.dim(),
        });
    }
    let mut rngs: Vec<ChaCha8Rng> = (0..cfg.n_ens)
        .map(|i| member_rng(cfg.seed, i, 0))
        .collect();
    let mut states = draw_initial(spec, &mut rngs)?;

    let dt_r = 1.0 / cfg.n_resample as f64;
    let t_floor = cfg.dt_init / 10.0;
    let mut p0_eval_count = 0;
    let mut resample_times = Vec::with_capacity(cfg.n_resample);
    let mut snapshots = cfg.record_snapshots.then(Vec::new);

    for r in 1..=cfg.n_resample {
        let t_start = 1.0 - (r - 1) as f64 * dt_r;
        let t_end = if r == cfg.n_resample {
            t_floor
        } else {
            1.0 - r as f64 * dt_r
        };
        resample_times.push(t_start);
        let ensemble = stack(&states);
        if let Some(snaps) = snapshots.as_mut() {
            snaps.push((t_start, ensemble.clone()));
        }
        let freeze_seed_rng = cfg.seed;
        let est = match cfg.estimator_kind {
            EstimatorKind::Gaussian => {
                let p_is = build_gaussian_is(&ensemble.view())?;
                freeze_estimator(
                    target,
                    &p_is,
                    &ensemble.view(),
                    cfg.node_mode,
                    cfg.antithetic,
                    spec,
                    freeze_stream(freeze_seed_rng, r),
                )?
            }
            EstimatorKind::Mis => build_mis(
                &ensemble.view(),
                t_start,
                spec,
                target,
                cfg.antithetic,
                freeze_stream(freeze_seed_rng, r),
            )?,
        };
        p0_eval_count += est.p0_evals();
        integrate_interval(
            spec,
            &est,
            &mut states,
            &mut rngs,
            t_start,
            t_end,
            cfg.dt_init,
            cfg.integrator,
        )?;
    }

    let final_ensemble = stack(&states);
    if let Some(snaps) = snapshots.as_mut() {
        snaps.push((t_floor, final_ensemble.clone()));
    }
    Ok(RunRecord {
        final_ensemble,
        p0_eval_count,
        resample_times,
        snapshots,
    })
}

/// Seed for the node draws of refreeze `r`, decoupled from member streams.
fn freeze_stream(seed: u64, r: usize) -> u64 {
    // fold the interval index into a distinct aux-stream seed
    let mut rng = stream_rng(seed, AUX_STREAM_BASE + r as u64);
    rng.random()
}
