//! Acceptance suite: every release gate in one sequential run, with one
//! pass/fail line and the elapsed time printed per criterion.
//!
//! Run with `cargo test --test acceptance -- --nocapture` to see the lines.

use ens_core::baselines::{mala, ChainConfig};
use ens_core::diffusion::{ForwardSpec, NoiseSchedule};
use ens_core::eval::{
    energy_distance, energy_distance_exact, pool_rows, self_distance_threshold,
};
use ens_core::linalg;
use ens_core::rng::stream_rng;
use ens_core::sampler::{run, EstimatorKind, Integrator, SamplerConfig};
use ens_core::score::{build_gaussian_is, build_mis, freeze_estimator, NodeMode, ScoreEstimator};
use ens_core::targets::{
    make_banana, make_blr20, make_gaussian, make_gaussian_ar1, make_mixture3, make_ridged,
    Mixture3, TargetDensity,
};
use ndarray::{Array1, Array2, Axis};
use rand::RngExt;
use rand_distr::StandardNormal;
use std::time::Instant;

struct Gate {
    failures: Vec<String>,
}

impl Gate {
    fn new() -> Self {
        Self {
            failures: Vec::new(),
        }
    }

    fn criterion<F: FnOnce() -> Result<String, String>>(
        &mut self,
        id: usize,
        name: &str,
        limit_secs: f64,
        body: F,
    ) {
        let start = Instant::now();
        let outcome = body();
        let elapsed = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => {
                if elapsed <= limit_secs {
                    println!("[PASS] criterion {id}: {name} ({elapsed:.1}s) {detail}");
                } else {
                    println!(
                        "[FAIL] criterion {id}: {name} passed checks but took {elapsed:.1}s > {limit_secs}s"
                    );
                    self.failures
                        .push(format!("criterion {id} exceeded the {limit_secs}s budget"));
                }
            }
            Err(why) => {
                println!("[FAIL] criterion {id}: {name} ({elapsed:.1}s) {why}");
                self.failures.push(format!("criterion {id}: {why}"));
            }
        }
    }
}

fn sample_moments(xs: &Array2<f64>) -> (Array1<f64>, Array2<f64>) {
    let mean = xs.mean_axis(Axis(0)).unwrap();
    let centered = xs - &mean;
    let cov = centered.t().dot(&centered) / xs.nrows() as f64;
    (mean, cov)
}

/// Criterion 1: score-estimator exactness against the analytic convolved
/// Gaussian score, with the 1/sqrt(N) error trend.
fn score_exactness() -> Result<String, String> {
    let sigma0 = 1.1f64;
    let d = 5;
    let target = make_gaussian(Array1::zeros(d), &(Array2::eye(d) * sigma0 * sigma0).view())
        .map_err(|e| e.to_string())?;
    let spec = ForwardSpec::zero_drift(d, NoiseSchedule::new(2.0, 4.0, 5.0).unwrap());
    let freeze = |n: usize, seed: u64| -> ScoreEstimator {
        let ens = target.sample_reference(n, seed).unwrap();
        let p_is = build_gaussian_is(&ens.view()).unwrap();
        freeze_estimator(
            &target,
            &p_is,
            &ens.view(),
            NodeMode::ReuseEnsemble,
            false,
            &spec,
            0,
        )
        .unwrap()
    };

    // 20 random (t, x) points, 5% relative error each at N = 1e4
    let est = freeze(10_000, 42);
    let mut rng = stream_rng(9, 1);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let t = 0.3 + 0.7 * rng.random::<f64>();
        let x =
            Array1::from_iter((0..d).map(|_| sigma0 * rng.sample::<f64, _>(StandardNormal)));
        let v = spec.kernel_factors(t).unwrap().var_factor;
        let expect = x.mapv(|a| -a / (sigma0 * sigma0 + v));
        let got = est.score(t, &x.view()).unwrap();
        let rel = (&got - &expect).mapv(|a| a * a).sum().sqrt()
            / expect.mapv(|a| a * a).sum().sqrt();
        worst = worst.max(rel);
    }
    if worst > 0.05 {
        return Err(format!("worst relative score error {worst:.4} > 0.05"));
    }

    // Monte Carlo trend: error at N = 1e3 at least 1.4x the error at 4e3
    let mut rng = stream_rng(14, 0);
    let points: Vec<(f64, Array1<f64>)> = (0..10)
        .map(|_| {
            let t = 0.3 + 0.7 * rng.random::<f64>();
            let x = Array1::from_iter(
                (0..d).map(|_| sigma0 * rng.sample::<f64, _>(StandardNormal)),
            );
            (t, x)
        })
        .collect();
    let rms_err = |n: usize| -> f64 {
        let mut sq = 0.0;
        let mut count = 0;
        for rep in 0..6u64 {
            let est = freeze(n, 100 + rep);
            for (t, x) in &points {
                let v = spec.kernel_factors(*t).unwrap().var_factor;
                let expect = x.mapv(|a| -a / (sigma0 * sigma0 + v));
                let got = est.score(*t, &x.view()).unwrap();
                sq += (&got - &expect).mapv(|a| a * a).sum() / expect.mapv(|a| a * a).sum();
                count += 1;
            }
        }
        (sq / count as f64).sqrt()
    };
    let e_small = rms_err(1000);
    let e_big = rms_err(4000);
    let ratio = e_small / e_big;
    if ratio < 1.4 {
        return Err(format!(
            "error ratio N=1e3/N=4e3 is {ratio:.2} < 1.4 (e1000 = {e_small:.4}, e4000 = {e_big:.4})"
        ));
    }
    Ok(format!("worst point error {worst:.3}, rate ratio {ratio:.2}"))
}

/// Criterion 2: the score equals finite differences of log_p_hat.
fn gradient_consistency() -> Result<String, String> {
    let mut rng = stream_rng(40, 0);
    let scale = ndarray::array![[1.3, 0.0], [-0.4, 0.7]];
    let mut worst: f64 = 0.0;
    for trial in 0..100 {
        let d = 2;
        let spec = if trial % 2 == 0 {
            ForwardSpec::zero_drift(d, NoiseSchedule::new(0.05, 1.5, 5.0).unwrap())
        } else {
            ForwardSpec::ornstein_uhlenbeck_with_scale(
                0.4,
                ndarray::array![0.3, -0.1],
                scale.clone(),
            )
            .unwrap()
        };
        let n = 1 + (trial % 7);
        let nodes =
            Array2::from_shape_fn((n, d), |_| 2.0 * rng.sample::<f64, _>(StandardNormal));
        let ratios = Array1::from_shape_fn(n, |_| rng.sample::<f64, _>(StandardNormal));
        let est = ScoreEstimator::from_nodes(&spec, nodes, ratios).unwrap();
        let t = [0.1, 0.5, 1.0][trial % 3];
        let x = Array1::from_shape_fn(d, |_| rng.sample::<f64, _>(StandardNormal));
        let s = est.score(t, &x.view()).unwrap();
        let h = 1e-5;
        let mut fd = Array1::zeros(d);
        for j in 0..d {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[j] += h;
            xm[j] -= h;
            fd[j] = (est.log_p_hat(t, &xp.view()).unwrap()
                - est.log_p_hat(t, &xm.view()).unwrap())
                / (2.0 * h);
        }
        let rel = (&s - &fd).mapv(|a| a * a).sum().sqrt()
            / fd.mapv(|a| a * a).sum().sqrt().max(1e-8);
        worst = worst.max(rel);
        if rel > 1e-4 {
            return Err(format!("trial {trial}: fd mismatch {rel:.2e} > 1e-4"));
        }
    }
    Ok(format!("100 trials, worst mismatch {worst:.1e}"))
}

struct ToyCase {
    name: &'static str,
    sigma_min: f64,
    sigma_max: f64,
    dt_init: f64,
    estimator: EstimatorKind,
}

/// Criterion 3: the three 2-d toys sampled with 1000 members and 10
/// refreezes land within twice the same-distribution energy threshold;
/// the mixture occupancies are balanced.
fn two_d_toys() -> Result<String, String> {
    let cases = [
        ToyCase {
            name: "banana",
            sigma_min: 0.01,
            sigma_max: 6.0,
            dt_init: 0.005,
            estimator: EstimatorKind::Mis,
        },
        ToyCase {
            name: "ridged",
            sigma_min: 0.005,
            sigma_max: 6.0,
            dt_init: 0.005,
            estimator: EstimatorKind::Gaussian,
        },
        ToyCase {
            name: "mixture3",
            sigma_min: 0.005,
            sigma_max: 8.0,
            dt_init: 0.0025,
            estimator: EstimatorKind::Gaussian,
        },
    ];
    let mut detail = String::new();
    for case in cases {
        let target: Box<dyn TargetDensity> = match case.name {
            "banana" => Box::new(make_banana()),
            "ridged" => Box::new(make_ridged()),
            _ => Box::new(make_mixture3()),
        };
        let spec = ForwardSpec::zero_drift(
            2,
            NoiseSchedule::new(case.sigma_min, case.sigma_max, 5.0).unwrap(),
        );
        let cfg = SamplerConfig {
            n_ens: 1000,
            n_resample: 10,
            dt_init: case.dt_init,
            integrator: Integrator::ReverseSdeEulerMaruyama,
            estimator_kind: case.estimator,
            antithetic: false,
            node_mode: NodeMode::ReuseEnsemble,
            seed: 1,
            record_snapshots: false,
        };
        let rec = run(&spec, target.as_ref(), &cfg).map_err(|e| e.to_string())?;
        let reference = target.sample_reference(1000, 777).unwrap();
        let tau = self_distance_threshold(
            &target.sample_reference(1000, 778).unwrap().view(),
            &target.sample_reference(1000, 779).unwrap().view(),
            1.0,
            200,
            5,
        )
        .unwrap();
        let e = energy_distance(&rec.final_ensemble.view(), &reference.view(), 1.0, 200, 6)
            .unwrap();
        let med = e.median();
        if med >= 2.0 * tau {
            return Err(format!(
                "{}: energy {med:.4} >= 2 * tau_self ({:.4})",
                case.name,
                2.0 * tau
            ));
        }
        detail.push_str(&format!("{} e/tau={:.2} ", case.name, med / tau));
        if case.name == "mixture3" {
            let t = make_mixture3();
            let mut counts = [0usize; 3];
            for row in rec.final_ensemble.rows() {
                counts[Mixture3::nearest_component(&t, &row)] += 1;
            }
            for (k, c) in counts.iter().enumerate() {
                let occ = *c as f64 / 1000.0;
                if !(0.27..=0.39).contains(&occ) {
                    return Err(format!(
                        "mixture3 mode {k} occupancy {occ:.3} outside 0.33 +/- 0.06"
                    ));
                }
            }
            detail.push_str(&format!("occ={counts:?} "));
        }
    }
    Ok(detail)
}

/// Criterion 4: energy distance vs ensemble size on the 5-d Gaussian,
/// pooled to 4096 samples; antithetic helps at the smallest size.
fn ensemble_size_study() -> Result<String, String> {
    let target = make_gaussian_ar1(5, 0.5).unwrap();
    let spec = ForwardSpec::zero_drift(5, NoiseSchedule::new(0.01, 6.0, 5.0).unwrap());
    let reference = target.sample_reference(4096, 9999).unwrap();
    let pooled = |n_ens: usize, antithetic: bool, seed_base: u64| -> Array2<f64> {
        let n_total = 4096;
        let runs: Vec<Array2<f64>> = (0..n_total / n_ens)
            .map(|r| {
                let cfg = SamplerConfig {
                    n_ens,
                    n_resample: 10,
                    dt_init: 0.005,
                    integrator: Integrator::ReverseSdeEulerMaruyama,
                    estimator_kind: EstimatorKind::Gaussian,
                    antithetic,
                    node_mode: NodeMode::ReuseEnsemble,
                    seed: seed_base + r as u64,
                    record_snapshots: false,
                };
                run(&spec, &target, &cfg).unwrap().final_ensemble
            })
            .collect();
        pool_rows(&runs, n_total)
    };
    let median = |xs: &Array2<f64>| {
        energy_distance(&xs.view(), &reference.view(), 1.0, 200, 4242)
            .unwrap()
            .median()
    };
    // average the medians over three independent replications of the study
    let bases = [100u64, 7000, 15000];
    let avg = |n_ens: usize, anti: bool, offset: u64| -> f64 {
        bases
            .iter()
            .map(|b| median(&pooled(n_ens, anti, b + offset)))
            .sum::<f64>()
            / bases.len() as f64
    };
    let m16 = avg(16, false, 0);
    let m16_anti = avg(16, true, 500);
    let m64 = avg(64, false, 600);
    let m256 = avg(256, false, 700);
    if m16 / m64 < 2.0 {
        return Err(format!(
            "median ratio 16 -> 64 is {:.2} < 2.0 (m16 = {m16:.4}, m64 = {m64:.4})",
            m16 / m64
        ));
    }
    if m64 / m256 < 1.4 {
        return Err(format!(
            "median ratio 64 -> 256 is {:.2} < 1.4 (m64 = {m64:.4}, m256 = {m256:.4})",
            m64 / m256
        ));
    }
    if m16_anti >= m16 {
        return Err(format!(
            "antithetic median {m16_anti:.4} not below plain {m16:.4} at N = 16"
        ));
    }
    Ok(format!(
        "ratios {:.2} / {:.2}, antithetic {m16_anti:.4} < {m16:.4}",
        m16 / m64,
        m64 / m256
    ))
}

/// Criterion 5: the 20-d regression — unlocalized probability flow
/// collapses the posterior variance, while the prior-localized process
/// matches a budget-matched MALA within 2x in energy distance.
fn twenty_d_localization() -> Result<String, String> {
    let problem = make_blr20(0).map_err(|e| e.to_string())?;
    let post = &problem.posterior;
    let target = &problem.target;
    let reference = target.sample_reference(1000, 555).unwrap();

    // plain ensemble, probability flow, isotropic noise (0.1, 10)
    let spec_pf = ForwardSpec::zero_drift(20, NoiseSchedule::new(0.1, 10.0, 5.0).unwrap());
    let cfg_pf = SamplerConfig {
        n_ens: 1000,
        n_resample: 10,
        dt_init: 0.002,
        integrator: Integrator::ProbabilityFlowHeun,
        estimator_kind: EstimatorKind::Gaussian,
        antithetic: false,
        node_mode: NodeMode::ReuseEnsemble,
        seed: 21,
        record_snapshots: false,
    };
    let rec_pf = run(&spec_pf, target, &cfg_pf).map_err(|e| e.to_string())?;
    let (_, cov_pf) = sample_moments(&rec_pf.final_ensemble);
    let std_ratio = (0..20)
        .map(|j| (cov_pf[[j, j]] / post.sigma_hat[[j, j]]).sqrt())
        .sum::<f64>()
        / 20.0;
    if std_ratio >= 0.7 {
        return Err(format!(
            "unlocalized flow should underestimate the posterior std (avg ratio {std_ratio:.3} >= 0.7)"
        ));
    }

    // localized process vs MALA on the same 10,000-evaluation budget
    let spec_loc = ForwardSpec::ornstein_uhlenbeck(
        0.1,
        Array1::zeros(20),
        &post.sigma_prior.view(),
        16.0,
    )
    .map_err(|e| e.to_string())?;
    let cfg_loc = SamplerConfig {
        n_ens: 1000,
        n_resample: 10,
        dt_init: 0.002,
        integrator: Integrator::ReverseSdeEulerMaruyama,
        estimator_kind: EstimatorKind::Gaussian,
        antithetic: false,
        node_mode: NodeMode::ReuseEnsemble,
        seed: 22,
        record_snapshots: false,
    };
    let rec_loc = run(&spec_loc, target, &cfg_loc).map_err(|e| e.to_string())?;
    if rec_loc.p0_eval_count != 10_000 {
        return Err(format!(
            "localized run spent {} target evaluations, expected 10000",
            rec_loc.p0_eval_count
        ));
    }
    let e_loc = energy_distance(&rec_loc.final_ensemble.view(), &reference.view(), 1.0, 200, 6)
        .unwrap()
        .median();

    let cfg_mala = ChainConfig {
        n_chains: 2,
        n_steps: 5000,
        burn_in: 1000,
        step_size: 0.01,
        seed: 5,
    };
    let mala_out = mala(target, &cfg_mala, 1000).map_err(|e| e.to_string())?;
    if !(0.4..=0.7).contains(&mala_out.acceptance_rate) {
        return Err(format!(
            "MALA acceptance {:.2} outside the tuned 0.4-0.7 band",
            mala_out.acceptance_rate
        ));
    }
    let e_mala = energy_distance(&mala_out.samples.view(), &reference.view(), 1.0, 200, 7)
        .unwrap()
        .median();
    if e_loc > 2.0 * e_mala {
        return Err(format!(
            "localized energy {e_loc:.3} exceeds 2x budget-matched MALA ({e_mala:.3})"
        ));
    }
    Ok(format!(
        "collapse ratio {std_ratio:.3}, energy {e_loc:.3} vs MALA {e_mala:.3}"
    ))
}

/// Criterion 6: exact target-evaluation budgets.
fn budget_accounting() -> Result<String, String> {
    let target = make_gaussian_ar1(2, 0.3).unwrap();
    let spec = ForwardSpec::zero_drift(2, NoiseSchedule::new(0.1, 1.5, 5.0).unwrap());
    let mut cfg = SamplerConfig {
        n_ens: 100,
        n_resample: 10,
        dt_init: 0.01,
        integrator: Integrator::ReverseSdeEulerMaruyama,
        estimator_kind: EstimatorKind::Gaussian,
        antithetic: false,
        node_mode: NodeMode::ReuseEnsemble,
        seed: 7,
        record_snapshots: false,
    };
    let rec = run(&spec, &target, &cfg).map_err(|e| e.to_string())?;
    if rec.p0_eval_count != 1000 {
        return Err(format!(
            "default budget {} != N_ens * N_r = 1000",
            rec.p0_eval_count
        ));
    }
    cfg.antithetic = true;
    let rec = run(&spec, &target, &cfg).map_err(|e| e.to_string())?;
    if rec.p0_eval_count != 2000 {
        return Err(format!(
            "antithetic budget {} != 2 * N_ens * N_r = 2000",
            rec.p0_eval_count
        ));
    }
    Ok("1000 / 2000 evaluations as expected".into())
}

/// Criterion 7: the mixture estimator reproduces the literal
/// balance-heuristic double sum (one draw per component) to 1e-12.
fn mis_equivalence() -> Result<String, String> {
    let mut rng = stream_rng(70, 0);
    let mut worst: f64 = 0.0;
    for trial in 0..50u64 {
        let d = 1 + (trial % 3) as usize;
        let target = make_gaussian(
            Array1::from_shape_fn(d, |_| 0.5 * rng.sample::<f64, _>(StandardNormal)),
            &(Array2::eye(d) * (0.5 + rng.random::<f64>())).view(),
        )
        .unwrap();
        let spec = if trial % 2 == 0 {
            ForwardSpec::zero_drift(d, NoiseSchedule::new(0.05, 1.0, 5.0).unwrap())
        } else {
            let mut scale = Array2::eye(d);
            for i in 0..d {
                scale[[i, i]] = 0.6 + rng.random::<f64>();
            }
            ForwardSpec::ornstein_uhlenbeck_with_scale(0.3, Array1::zeros(d), scale).unwrap()
        };
        let n = 2 + (trial % 5) as usize;
        let ens = Array2::from_shape_fn((n, d), |_| rng.sample::<f64, _>(StandardNormal));
        let t_freeze = 0.4 + 0.6 * rng.random::<f64>();
        let est = build_mis(&ens.view(), t_freeze, &spec, &target, false, trial)
            .map_err(|e| e.to_string())?;
        let t_eval = 0.3 + 0.5 * rng.random::<f64>();
        let x = Array1::from_shape_fn(d, |_| rng.sample::<f64, _>(StandardNormal));
        let got = est.log_p_hat(t_eval, &x.view()).unwrap();

        // literal double sum, dense Gaussian densities throughout
        let dense_kappa = |t: f64, at: &Array1<f64>, center: ndarray::ArrayView1<f64>| -> f64 {
            let km = spec.kernel_moments(t).unwrap();
            let mean = km.mean(&center);
            let l = linalg::cholesky(&km.cov.view()).unwrap();
            let diff = at - &mean;
            let w = linalg::solve_lower(&l.view(), &diff.view());
            (-0.5 * w.dot(&w)
                - 0.5 * d as f64 * (2.0 * std::f64::consts::PI).ln()
                - 0.5 * linalg::chol_log_det(&l.view()))
            .exp()
        };
        let mut total = 0.0;
        for i in 0..n {
            let node = est.nodes().row(i).to_owned();
            let denom: f64 = (0..n).map(|j| dense_kappa(t_freeze, &node, ens.row(j))).sum();
            let w_i = dense_kappa(t_freeze, &node, ens.row(i)) / denom;
            let p_is_i = dense_kappa(t_freeze, &node, ens.row(i));
            let p0 = target.log_density(&node.view()).exp();
            total += dense_kappa(t_eval, &x, node.view()) * w_i * p0 / p_is_i;
        }
        let oracle = total.ln();
        let rel = (got - oracle).abs() / oracle.abs().max(1.0);
        worst = worst.max(rel);
        if rel > 1e-12 {
            return Err(format!("trial {trial}:|log difference| {rel:.2e} > 1e-12"));
        }
    }
    Ok(format!("50 instances, worst deviation {worst:.1e}"))
}

/// Criterion 8: energy-distance oracle facts.
fn energy_oracle() -> Result<String, String> {
    let x = ndarray::array![[0.1, 0.2], [0.5, -0.3], [1.0, 0.0]];
    let zero = energy_distance_exact(&x.view(), &x.view(), 1.0).unwrap();
    if zero != 0.0 {
        return Err(format!("identical sets gave {zero}, not 0"));
    }
    let a = ndarray::array![[0.0]];
    let b = ndarray::array![[1.0]];
    let two = energy_distance_exact(&a.view(), &b.view(), 1.0).unwrap();
    if two != 2.0 {
        return Err(format!("two-point case gave {two}, not 2"));
    }
    // closed-form check: X ~ N(0,1), Y ~ N(3,1), p = 2 in one dimension
    let folded = |m: f64, s2: f64| {
        let s = s2.sqrt();
        let phi = (-m * m / (2.0 * s2)).exp() / (2.0 * std::f64::consts::PI).sqrt();
        s * 2.0 * phi + m * erf(m / (s * std::f64::consts::SQRT_2))
    };
    let expect = 2.0 * folded(3.0, 2.0) - 2.0 * folded(0.0, 2.0);
    let gx = make_gaussian(Array1::zeros(1), &Array2::eye(1).view()).unwrap();
    let gy = make_gaussian(ndarray::array![3.0], &Array2::eye(1).view()).unwrap();
    let xs = gx.sample_reference(10_000, 3).unwrap();
    let ys = gy.sample_reference(10_000, 4).unwrap();
    let e = energy_distance_exact(&xs.view(), &ys.view(), 2.0).unwrap();
    let rel = (e - expect).abs() / expect;
    if rel > 0.02 {
        return Err(format!(
            "Gaussian case {e:.4} vs closed form {expect:.4} (off {rel:.3})"
        ));
    }
    Ok(format!("0 exact, 2 exact, Gaussian within {rel:.4}"))
}

fn erf(x: f64) -> f64 {
    let sign = if x < 0.0 { -1.0 } else { 1.0 };
    let x = x.abs();
    let t = 1.0 / (1.0 + 0.3275911 * x);
    let y = 1.0
        - (((((1.061405429 * t - 1.453152027) * t) + 1.421413741) * t - 0.284496736) * t
            + 0.254829592)
            * t
            * (-x * x).exp();
    sign * y
}

/// Criterion 9: bit-identical results across repeated runs and across
/// thread counts.
fn determinism() -> Result<String, String> {
    let target = make_gaussian_ar1(3, 0.4).unwrap();
    let spec = ForwardSpec::zero_drift(3, NoiseSchedule::new(0.05, 2.0, 5.0).unwrap());
    let cfg = SamplerConfig {
        n_ens: 64,
        n_resample: 5,
        dt_init: 0.02,
        integrator: Integrator::ReverseSdeEulerMaruyama,
        estimator_kind: EstimatorKind::Mis,
        antithetic: true,
        node_mode: NodeMode::ReuseEnsemble,
        seed: 31,
        record_snapshots: true,
    };
    let in_pool = |threads: usize| -> ens_core::sampler::RunRecord {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap();
        pool.install(|| run(&spec, &target, &cfg).unwrap())
    };
    let single = in_pool(1);
    let multi = in_pool(4);
    let again = in_pool(4);
    if single != multi {
        return Err("1-thread and 4-thread runs differ".into());
    }
    if multi != again {
        return Err("repeated 4-thread runs differ".into());
    }
    // baselines and the evaluation harness share the same guarantee
    let mala_cfg = ChainConfig {
        n_chains: 4,
        n_steps: 2000,
        burn_in: 500,
        step_size: 0.5,
        seed: 8,
    };
    let a = mala(&target, &mala_cfg, 500).unwrap();
    let b = mala(&target, &mala_cfg, 500).unwrap();
    if a.samples != b.samples {
        return Err("MALA runs with equal seeds differ".into());
    }
    let xs = target.sample_reference(500, 1).unwrap();
    let ys = target.sample_reference(500, 2).unwrap();
    let e1 = energy_distance(&xs.view(), &ys.view(), 1.0, 100, 3).unwrap();
    let e2 = energy_distance(&xs.view(), &ys.view(), 1.0, 100, 3).unwrap();
    if e1.values != e2.values {
        return Err("energy-distance repeats with equal seeds differ".into());
    }
    Ok("sampler, baselines, and evaluation are bit-stable".into())
}

#[test]
fn acceptance_criteria() {
    let mut gate = Gate::new();
    gate.criterion(1, "score-estimator exactness", 30.0, score_exactness);
    gate.criterion(2, "gradient consistency", 10.0, gradient_consistency);
    gate.criterion(3, "two-dimensional toys", 300.0, two_d_toys);
    gate.criterion(4, "ensemble-size study", 600.0, ensemble_size_study);
    gate.criterion(5, "20-d localization", 600.0, twenty_d_localization);
    gate.criterion(6, "budget accounting", 30.0, budget_accounting);
    gate.criterion(7, "mixture-estimator equivalence", 30.0, mis_equivalence);
    gate.criterion(8, "energy-distance oracle", 30.0, energy_oracle);
    gate.criterion(9, "determinism", 120.0, determinism);
    assert!(
        gate.failures.is_empty(),
        "acceptance failures:\n{}",
        gate.failures.join("\n")
    );
}
