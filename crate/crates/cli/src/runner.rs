//! Experiment execution and output files.
//!
//! A run writes into the output directory:
//! - `samples.csv` — one row per final sample, header `x1..xD`;
//! - `summary.json` — per-dimension statistics of the samples;
//! - `energy.json` — energy distances to the reference sampler, when the
//!   target provides one (plus the baseline's, when a baseline ran);
//! - `posterior.json` — analytic posterior export for regression targets;
//! - `run_meta.json` — budget, wall time, code version, and a config echo
//!   that re-parses to the original configuration.

use crate::config::{BaselineMethod, ExperimentConfig};
use crate::CliError;
use ens_core::baselines::{mala, rwmh, ChainConfig};
use ens_core::eval::{energy_distance, summarize, EnergyResult};
use ens_core::sampler;
use ndarray::Array2;
use serde::Serialize;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

#[derive(Serialize)]
struct EnergyReport {
    p_norm: f64,
    n_repeats: usize,
    reference_size: usize,
    sampler_vs_reference: EnergyBlock,
    #[serde(skip_serializing_if = "Option::is_none")]
    baseline_vs_reference: Option<EnergyBlock>,
}

#[derive(Serialize)]
struct EnergyBlock {
    median: f64,
    mean: f64,
    values: Vec<f64>,
}

impl EnergyBlock {
    fn from_result(r: &EnergyResult) -> Self {
        Self {
            median: r.median(),
            mean: r.mean(),
            values: r.values.clone(),
        }
    }
}

#[derive(Serialize)]
struct BaselineMeta {
    method: String,
    acceptance_rate: f64,
    n_samples: usize,
    target_evaluations: usize,
}

#[derive(Serialize)]
struct RunMeta<'a> {
    p0_eval_count: usize,
    wall_time_seconds: f64,
    code_version: &'static str,
    resample_times: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    baseline: Option<BaselineMeta>,
    config: &'a ExperimentConfig,
}

pub struct RunOptions {
    pub seed_override: Option<u64>,
    pub output_override: Option<PathBuf>,
}

pub fn run_experiment(config_path: &Path, opts: &RunOptions) -> Result<(), CliError> {
    let text = fs::read_to_string(config_path).map_err(|e| {
        CliError::Config(format!("cannot read {}: {e}", config_path.display()))
    })?;
    let mut config = ExperimentConfig::parse(&text)?;
    if let Some(seed) = opts.seed_override {
        config.seed = seed;
    }
    if let Some(dir) = &opts.output_override {
        config.output_dir = dir.clone();
    }

    let started = Instant::now();
    let target = config.build_target()?;
    let spec = config.build_forward(&target)?;
    let sampler_cfg = config.sampler_config(None);
    let record = sampler::run(&spec, target.density.as_ref(), &sampler_cfg)
        .map_err(CliError::runtime)?;

    let baseline_out = match &config.baseline {
        None => None,
        Some(b) => {
            let chain_cfg = ChainConfig {
                n_chains: b.n_chains,
                n_steps: b.n_steps,
                burn_in: b.burn_in,
                step_size: b.step_size,
                seed: config.seed,
            };
            let out = match b.method {
                BaselineMethod::Mala => mala(target.density.as_ref(), &chain_cfg, config.sampler.n_ens),
                BaselineMethod::Rwmh => rwmh(target.density.as_ref(), &chain_cfg, config.sampler.n_ens),
            }
            .map_err(CliError::runtime)?;
            Some((b.method, b.n_chains * b.n_steps, out))
        }
    };

    let out_dir = &config.output_dir;
    fs::create_dir_all(out_dir)
        .map_err(|e| CliError::Config(format!("cannot create {}: {e}", out_dir.display())))?;

    write_samples_csv(&out_dir.join("samples.csv"), &record.final_ensemble)?;

    let summary =
        summarize(&record.final_ensemble.view()).map_err(CliError::runtime)?;
    write_json(&out_dir.join("summary.json"), &summary)?;

    // energy report when a reference sampler exists
    let reference_size = config
        .eval
        .reference_size
        .unwrap_or(config.sampler.n_ens);
    if let Some(reference) = target
        .density
        .sample_reference(reference_size, config.seed ^ 0x5eed)
    {
        let sampler_energy = energy_distance(
            &record.final_ensemble.view(),
            &reference.view(),
            config.eval.p_norm,
            config.eval.n_repeats,
            config.seed ^ 0xe4a1,
        )
        .map_err(CliError::runtime)?;
        let baseline_energy = baseline_out
            .as_ref()
            .map(|(_, _, out)| {
                energy_distance(
                    &out.samples.view(),
                    &reference.view(),
                    config.eval.p_norm,
                    config.eval.n_repeats,
                    config.seed ^ 0xba5e,
                )
            })
            .transpose()
            .map_err(CliError::runtime)?;
        let report = EnergyReport {
            p_norm: config.eval.p_norm,
            n_repeats: config.eval.n_repeats,
            reference_size,
            sampler_vs_reference: EnergyBlock::from_result(&sampler_energy),
            baseline_vs_reference: baseline_energy.as_ref().map(EnergyBlock::from_result),
        };
        write_json(&out_dir.join("energy.json"), &report)?;
    }

    if let Some(blr) = &target.blr {
        write_json_value(&out_dir.join("posterior.json"), &blr.posterior.to_json())?;
    }

    let meta = RunMeta {
        p0_eval_count: record.p0_eval_count,
        wall_time_seconds: started.elapsed().as_secs_f64(),
        code_version: env!("CARGO_PKG_VERSION"),
        resample_times: record.resample_times.clone(),
        baseline: baseline_out.as_ref().map(|(method, evals, out)| BaselineMeta {
            method: match method {
                BaselineMethod::Mala => "mala".into(),
                BaselineMethod::Rwmh => "rwmh".into(),
            },
            acceptance_rate: out.acceptance_rate,
            n_samples: out.samples.nrows(),
            target_evaluations: *evals,
        }),
        config: &config,
    };
    write_json(&out_dir.join("run_meta.json"), &meta)?;
    Ok(())
}

fn write_samples_csv(path: &Path, samples: &Array2<f64>) -> Result<(), CliError> {
    let mut out = String::new();
    let d = samples.ncols();
    let header: Vec<String> = (1..=d).map(|j| format!("x{j}")).collect();
    out.push_str(&header.join(","));
    out.push('\n');
    for row in samples.rows() {
        let mut first = true;
        for v in row.iter() {
            if !first {
                out.push(',');
            }
            first = false;
            out.push_str(&format!("{v}"));
        }
        out.push('\n');
    }
    fs::File::create(path)
        .and_then(|mut f| f.write_all(out.as_bytes()))
        .map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Config(format!("serialization: {e}")))?;
    fs::write(path, text)
        .map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))
}

fn write_json_value(path: &Path, value: &serde_json::Value) -> Result<(), CliError> {
    write_json(path, value)
}

/// Printable registry of targets, estimators, integrators, and node modes.
pub fn registry_listing() -> String {
    let mut out = String::from("targets:\n");
    for (name, desc) in crate::config::TARGET_NAMES {
        out.push_str(&format!("  {name} — {desc}\n"));
    }
    out.push_str("estimators:\n  gaussian — single Gaussian fitted to the ensemble moments\n");
    out.push_str("  mis — equal-weight mixture of transition kernels, one node per member\n");
    out.push_str("integrators:\n  probability_flow_heun — deterministic flow, Heun corrector\n");
    out.push_str("  reverse_sde_euler_maruyama — stochastic reverse diffusion\n");
    out.push_str("node modes:\n  draw_fresh — sample nodes from the importance distribution\n");
    out.push_str("  reuse_ensemble — evaluate at the ensemble members (default)\n");
    out
}
