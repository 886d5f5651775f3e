//! Experiment configuration: a TOML file with nested sections for the
//! target, the forward process, the sampler, an optional baseline chain,
//! and the evaluation settings.

use ens_core::diffusion::{ForwardSpec, NoiseSchedule};
use ens_core::sampler::{EstimatorKind, Integrator, SamplerConfig};
use ens_core::score::NodeMode;
use ens_core::targets::{
    make_banana, make_blr100_surrogate, make_blr20, make_gaussian_ar1, make_mixture3,
    make_ridged, BlrProblem, TargetDensity,
};
use ndarray::Array2;
use serde::{Deserialize, Serialize};
use std::path::PathBuf;

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub output_dir: PathBuf,
    pub target: TargetConfig,
    pub forward: ForwardConfig,
    pub sampler: SamplerSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline: Option<BaselineConfig>,
    #[serde(default)]
    pub eval: EvalConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetConfig {
    pub name: String,
    /// Dimension for the `gaussian` family.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    /// Neighbor correlation for the `gaussian` family.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    /// Data-generation seed for the regression problems.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data_seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case", tag = "kind")]
pub enum ForwardConfig {
    ZeroDrift {
        sigma_min: f64,
        sigma_max: f64,
        #[serde(default = "default_p")]
        p: f64,
    },
    /// Mean-reverting process whose scale matrix is the Cholesky factor of
    /// `alpha` times the target's prior covariance (regression targets).
    OrnsteinUhlenbeck { theta: f64, alpha: f64 },
}

fn default_p() -> f64 {
    NoiseSchedule::DEFAULT_P
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerSection {
    pub n_ens: usize,
    pub n_resample: usize,
    pub dt_init: f64,
    pub integrator: Integrator,
    pub estimator: EstimatorKind,
    #[serde(default)]
    pub antithetic: bool,
    #[serde(default = "default_node_mode")]
    pub node_mode: NodeMode,
}

fn default_node_mode() -> NodeMode {
    NodeMode::ReuseEnsemble
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaselineConfig {
    pub method: BaselineMethod,
    pub n_chains: usize,
    pub n_steps: usize,
    pub burn_in: usize,
    pub step_size: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineMethod {
    Mala,
    Rwmh,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalConfig {
    #[serde(default = "default_p_norm")]
    pub p_norm: f64,
    #[serde(default = "default_repeats")]
    pub n_repeats: usize,
    /// Reference sample count; defaults to the ensemble size.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_size: Option<usize>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            p_norm: default_p_norm(),
            n_repeats: default_repeats(),
            reference_size: None,
        }
    }
}

fn default_p_norm() -> f64 {
    1.0
}

fn default_repeats() -> usize {
    200
}

/// Registered target names, stable order.
pub const TARGET_NAMES: &[(&str, &str)] = &[
    ("banana", "curved 2-d ridge (params: none)"),
    ("blr100_surrogate", "synthetic 100-d spline regression stand-in (params: data_seed)"),
    ("blr20", "20-d B-spline regression posterior (params: data_seed)"),
    ("gaussian", "correlated Gaussian (params: dim, rho)"),
    ("mixture3", "three separated Gaussian modes (params: none)"),
    ("ridged", "oscillating ridges under a Gaussian envelope (params: none)"),
];

/// A fully constructed experiment target.
pub struct BuiltTarget {
    pub density: Box<dyn TargetDensity>,
    /// Prior covariance, present for the regression problems.
    pub prior_covariance: Option<Array2<f64>>,
    /// The analytic posterior bundle for regression problems.
    pub blr: Option<BlrProblem>,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), CliError> {
        if !TARGET_NAMES.iter().any(|(n, _)| *n == self.target.name) {
            return Err(CliError::Config(format!(
                "target.name: unknown target '{}' (known: {})",
                self.target.name,
                TARGET_NAMES
                    .iter()
                    .map(|(n, _)| *n)
                    .collect::<Vec<_>>()
                    .join(", ")
            )));
        }
        if matches!(self.forward, ForwardConfig::OrnsteinUhlenbeck { .. })
            && !self.target.name.starts_with("blr")
        {
            return Err(CliError::Config(format!(
                "forward.kind = ornstein_uhlenbeck requires a target with a prior covariance \
                 (blr20, blr100_surrogate); got '{}'",
                self.target.name
            )));
        }
        Ok(())
    }

    pub fn build_target(&self) -> Result<BuiltTarget, CliError> {
        let t = &self.target;
        let built = match t.name.as_str() {
            "banana" => BuiltTarget {
                density: Box::new(make_banana()),
                prior_covariance: None,
                blr: None,
            },
            "ridged" => BuiltTarget {
                density: Box::new(make_ridged()),
                prior_covariance: None,
                blr: None,
            },
            "mixture3" => BuiltTarget {
                density: Box::new(make_mixture3()),
                prior_covariance: None,
                blr: None,
            },
            "gaussian" => {
                let dim = t.dim.ok_or_else(|| {
                    CliError::Config("target.dim: required for the gaussian target".into())
                })?;
                let rho = t.rho.unwrap_or(0.5);
                let g = make_gaussian_ar1(dim, rho)
                    .map_err(|e| CliError::Config(format!("target: {e}")))?;
                BuiltTarget {
                    density: Box::new(g),
                    prior_covariance: None,
                    blr: None,
                }
            }
            "blr20" | "blr100_surrogate" => {
                let seed = t.data_seed.unwrap_or(0);
                let problem = if t.name == "blr20" {
                    make_blr20(seed)
                } else {
                    make_blr100_surrogate(seed)
                }
                .map_err(|e| CliError::Config(format!("target: {e}")))?;
                BuiltTarget {
                    density: Box::new(problem.target.clone()),
                    prior_covariance: Some(problem.posterior.sigma_prior.clone()),
                    blr: Some(problem),
                }
            }
            other => {
                return Err(CliError::Config(format!(
                    "target.name: unknown target '{other}'"
                )))
            }
        };
        Ok(built)
    }

    pub fn build_forward(&self, target: &BuiltTarget) -> Result<ForwardSpec, CliError> {
        let dim = target.density.dim();
        match &self.forward {
            ForwardConfig::ZeroDrift {
                sigma_min,
                sigma_max,
                p,
            } => {
                let schedule = NoiseSchedule::new(*sigma_min, *sigma_max, *p)
                    .map_err(|e| CliError::Config(format!("forward: {e}")))?;
                Ok(ForwardSpec::zero_drift(dim, schedule))
            }
            ForwardConfig::OrnsteinUhlenbeck { theta, alpha } => {
                let prior = target.prior_covariance.as_ref().ok_or_else(|| {
                    CliError::Config(
                        "forward.kind = ornstein_uhlenbeck requires a prior covariance".into(),
                    )
                })?;
                ForwardSpec::ornstein_uhlenbeck(
                    *theta,
                    ndarray::Array1::zeros(dim),
                    &prior.view(),
                    *alpha,
                )
                .map_err(|e| CliError::Config(format!("forward: {e}")))
            }
        }
    }

    pub fn sampler_config(&self, seed_override: Option<u64>) -> SamplerConfig {
        SamplerConfig {
            n_ens: self.sampler.n_ens,
            n_resample: self.sampler.n_resample,
            dt_init: self.sampler.dt_init,
            integrator: self.sampler.integrator,
            estimator_kind: self.sampler.estimator,
            antithetic: self.sampler.antithetic,
            node_mode: self.sampler.node_mode,
            seed: seed_override.unwrap_or(self.seed),
            record_snapshots: false,
        }
    }
}
