//! Experiment configuration, mirrored field-for-field by the JSON config
//! files. Unknown keys are rejected.

use serde::{Deserialize, Serialize};

use crate::params::{Mode, ModelParams};
use crate::{Error, Result};

/// Which estimators an experiment emits.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorSelection {
    #[default]
    Both,
    DiscreteOnly,
    LimitOnly,
}

/// How discrete environments are drawn: from coupling bundles (common random
/// numbers with the limit estimates) or by direct i.i.d. sampling. The two
/// have identical laws.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvironmentSource {
    #[default]
    Coupled,
    Direct,
}

/// Atom-matching tolerances (location in lattice spacings, weight relative).
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Tolerances {
    pub match_location_mult: f64,
    pub match_weight_rel: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            match_location_mult: 2.0,
            match_weight_rel: 0.05,
        }
    }
}

fn default_walks() -> u64 {
    1
}

fn default_limit_replicas() -> u64 {
    2000
}

fn default_collapse_threshold() -> f64 {
    50.0
}

fn default_grid_step() -> f64 {
    0.01
}

fn default_weight_cutoff() -> f64 {
    0.05
}

fn default_j1_delta() -> f64 {
    0.5
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub params: ModelParams,
    /// Window scales to sweep.
    pub n_list: Vec<u64>,
    /// Window half-width in spatial units.
    pub k: u32,
    /// Aging ratios; defaults depend on the experiment.
    #[serde(default)]
    pub h_list: Vec<f64>,
    /// Environments drawn per scale.
    pub environments: u64,
    /// Walk replicas per environment (annealed estimators keep this at 1).
    #[serde(default = "default_walks")]
    pub walks_per_env: u64,
    /// Replicas of the limit-process estimator.
    #[serde(default = "default_limit_replicas")]
    pub limit_replicas: u64,
    pub master_seed: u64,
    #[serde(default)]
    pub estimators: EstimatorSelection,
    #[serde(default)]
    pub environment_source: EnvironmentSource,
    #[serde(default = "default_collapse_threshold")]
    pub collapse_threshold: f64,
    /// Walls-case speed-measure grid step.
    #[serde(default = "default_grid_step")]
    pub grid_step: f64,
    /// Traps-case speed-measure weight cutoff.
    #[serde(default = "default_weight_cutoff")]
    pub weight_cutoff: f64,
    /// Jump-matching threshold of the J1 diagnostic.
    #[serde(default = "default_j1_delta")]
    pub j1_delta: f64,
    /// Subordinator truncation for the resistance-side path; `None` picks a
    /// scale-aware default.
    #[serde(default)]
    pub sub_epsilon0: Option<f64>,
    #[serde(default)]
    pub sub_epsiloninf: Option<f64>,
    #[serde(default)]
    pub tolerances: Tolerances,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if self.n_list.is_empty() || self.n_list.contains(&0) {
            return Err(Error::InvalidParameter(
                "n_list must be nonempty and positive".into(),
            ));
        }
        if self.k == 0 {
            return Err(Error::InvalidParameter("K must be >= 1".into()));
        }
        if self.environments == 0 || self.walks_per_env == 0 {
            return Err(Error::InvalidParameter(
                "need at least one environment and one walk".into(),
            ));
        }
        if self.h_list.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter(
                "h_list must be strictly increasing".into(),
            ));
        }
        Ok(())
    }

    /// Default aging grid.
    pub fn aging_h_default() -> Vec<f64> {
        vec![1.25, 1.5, 2.0, 4.0]
    }

    /// Default sub-aging grid.
    pub fn subaging_h_default() -> Vec<f64> {
        vec![0.25, 0.5, 1.0, 2.0, 4.0]
    }

    pub fn h_list_or(&self, default: Vec<f64>) -> Vec<f64> {
        if self.h_list.is_empty() {
            default
        } else {
            self.h_list.clone()
        }
    }

    /// Truncation for the resistance-side subordinator: keeps the fill
    /// residual below the marginal-law noise floor at the largest scale.
    pub fn epsilon0(&self) -> f64 {
        self.sub_epsilon0
            .unwrap_or_else(|| auto_epsilon(self.params.alpha0, self.max_n()))
    }

    pub fn epsiloninf(&self) -> f64 {
        let alpha = self.params.alpha_inf.unwrap_or(self.params.alpha0);
        self.sub_epsiloninf
            .unwrap_or_else(|| auto_epsilon(alpha, self.max_n()))
    }

    pub fn max_n(&self) -> u64 {
        self.n_list.iter().copied().max().unwrap_or(1)
    }

    pub fn requires_mode(&self, mode: Mode) -> Result<()> {
        if self.params.mode != mode {
            return Err(Error::InvalidParameter(format!(
                "estimator requires mode {mode:?}"
            )));
        }
        Ok(())
    }
}

/// Truncation threshold with Berry-Esseen residual ~2e-3 at scale `n`:
/// `sqrt(n) * eps^alpha = 2e-3`.
pub fn auto_epsilon(alpha: f64, n: u64) -> f64 {
    (2e-3 / (n as f64).sqrt()).powf(1.0 / alpha)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base_config() -> ExperimentConfig {
        ExperimentConfig {
            params: ModelParams::walls(0.8, 0.0),
            n_list: vec![64, 128],
            k: 2,
            h_list: vec![1.5, 2.0],
            environments: 10,
            walks_per_env: 1,
            limit_replicas: 100,
            master_seed: 1,
            estimators: EstimatorSelection::Both,
            environment_source: EnvironmentSource::Coupled,
            collapse_threshold: 50.0,
            grid_step: 0.01,
            weight_cutoff: 0.05,
            j1_delta: 0.5,
            sub_epsilon0: None,
            sub_epsiloninf: None,
            tolerances: Tolerances::default(),
        }
    }

    #[test]
    fn config_round_trips_and_rejects_unknown_keys() {
        let cfg = base_config();
        let json = serde_json::to_string_pretty(&cfg).unwrap();
        let back: ExperimentConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(back.n_list, cfg.n_list);
        let mut doc: serde_json::Value = serde_json::from_str(&json).unwrap();
        doc.as_object_mut()
            .unwrap()
            .insert("bogus_key".into(), 1.into());
        let res: std::result::Result<ExperimentConfig, _> =
            serde_json::from_value(doc);
        assert!(res.is_err(), "unknown keys must be rejected");
    }

    #[test]
    fn validation_rejects_bad_grids() {
        let mut cfg = base_config();
        cfg.h_list = vec![2.0, 1.5];
        assert!(cfg.validate().is_err());
        let mut cfg = base_config();
        cfg.n_list = vec![];
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn auto_epsilon_scales_with_n() {
        assert!(auto_epsilon(0.8, 4096) < auto_epsilon(0.8, 256));
        // keeps sqrt(n) eps^alpha pinned
        let e = auto_epsilon(0.5, 1024);
        let resid = (1024f64).sqrt() * e.powf(0.5);
        assert!((resid - 2e-3).abs() < 1e-12);
    }
}
