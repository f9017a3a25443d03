//! Experiment-matrix config files.
//!
//! A matrix file is TOML. Angles are written in degrees and times in
//! seconds; [`MatrixConfig::specs`] converts them to the radians used
//! internally.
//!
//! ```toml
//! [plant]            # optional, defaults to the surrogate constants
//! dt = 0.1
//!
//! [ppo]              # optional, any PpoConfig field
//! learning_rate = 3e-4
//!
//! [harness]          # optional
//! seeds = [0, 1, 2]
//! eval_interval = 10000
//! threshold_deg = 4.0
//! total_steps = 1000000
//!
//! [[experiment]]
//! name = "baseline"
//!
//! [[experiment]]
//! name = "baseline_normalization"
//! reference = "baseline"
//! [experiment.env]
//! base = "baseline"
//! norm_obs = true
//! norm_action = true
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::agent::PpoConfig;
use crate::env::{FormulationConfig, InitialTiltMode, TargetMode};
use crate::error::{Error, Result};
use crate::harness::{validate_matrix, ExperimentSpec};
use crate::plant::PlantParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    #[default]
    Baseline,
    NewSetting,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetTilt {
    Fixed,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialTilt {
    Zero,
    Random,
}

/// Formulation of one experiment as written in the file: a preset plus
/// overrides. Unset keys keep the preset's value.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvSection {
    #[serde(default)]
    pub base: Preset,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stop_time_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target_tilt: Option<TargetTilt>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub initial_tilt: Option<InitialTilt>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub norm_obs: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub norm_action: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub action_penalty: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target_redraw_prob: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target_range_deg: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub initial_tilt_range_deg: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub penalty_window_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub velocity_norm_scale: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truncation_bound_deg: Option<f64>,
    /// Cap on the remaining-steps factor of the truncation penalty; 0 means
    /// no cap.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truncation_penalty_clamp: Option<u64>,
}

fn deg_range([lo, hi]: [f64; 2]) -> (f64, f64) {
    (lo.to_radians(), hi.to_radians())
}

impl EnvSection {
    pub fn to_formulation(&self) -> FormulationConfig {
        let mut f = match self.base {
            Preset::Baseline => FormulationConfig::baseline(),
            Preset::NewSetting => FormulationConfig::new_setting(),
        };
        if let Some(v) = self.stop_time_s {
            f.stop_time = v;
        }
        if let Some(v) = self.target_tilt {
            f.target_mode = match v {
                TargetTilt::Fixed => TargetMode::FixedProfile,
                TargetTilt::Random => TargetMode::RandomRedraw,
            };
        }
        if let Some(v) = self.initial_tilt {
            f.initial_tilt_mode = match v {
                InitialTilt::Zero => InitialTiltMode::FixedZero,
                InitialTilt::Random => InitialTiltMode::UniformRandom,
            };
        }
        if let Some(v) = self.norm_obs {
            f.normalize_obs = v;
        }
        if let Some(v) = self.norm_action {
            f.normalize_action = v;
        }
        if let Some(v) = self.action_penalty {
            f.action_penalty_coeff = v;
        }
        if let Some(v) = self.target_redraw_prob {
            f.target_redraw_prob = v;
        }
        if let Some(v) = self.target_range_deg {
            f.target_range = deg_range(v);
        }
        if let Some(v) = self.initial_tilt_range_deg {
            f.initial_tilt_range = deg_range(v);
        }
        if let Some(v) = self.penalty_window_s {
            f.penalty_window = v;
        }
        if let Some(v) = self.velocity_norm_scale {
            f.velocity_norm_scale = v;
        }
        if let Some(v) = self.truncation_bound_deg {
            f.truncation_bound = v.to_radians();
        }
        if let Some(v) = self.truncation_penalty_clamp {
            f.truncation_penalty_clamp = (v > 0).then_some(v);
        }
        f
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HarnessSection {
    pub seeds: Vec<u64>,
    pub eval_interval: u64,
    pub threshold_deg: f64,
    pub total_steps: u64,
}

impl Default for HarnessSection {
    fn default() -> Self {
        Self {
            seeds: ExperimentSpec::default_seeds(),
            eval_interval: ExperimentSpec::DEFAULT_EVAL_INTERVAL,
            threshold_deg: ExperimentSpec::DEFAULT_THRESHOLD_DEG,
            total_steps: ExperimentSpec::DEFAULT_TOTAL_STEPS,
        }
    }
}

/// One `[[experiment]]` table. Harness keys set here override `[harness]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentEntry {
    pub name: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seeds: Option<Vec<u64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eval_interval: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold_deg: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub total_steps: Option<u64>,
    #[serde(default)]
    pub env: EnvSection,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixConfig {
    #[serde(default)]
    pub plant: PlantParams,
    #[serde(default)]
    pub ppo: PpoConfig,
    #[serde(default)]
    pub harness: HarnessSection,
    #[serde(default, rename = "experiment")]
    pub experiments: Vec<ExperimentEntry>,
}

impl MatrixConfig {
    /// Parse a matrix file. Errors carry the line and column.
    pub fn parse(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(format!("cannot serialise config: {e}")))
    }

    pub fn names(&self) -> Vec<&str> {
        self.experiments.iter().map(|e| e.name.as_str()).collect()
    }

    /// Resolve every experiment into a validated spec.
    pub fn specs(&self) -> Result<Vec<ExperimentSpec>> {
        let specs: Vec<ExperimentSpec> = self
            .experiments
            .iter()
            .map(|e| ExperimentSpec {
                name: e.name.clone(),
                reference: e.reference.clone(),
                plant: self.plant,
                formulation: e.env.to_formulation(),
                ppo: self.ppo.clone(),
                seeds: e.seeds.clone().unwrap_or_else(|| self.harness.seeds.clone()),
                eval_interval: e.eval_interval.unwrap_or(self.harness.eval_interval),
                threshold_deg: e.threshold_deg.unwrap_or(self.harness.threshold_deg),
                total_steps: e.total_steps.unwrap_or(self.harness.total_steps),
            })
            .collect();
        validate_matrix(&specs)?;
        Ok(specs)
    }
}
