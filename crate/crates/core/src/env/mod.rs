//! The episodic pitch-tracking MDP and its formulation adapters.
//!
//! [`TrackingTask`] is the raw task: volts in, radians out, reward
//! `−|θ − r|` scaled by the remaining steps on truncation. [`PitchEnv`]
//! stacks the adapters a [`FormulationConfig`] selects on top of it:
//! action denormalisation, the action-smoothness penalty and observation
//! normalisation. Target redraw, random initial tilt and the episode length
//! are properties of the task itself.
//!
//! All angles are radians internally; degrees only appear in [`StepInfo`] and
//! in the config file.

mod adapters;
mod task;

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

pub use adapters::{
    action_penalty, base_reward, denormalize_action, denormalize_observation,
    fixed_profile_target, normalize_observation, redraw_target, truncation_reward,
    PenaltyWindow, PROFILE_DEG, PROFILE_SEGMENT_STEPS,
};
pub use task::{PitchEnv, TrackingTask, Transition};

use crate::error::{Error, Result};
use crate::plant::PlantParams;

/// How the reference pitch evolves during an episode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetMode {
    /// The fixed 80 s evaluation profile.
    FixedProfile,
    /// Uniform redraw with a fixed probability per step.
    RandomRedraw,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialTiltMode {
    FixedZero,
    UniformRandom,
}

/// One problem formulation: every knob that differs between the baseline
/// and the improved setting, plus the constants the adapters need.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormulationConfig {
    /// Episode length in seconds.
    pub stop_time: f64,
    pub target_mode: TargetMode,
    /// Probability per step of redrawing the target (random mode only).
    pub target_redraw_prob: f64,
    /// Target range in radians, `(low, high)`.
    pub target_range: (f64, f64),
    pub initial_tilt_mode: InitialTiltMode,
    /// Initial tilt range in radians, `(low, high)`.
    pub initial_tilt_range: (f64, f64),
    pub normalize_obs: bool,
    pub normalize_action: bool,
    pub action_penalty_coeff: f64,
    /// Length of the action-penalty window in seconds.
    pub penalty_window: f64,
    /// Divisor applied to the per-sample angular velocity when normalising.
    pub velocity_norm_scale: f64,
    /// `|θ|` at which the episode is truncated, radians.
    pub truncation_bound: f64,
    /// Upper bound on the remaining-steps factor of the truncation penalty.
    pub truncation_penalty_clamp: Option<u64>,
}

impl Default for FormulationConfig {
    fn default() -> Self {
        Self::baseline()
    }
}

impl FormulationConfig {
    /// The original formulation: 80 s episodes on the fixed profile, starting
    /// level, raw observations and volts, no penalty.
    pub fn baseline() -> Self {
        let range = (-40f64.to_radians(), 40f64.to_radians());
        Self {
            stop_time: 80.0,
            target_mode: TargetMode::FixedProfile,
            target_redraw_prob: 0.01,
            target_range: range,
            initial_tilt_mode: InitialTiltMode::FixedZero,
            initial_tilt_range: range,
            normalize_obs: false,
            normalize_action: false,
            action_penalty_coeff: 0.0,
            penalty_window: 1.0,
            velocity_norm_scale: 0.2441,
            truncation_bound: FRAC_PI_2,
            truncation_penalty_clamp: None,
        }
    }

    /// The improved formulation with every change applied, including the
    /// 0.25 action penalty.
    pub fn new_setting() -> Self {
        Self {
            stop_time: 100_000.0,
            target_mode: TargetMode::RandomRedraw,
            initial_tilt_mode: InitialTiltMode::UniformRandom,
            normalize_obs: true,
            normalize_action: true,
            action_penalty_coeff: 0.25,
            truncation_penalty_clamp: Some(800),
            ..Self::baseline()
        }
    }

    /// Episode length in samples.
    pub fn episode_steps(&self, dt: f64) -> Result<u64> {
        let ratio = self.stop_time / dt;
        let rounded = ratio.round();
        if !ratio.is_finite() || rounded < 1.0 || (ratio - rounded).abs() > 1e-9 * rounded.max(1.0)
        {
            return Err(Error::Config(format!(
                "stop_time {} s is not a positive multiple of dt {dt} s",
                self.stop_time
            )));
        }
        Ok(rounded as u64)
    }

    /// Number of samples in the action-penalty window.
    pub fn penalty_window_len(&self, dt: f64) -> usize {
        ((self.penalty_window / dt) - 1e-9).ceil().max(1.0) as usize
    }

    pub fn validate(&self, plant: &PlantParams) -> Result<()> {
        self.episode_steps(plant.dt)?;
        if !(0.0..=1.0).contains(&self.target_redraw_prob) {
            return Err(Error::Config(format!(
                "target_redraw_prob {} outside [0, 1]",
                self.target_redraw_prob
            )));
        }
        for (name, (lo, hi)) in [
            ("target_range", self.target_range),
            ("initial_tilt_range", self.initial_tilt_range),
        ] {
            if !(lo <= hi && lo > -FRAC_PI_2 && hi < FRAC_PI_2) {
                return Err(Error::Config(format!(
                    "{name} must be an ordered sub-interval of (-90°, 90°)"
                )));
            }
        }
        if !(self.action_penalty_coeff >= 0.0 && self.action_penalty_coeff.is_finite()) {
            return Err(Error::Config("action_penalty_coeff must be >= 0".into()));
        }
        if !(self.penalty_window > 0.0) {
            return Err(Error::Config("penalty_window must be > 0".into()));
        }
        if !(self.velocity_norm_scale > 0.0) {
            return Err(Error::Config("velocity_norm_scale must be > 0".into()));
        }
        if !(self.truncation_bound > 0.0) {
            return Err(Error::Config("truncation_bound must be > 0".into()));
        }
        Ok(())
    }
}

/// Agent-facing state `(Θ_t, ω_t, r_t)`; raw radians or normalised.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Observation {
    pub pitch: f64,
    /// Per-sample pitch difference `Θ_t − Θ_{t−1}` (not divided by dt).
    pub omega: f64,
    pub target: f64,
}

impl Observation {
    pub const DIM: usize = 3;

    pub fn to_array(self) -> [f64; 3] {
        [self.pitch, self.omega, self.target]
    }
}

/// Raw physical readings attached to every step, independent of normalisation.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StepInfo {
    pub pitch_deg: f64,
    pub target_deg: f64,
    pub voltage: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepResult {
    pub observation: Observation,
    pub reward: f64,
    pub truncated: bool,
    pub done: bool,
    pub info: StepInfo,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_match_parameter_table() {
        let b = FormulationConfig::baseline();
        assert_eq!(b.stop_time, 80.0);
        assert_eq!(b.target_mode, TargetMode::FixedProfile);
        assert_eq!(b.initial_tilt_mode, InitialTiltMode::FixedZero);
        assert!(!b.normalize_obs && !b.normalize_action);
        assert_eq!(b.action_penalty_coeff, 0.0);

        let n = FormulationConfig::new_setting();
        assert_eq!(n.stop_time, 100_000.0);
        assert_eq!(n.target_mode, TargetMode::RandomRedraw);
        assert_eq!(n.initial_tilt_mode, InitialTiltMode::UniformRandom);
        assert!(n.normalize_obs && n.normalize_action);
        assert_eq!(n.action_penalty_coeff, 0.25);
        assert_eq!(n.truncation_penalty_clamp, Some(800));
    }

    #[test]
    fn episode_lengths() {
        let dt = PlantParams::default().dt;
        assert_eq!(FormulationConfig::baseline().episode_steps(dt).unwrap(), 800);
        assert_eq!(
            FormulationConfig::new_setting().episode_steps(dt).unwrap(),
            1_000_000
        );
        let odd = FormulationConfig {
            stop_time: 80.05,
            ..FormulationConfig::baseline()
        };
        assert!(odd.episode_steps(dt).is_err());
        let zero = FormulationConfig {
            stop_time: 0.0,
            ..FormulationConfig::baseline()
        };
        assert!(zero.episode_steps(dt).is_err());
        assert_eq!(FormulationConfig::baseline().penalty_window_len(dt), 10);
    }

    #[test]
    fn validation() {
        let plant = PlantParams::default();
        FormulationConfig::baseline().validate(&plant).unwrap();
        FormulationConfig::new_setting().validate(&plant).unwrap();
        let bad = FormulationConfig {
            target_redraw_prob: 1.5,
            ..FormulationConfig::baseline()
        };
        assert!(bad.validate(&plant).is_err());
        let bad = FormulationConfig {
            target_range: (-1.0, 1.7),
            ..FormulationConfig::baseline()
        };
        assert!(bad.validate(&plant).is_err());
        let bad = FormulationConfig {
            action_penalty_coeff: -0.1,
            ..FormulationConfig::baseline()
        };
        assert!(bad.validate(&plant).is_err());
    }
}
