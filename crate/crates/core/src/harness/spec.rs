use serde::{Deserialize, Serialize};

use crate::agent::PpoConfig;
use crate::env::FormulationConfig;
use crate::error::{Error, Result};
use crate::plant::PlantParams;

/// One experiment of the matrix: a formulation trained over several seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub name: String,
    /// Experiment this one is compared against in the table.
    pub reference: Option<String>,
    pub plant: PlantParams,
    pub formulation: FormulationConfig,
    pub ppo: PpoConfig,
    pub seeds: Vec<u64>,
    pub eval_interval: u64,
    /// Deviation threshold in degrees for steps-to-threshold.
    pub threshold_deg: f64,
    /// Training budget; overrides `ppo.total_steps`.
    pub total_steps: u64,
}

impl ExperimentSpec {
    pub const DEFAULT_EVAL_INTERVAL: u64 = 10_000;
    pub const DEFAULT_THRESHOLD_DEG: f64 = 4.0;
    pub const DEFAULT_TOTAL_STEPS: u64 = 1_000_000;

    pub fn default_seeds() -> Vec<u64> {
        (0..10).collect()
    }

    pub fn new(name: impl Into<String>, formulation: FormulationConfig) -> Self {
        Self {
            name: name.into(),
            reference: None,
            plant: PlantParams::default(),
            formulation,
            ppo: PpoConfig::default(),
            seeds: Self::default_seeds(),
            eval_interval: Self::DEFAULT_EVAL_INTERVAL,
            threshold_deg: Self::DEFAULT_THRESHOLD_DEG,
            total_steps: Self::DEFAULT_TOTAL_STEPS,
        }
    }

    /// PPO settings with the spec's step budget applied.
    pub fn training_config(&self) -> PpoConfig {
        PpoConfig {
            total_steps: self.total_steps,
            ..self.ppo.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(format!("experiment {:?}: {msg}", self.name)));
        if self.name.is_empty() || self.name.contains(['/', '\\']) || self.name.starts_with('.') {
            return fail("name must be non-empty and usable as a directory name".into());
        }
        if self.seeds.is_empty() {
            return fail("seeds must be non-empty".into());
        }
        let mut sorted = self.seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.seeds.len() {
            return fail("seeds must be distinct".into());
        }
        if self.eval_interval == 0 || self.total_steps == 0 {
            return fail("eval_interval and total_steps must be positive".into());
        }
        if !(self.threshold_deg > 0.0) {
            return fail("threshold_deg must be positive".into());
        }
        self.plant.validate()?;
        self.formulation.validate(&self.plant)?;
        self.training_config().validate()
    }
}

/// Reject duplicate names and unknown references.
pub fn validate_matrix(specs: &[ExperimentSpec]) -> Result<()> {
    for (i, spec) in specs.iter().enumerate() {
        spec.validate()?;
        if specs[..i].iter().any(|s| s.name == spec.name) {
            return Err(Error::Config(format!("duplicate experiment name {:?}", spec.name)));
        }
        if let Some(r) = &spec.reference {
            if !specs.iter().any(|s| &s.name == r) {
                return Err(Error::Config(format!("{}: unknown reference {r:?}", spec.name)));
            }
        }
    }
    Ok(())
}
