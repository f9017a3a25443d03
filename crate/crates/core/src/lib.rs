//! Laboratory for studying how the formulation of a reinforcement-learning
//! problem changes training outcome on a 1-DoF pitch plant.
//!
//! The crate is organised bottom-up:
//!
//! - [`plant`]: deterministic surrogate of the pitch dynamics, integrated with RK4.
//! - [`env`]: the episodic tracking task plus the formulation adapters
//!   (normalisation, target redraw, random initial tilt, action penalty).
//! - [`agent`]: PPO with GAE and a Gaussian MLP policy, written against flat
//!   parameter vectors.
//! - [`harness`]: experiment specs, periodic evaluation, per-seed logs and
//!   aggregation over seeds.
//! - [`stats`]: z-score comparison of metric distributions and table building.
//! - [`config`]: the TOML experiment-matrix file format.

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod agent;
pub mod config;
pub mod env;
pub mod error;
pub mod harness;
pub mod plant;
pub mod stats;

pub use agent::{ActorCritic, PpoConfig, TrainingLog};
pub use env::{FormulationConfig, Observation, PitchEnv, StepResult};
pub use error::{Error, Result};
pub use harness::{ExperimentSpec, RunSummary};

pub use plant::{PlantParams, PlantState};
pub use stats::{Comparison, MetricDist, Verdict};

