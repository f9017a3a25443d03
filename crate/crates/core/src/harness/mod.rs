//! Experiment harness: trains each (experiment, seed) unit with periodic
//! evaluation on the fixed profile, persists logs and aggregates over seeds.

mod eval;
mod runner;
mod spec;
mod store;
mod summary;

pub use eval::{evaluate, evaluation_episode, evaluation_formulation, trace_metrics};
pub use runner::{load_summaries, run_experiment, run_matrix, run_unit, MatrixReport, UnitOutput};
pub use spec::{validate_matrix, ExperimentSpec};
pub use store::{PolicyFile, RunStore, UnitRecord};
pub use summary::{FailedSeed, Moments, RunSummary, SeedRun};
