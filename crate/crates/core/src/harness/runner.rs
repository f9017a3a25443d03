use log::{info, warn};
use rayon::prelude::*;

use super::eval::evaluate;
use super::spec::{validate_matrix, ExperimentSpec};
use super::store::{PolicyFile, RunStore, UnitRecord};
use super::summary::{FailedSeed, RunSummary, SeedRun};
use crate::agent::{train, ActorCritic, EvalHook, EvalRecord, TrainingLog};
use crate::env::PitchEnv;
use crate::error::{Error, Result};
use crate::stats::{build_table, ComparisonTable};

/// Result of training one (experiment, seed) unit.
#[derive(Debug, Clone)]
pub struct UnitOutput {
    pub record: UnitRecord,
    pub log: TrainingLog,
    pub model: Option<ActorCritic>,
}

/// Train one seed of `spec` with periodic evaluation.
pub fn run_unit(spec: &ExperimentSpec, seed: u64) -> UnitOutput {
    let cfg = spec.training_config();
    let mut hook = |_step: u64, model: &ActorCritic| {
        evaluate(model, &spec.formulation, &spec.plant).unwrap_or(EvalRecord {
            mean_deviation_deg: f64::NAN,
            mean_abs_voltage: f64::NAN,
            truncated: true,
        })
    };
    let make_env = |env_seed| PitchEnv::new(spec.plant, spec.formulation.clone(), env_seed);
    let eval = EvalHook {
        interval: spec.eval_interval,
        run: &mut hook,
    };
    match train(make_env, &cfg, seed, Some(eval)) {
        Ok((model, log)) => {
            let record = match SeedRun::from_log(seed, &log.rows, spec.threshold_deg) {
                Some(run) => UnitRecord::Completed(run),
                None => UnitRecord::Failed(FailedSeed {
                    seed,
                    reason: "no evaluation within the step budget".into(),
                }),
            };
            UnitOutput {
                record,
                log,
                model: Some(model),
            }
        }
        Err(abort) => UnitOutput {
            record: UnitRecord::Failed(FailedSeed {
                seed,
                reason: abort.to_string(),
            }),
            log: abort.log,
            model: None,
        },
    }
}

fn execute_and_save(spec: &ExperimentSpec, seed: u64, store: Option<&RunStore>) -> Result<UnitRecord> {
    info!("{} seed {}: training {} steps", spec.name, seed, spec.total_steps);
    let out = run_unit(spec, seed);
    let failure = match &out.record {
        UnitRecord::Failed(f) => {
            warn!("{} seed {} failed: {}", spec.name, seed, f.reason);
            Some(f.reason.as_str())
        }
        UnitRecord::Completed(r) => {
            info!(
                "{} seed {}: final deviation {:.2}°, |V| {:.2}",
                spec.name, seed, r.final_deviation_deg, r.mean_abs_voltage
            );
            None
        }
    };
    if let Some(store) = store {
        let policy = out.model.as_ref().map(|model| PolicyFile {
            experiment: spec.name.clone(),
            seed,
            plant: spec.plant,
            formulation: spec.formulation.clone(),
            model: model.clone(),
        });
        store.save_unit(&spec.name, seed, &out.log, policy.as_ref(), failure)?;
    }
    Ok(out.record)
}

/// What a matrix run produced.
#[derive(Debug, Clone, Default)]
pub struct MatrixReport {
    pub summaries: Vec<RunSummary>,
    pub table: ComparisonTable,
    /// Units trained in this invocation.
    pub executed: usize,
    /// Units found complete in the store and skipped.
    pub skipped: usize,
}

impl MatrixReport {
    pub fn total_units(&self) -> usize {
        self.executed + self.skipped
    }

    pub fn failed_units(&self) -> usize {
        self.summaries.iter().map(|s| s.failed.len()).sum()
    }
}

struct Executed {
    summaries: Vec<RunSummary>,
    executed: usize,
    skipped: usize,
}

/// Run the pending units of `specs` and aggregate each experiment.
fn execute(specs: &[ExperimentSpec], store: Option<&RunStore>, workers: usize) -> Result<Executed> {
    if let Some(store) = store {
        store.ensure_writable()?;
    }
    let mut records: Vec<Vec<Option<UnitRecord>>> = Vec::with_capacity(specs.len());
    let mut pending = Vec::new();
    for (i, spec) in specs.iter().enumerate() {
        let mut row = Vec::with_capacity(spec.seeds.len());
        for (j, &seed) in spec.seeds.iter().enumerate() {
            let found = match store {
                Some(s) => s.load_unit(&spec.name, seed, spec.threshold_deg)?,
                None => None,
            };
            if found.is_none() {
                pending.push((i, j));
            }
            row.push(found);
        }
        records.push(row);
    }
    let skipped = specs.iter().map(|s| s.seeds.len()).sum::<usize>() - pending.len();
    if skipped > 0 {
        info!("resuming: {skipped} unit(s) already complete, {} to run", pending.len());
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Config(format!("cannot build worker pool: {e}")))?;
    let results: Vec<Result<UnitRecord>> = pool.install(|| {
        pending
            .par_iter()
            .with_max_len(1)
            .map(|&(i, j)| execute_and_save(&specs[i], specs[i].seeds[j], store))
            .collect()
    });
    let executed = pending.len();
    for (&(i, j), result) in pending.iter().zip(results) {
        records[i][j] = Some(result?);
    }

    let summaries: Vec<RunSummary> = specs
        .iter()
        .zip(records)
        .map(|(spec, row)| {
            let (mut done, mut failed) = (Vec::new(), Vec::new());
            for record in row.into_iter().flatten() {
                match record {
                    UnitRecord::Completed(r) => done.push(r),
                    UnitRecord::Failed(f) => failed.push(f),
                }
            }
            RunSummary::aggregate(&spec.name, spec.reference.as_deref(), done, failed)
        })
        .collect();
    if let Some(store) = store {
        for s in &summaries {
            store.write_summary(s)?;
        }
    }
    Ok(Executed {
        summaries,
        executed,
        skipped,
    })
}

/// Run every (experiment, seed) unit on a pool of `workers` threads.
///
/// With a store, finished units are skipped and their metrics reloaded from
/// `log.csv`; new units, `summary.csv` files and `comparison.csv` are
/// written. Each unit's files are written by the worker that ran it; the
/// summaries and the table are built after all units finish.
pub fn run_matrix(specs: &[ExperimentSpec], store: Option<&RunStore>, workers: usize) -> Result<MatrixReport> {
    validate_matrix(specs)?;
    if specs.is_empty() {
        return Ok(MatrixReport::default());
    }
    let done = execute(specs, store, workers)?;
    let stats: Vec<_> = done.summaries.iter().map(RunSummary::to_stats).collect();
    let table = build_table(&stats)?;
    if let Some(store) = store {
        store.write_comparison(&table)?;
    }
    Ok(MatrixReport {
        summaries: done.summaries,
        table,
        executed: done.executed,
        skipped: done.skipped,
    })
}

/// Run all seeds of one experiment. Writes unit files and `summary.csv`
/// but leaves `comparison.csv` alone.
pub fn run_experiment(spec: &ExperimentSpec, store: Option<&RunStore>, workers: usize) -> Result<RunSummary> {
    spec.validate()?;
    let done = execute(std::slice::from_ref(spec), store, workers)?;
    Ok(done.summaries.into_iter().next().expect("one spec, one summary"))
}

/// Rebuild summaries from persisted logs without training. Units without a
/// log are skipped with a warning.
pub fn load_summaries(specs: &[ExperimentSpec], store: &RunStore) -> Result<Vec<RunSummary>> {
    validate_matrix(specs)?;
    specs
        .iter()
        .map(|spec| {
            let (mut done, mut failed) = (Vec::new(), Vec::new());
            for &seed in &spec.seeds {
                match store.load_unit(&spec.name, seed, spec.threshold_deg)? {
                    Some(UnitRecord::Completed(r)) => done.push(r),
                    Some(UnitRecord::Failed(f)) => failed.push(f),
                    None => warn!("{} seed {seed}: no log in {}", spec.name, store.root().display()),
                }
            }
            Ok(RunSummary::aggregate(&spec.name, spec.reference.as_deref(), done, failed))
        })
        .collect()
}
