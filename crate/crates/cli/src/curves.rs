use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;

use log::warn;

use formulab::harness::{evaluation_episode, RunStore};
use formulab::stats::MetricDist;

use crate::CliError;

#[derive(Debug, Clone, Default)]
pub struct CurveOptions {
    /// Replay this experiment's policy for `curves_episode.csv`.
    pub experiment: Option<String>,
    pub seed: Option<u64>,
}

/// Evaluation deviations of one experiment, keyed by step, one value per seed.
fn eval_series(store: &RunStore, experiment: &str) -> Result<BTreeMap<u64, Vec<f64>>, CliError> {
    let mut series: BTreeMap<u64, Vec<f64>> = BTreeMap::new();
    let seeds = store.seeds(experiment)?;
    let dirs = fs::read_dir(store.root().join(experiment))
        .map_err(|e| CliError::Io(e.to_string()))?
        .filter_map(|e| e.ok())
        .filter(|e| e.path().is_dir() && e.file_name().to_str().is_some_and(|s| s.parse::<u64>().is_ok()))
        .count();
    if dirs > seeds.len() {
        warn!("{experiment}: {} of {dirs} seed directories have no log.csv", dirs - seeds.len());
    }
    let mut used = 0;
    for seed in seeds {
        if store.is_failed(experiment, seed) {
            warn!("{experiment} seed {seed}: training failed, left out of the band");
            continue;
        }
        used += 1;
        for row in store.read_log(experiment, seed)? {
            if let Some(dev) = row.eval_mean_deviation_deg {
                series.entry(row.global_step).or_default().push(dev);
            }
        }
    }
    for (step, values) in &series {
        if values.len() < used {
            warn!("{experiment}: step {step} covered by {} of {used} seeds", values.len());
            break;
        }
    }
    Ok(series)
}

fn fmt(x: f64) -> String {
    format!("{x}")
}

/// Write `curves_training.csv` (per-experiment mean and σ of the evaluation
/// deviation across seeds) and, if an experiment is chosen,
/// `curves_episode.csv` from one evaluation episode of its policy.
pub fn emit_curves(store: &RunStore, options: &CurveOptions) -> Result<Vec<PathBuf>, CliError> {
    let root = store.root();
    if !root.is_dir() {
        return Err(CliError::Io(format!("run directory {} does not exist", root.display())));
    }
    let mut experiments = Vec::new();
    for name in store.experiments()? {
        if !store.seeds(&name)?.is_empty() {
            experiments.push(name);
        }
    }
    if experiments.is_empty() {
        return Err(CliError::Run(format!("no run logs found in {}", root.display())));
    }

    let mut all_steps = BTreeMap::<u64, ()>::new();
    let mut series = Vec::new();
    for name in &experiments {
        let s = eval_series(store, name)?;
        all_steps.extend(s.keys().map(|&k| (k, ())));
        series.push(s);
    }

    let training = root.join("curves_training.csv");
    let mut w = csv::Writer::from_path(&training).map_err(|e| CliError::Io(e.to_string()))?;
    let mut header = vec!["step".to_string()];
    for name in &experiments {
        header.push(format!("{name}_mean"));
        header.push(format!("{name}_std"));
    }
    w.write_record(&header).map_err(|e| CliError::Io(e.to_string()))?;
    for step in all_steps.keys() {
        let mut record = vec![step.to_string()];
        for s in &series {
            match s.get(step).and_then(|v| MetricDist::from_samples(v)) {
                Some(d) => {
                    record.push(fmt(d.mean));
                    record.push(fmt(d.std));
                }
                None => record.extend([String::new(), String::new()]),
            }
        }
        w.write_record(&record).map_err(|e| CliError::Io(e.to_string()))?;
    }
    w.flush().map_err(|e| CliError::Io(e.to_string()))?;
    let mut written = vec![training];

    if let Some(experiment) = &options.experiment {
        let seeds = store.seeds(experiment).unwrap_or_default();
        let seed = match options.seed {
            Some(s) => s,
            None => *seeds
                .iter()
                .find(|&&s| !store.is_failed(experiment, s))
                .ok_or_else(|| CliError::Usage(format!("no completed seed for experiment {experiment:?}")))?,
        };
        let policy = store
            .read_policy(experiment, seed)
            .map_err(|e| CliError::Usage(format!("no policy for {experiment:?} seed {seed}: {e}")))?;
        let (trace, truncated) = evaluation_episode(&policy.model, &policy.formulation, &policy.plant)?;
        if truncated {
            warn!("{experiment} seed {seed}: evaluation episode truncated after {} steps", trace.len());
        }
        let episode = root.join("curves_episode.csv");
        let mut w = csv::Writer::from_path(&episode).map_err(|e| CliError::Io(e.to_string()))?;
        w.write_record(["time_s", "target_deg", "pitch_deg", "voltage_v"])
            .map_err(|e| CliError::Io(e.to_string()))?;
        for (k, s) in trace.iter().enumerate() {
            // Time at the end of the sample that produced the pitch.
            let t = (k + 1) as f64 * policy.plant.dt;
            w.write_record([format!("{t:.1}"), fmt(s.target_deg), fmt(s.pitch_deg), fmt(s.voltage)])
                .map_err(|e| CliError::Io(e.to_string()))?;
        }
        w.flush().map_err(|e| CliError::Io(e.to_string()))?;
        written.push(episode);
    }
    Ok(written)
}
