use std::io;

use serde::{Deserialize, Serialize};

use crate::agent::LogRow;
use crate::error::{Error, Result};
use crate::stats::{ExperimentStats, MetricDist};

/// Outcome of one seed that trained to completion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeedRun {
    pub seed: u64,
    pub steps_to_threshold: Option<u64>,
    pub final_deviation_deg: f64,
    pub mean_abs_voltage: f64,
    /// Whether the last evaluation episode was truncated.
    pub final_truncated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailedSeed {
    pub seed: u64,
    pub reason: String,
}

impl SeedRun {
    /// Derive the per-seed metrics from a training log. `None` if the log
    /// holds no evaluation.
    pub fn from_log(seed: u64, rows: &[LogRow], threshold_deg: f64) -> Option<Self> {
        let evals: Vec<_> = rows.iter().filter_map(|r| r.eval().map(|e| (r.global_step, e))).collect();
        let (_, last) = *evals.last()?;
        let steps_to_threshold = evals
            .iter()
            .find(|(_, e)| e.mean_deviation_deg <= threshold_deg)
            .map(|(step, _)| *step);
        Some(Self {
            seed,
            steps_to_threshold,
            final_deviation_deg: last.mean_deviation_deg,
            mean_abs_voltage: last.mean_abs_voltage,
            final_truncated: last.truncated,
        })
    }
}

/// Population moments of a sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
    pub n: usize,
}

impl Moments {
    pub fn from_samples(samples: &[f64]) -> Option<Self> {
        let d = MetricDist::from_samples(samples)?;
        let min = samples.iter().copied().fold(f64::INFINITY, f64::min);
        let max = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        // Keep min ≤ μ ≤ max under rounding.
        Some(Self {
            mean: d.mean.clamp(min, max),
            std: d.std,
            min,
            max,
            n: d.n,
        })
    }

    pub fn dist(&self) -> MetricDist {
        MetricDist::new(self.mean, self.std, self.n)
    }
}

/// Per-seed results and their aggregates for one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub name: String,
    pub reference: Option<String>,
    pub seeds: Vec<SeedRun>,
    pub failed: Vec<FailedSeed>,
    /// Fraction of completed seeds that reached the threshold.
    pub success_fraction: f64,
    /// Over successful seeds only.
    pub steps_to_threshold: Option<Moments>,
    pub final_deviation: Option<Moments>,
    pub voltage: Option<Moments>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct SummaryRecord {
    scope: String,
    status: String,
    steps_to_threshold: Option<f64>,
    final_deviation_deg: Option<f64>,
    mean_abs_voltage: Option<f64>,
    final_truncated: Option<bool>,
    success_pct: Option<f64>,
}

impl RunSummary {
    /// Aggregate completed seeds; failed seeds are carried but not counted.
    pub fn aggregate(name: &str, reference: Option<&str>, mut seeds: Vec<SeedRun>, mut failed: Vec<FailedSeed>) -> Self {
        seeds.sort_by_key(|s| s.seed);
        failed.sort_by_key(|f| f.seed);
        let steps: Vec<f64> = seeds.iter().filter_map(|s| s.steps_to_threshold.map(|x| x as f64)).collect();
        let dev: Vec<f64> = seeds.iter().map(|s| s.final_deviation_deg).collect();
        let volt: Vec<f64> = seeds.iter().map(|s| s.mean_abs_voltage).collect();
        let success_fraction = if seeds.is_empty() {
            0.0
        } else {
            steps.len() as f64 / seeds.len() as f64
        };
        Self {
            name: name.to_string(),
            reference: reference.map(str::to_string),
            steps_to_threshold: Moments::from_samples(&steps),
            final_deviation: Moments::from_samples(&dev),
            voltage: Moments::from_samples(&volt),
            success_fraction,
            seeds,
            failed,
        }
    }

    /// Inputs for the comparison table. An experiment without completed
    /// seeds yields NaN distributions, which compare as indistinguishable.
    pub fn to_stats(&self) -> ExperimentStats {
        let nan = MetricDist::new(f64::NAN, f64::NAN, 0);
        ExperimentStats {
            name: self.name.clone(),
            reference: self.reference.clone(),
            steps: self.steps_to_threshold.map(|m| m.dist()),
            success_pct: 100.0 * self.success_fraction,
            deviation: self.final_deviation.map_or(nan, |m| m.dist()),
            voltage: self.voltage.map_or(nan, |m| m.dist()),
        }
    }

    /// `summary.csv`: one row per seed, then `mean`, `std`, `min` and `max`
    /// rows over completed seeds.
    pub fn write_csv<W: io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut rows: Vec<(u64, SummaryRecord)> = self
            .seeds
            .iter()
            .map(|s| {
                (
                    s.seed,
                    SummaryRecord {
                        scope: format!("seed:{}", s.seed),
                        status: "ok".into(),
                        steps_to_threshold: s.steps_to_threshold.map(|x| x as f64),
                        final_deviation_deg: Some(s.final_deviation_deg),
                        mean_abs_voltage: Some(s.mean_abs_voltage),
                        final_truncated: Some(s.final_truncated),
                        success_pct: None,
                    },
                )
            })
            .chain(self.failed.iter().map(|f| {
                (
                    f.seed,
                    SummaryRecord {
                        scope: format!("seed:{}", f.seed),
                        status: "failed".into(),
                        steps_to_threshold: None,
                        final_deviation_deg: None,
                        mean_abs_voltage: None,
                        final_truncated: None,
                        success_pct: None,
                    },
                )
            }))
            .collect();
        rows.sort_by_key(|(seed, _)| *seed);
        for (_, rec) in rows {
            w.serialize(rec)?;
        }
        let pick = |m: &Option<Moments>, f: fn(&Moments) -> f64| m.as_ref().map(f);
        type Field = fn(&Moments) -> f64;
        let aggregates: [(&str, Field); 4] = [
            ("mean", |m| m.mean),
            ("std", |m| m.std),
            ("min", |m| m.min),
            ("max", |m| m.max),
        ];
        for (scope, f) in aggregates {
            w.serialize(SummaryRecord {
                scope: scope.into(),
                status: "aggregate".into(),
                steps_to_threshold: pick(&self.steps_to_threshold, f),
                final_deviation_deg: pick(&self.final_deviation, f),
                mean_abs_voltage: pick(&self.voltage, f),
                final_truncated: None,
                success_pct: (scope == "mean").then_some(100.0 * self.success_fraction),
            })?;
        }
        w.flush().map_err(|e| Error::io("summary.csv", e))?;
        Ok(())
    }
}
