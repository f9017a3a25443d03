use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::summary::{FailedSeed, RunSummary, SeedRun};
use crate::agent::{ActorCritic, LogRow, TrainingLog};
use crate::env::FormulationConfig;
use crate::error::{Error, Result};
use crate::plant::PlantParams;
use crate::stats::ComparisonTable;

/// Final policy of one unit plus what is needed to replay it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyFile {
    pub experiment: String,
    pub seed: u64,
    pub plant: PlantParams,
    pub formulation: FormulationConfig,
    pub model: ActorCritic,
}

/// A persisted (experiment, seed) unit.
#[derive(Debug, Clone, PartialEq)]
pub enum UnitRecord {
    Completed(SeedRun),
    Failed(FailedSeed),
}

/// Directory layout of a run tree:
///
/// ```text
/// <root>/<experiment>/<seed>/log.csv
/// <root>/<experiment>/<seed>/policy.json
/// <root>/<experiment>/<seed>/failed.txt     (aborted units only)
/// <root>/<experiment>/summary.csv
/// <root>/comparison.csv
/// ```
///
/// `log.csv` is written last and atomically, so its presence marks a
/// finished unit.
#[derive(Debug, Clone)]
pub struct RunStore {
    root: PathBuf,
}

const LOG: &str = "log.csv";
const POLICY: &str = "policy.json";
const FAILED: &str = "failed.txt";

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

impl RunStore {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Create the root and check that files can be written into it.
    pub fn ensure_writable(&self) -> Result<()> {
        fs::create_dir_all(&self.root).map_err(|e| Error::io(&self.root, e))?;
        let probe = self.root.join(".write_probe");
        fs::write(&probe, b"").map_err(|e| Error::io(&probe, e))?;
        fs::remove_file(&probe).map_err(|e| Error::io(&probe, e))
    }

    pub fn unit_dir(&self, experiment: &str, seed: u64) -> PathBuf {
        self.root.join(experiment).join(seed.to_string())
    }

    pub fn log_path(&self, experiment: &str, seed: u64) -> PathBuf {
        self.unit_dir(experiment, seed).join(LOG)
    }

    pub fn policy_path(&self, experiment: &str, seed: u64) -> PathBuf {
        self.unit_dir(experiment, seed).join(POLICY)
    }

    pub fn summary_path(&self, experiment: &str) -> PathBuf {
        self.root.join(experiment).join("summary.csv")
    }

    pub fn comparison_path(&self) -> PathBuf {
        self.root.join("comparison.csv")
    }

    pub fn is_complete(&self, experiment: &str, seed: u64) -> bool {
        self.log_path(experiment, seed).is_file()
    }

    pub fn is_failed(&self, experiment: &str, seed: u64) -> bool {
        self.unit_dir(experiment, seed).join(FAILED).is_file()
    }

    /// Persist one unit. A failed unit gets a `failed.txt` with the reason
    /// and its partial log; a completed one gets its final policy.
    pub fn save_unit(
        &self,
        experiment: &str,
        seed: u64,
        log: &TrainingLog,
        policy: Option<&PolicyFile>,
        failure: Option<&str>,
    ) -> Result<()> {
        let dir = self.unit_dir(experiment, seed);
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        let failed = dir.join(FAILED);
        match failure {
            Some(reason) => write_atomic(&failed, format!("{reason}\n").as_bytes())?,
            None if failed.exists() => fs::remove_file(&failed).map_err(|e| Error::io(&failed, e))?,
            None => {}
        }
        if let Some(p) = policy {
            write_atomic(&dir.join(POLICY), &serde_json::to_vec(p)?)?;
        }
        let mut buf = Vec::new();
        log.write_csv(&mut buf)?;
        write_atomic(&dir.join(LOG), &buf)
    }

    pub fn read_log(&self, experiment: &str, seed: u64) -> Result<Vec<LogRow>> {
        let path = self.log_path(experiment, seed);
        let file = fs::File::open(&path).map_err(|e| Error::io(&path, e))?;
        TrainingLog::read_csv(file)
    }

    pub fn read_policy(&self, experiment: &str, seed: u64) -> Result<PolicyFile> {
        let path = self.policy_path(experiment, seed);
        let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
        Ok(serde_json::from_slice(&bytes)?)
    }

    /// Reload a finished unit, recomputing its metrics from `log.csv`.
    pub fn load_unit(&self, experiment: &str, seed: u64, threshold_deg: f64) -> Result<Option<UnitRecord>> {
        if !self.is_complete(experiment, seed) {
            return Ok(None);
        }
        let failed = self.unit_dir(experiment, seed).join(FAILED);
        if self.is_failed(experiment, seed) {
            let reason = fs::read_to_string(&failed).map_err(|e| Error::io(&failed, e))?;
            return Ok(Some(UnitRecord::Failed(FailedSeed {
                seed,
                reason: reason.trim().to_string(),
            })));
        }
        let rows = self.read_log(experiment, seed)?;
        Ok(Some(match SeedRun::from_log(seed, &rows, threshold_deg) {
            Some(run) => UnitRecord::Completed(run),
            None => UnitRecord::Failed(FailedSeed {
                seed,
                reason: "log holds no evaluation".into(),
            }),
        }))
    }

    pub fn write_summary(&self, summary: &RunSummary) -> Result<()> {
        let path = self.summary_path(&summary.name);
        let mut buf = Vec::new();
        summary.write_csv(&mut buf)?;
        fs::create_dir_all(self.root.join(&summary.name)).map_err(|e| Error::io(&path, e))?;
        write_atomic(&path, &buf)
    }

    pub fn write_comparison(&self, table: &ComparisonTable) -> Result<()> {
        let mut buf = Vec::new();
        table.write_csv(&mut buf)?;
        write_atomic(&self.comparison_path(), &buf)
    }

    /// Experiment directories, sorted by name.
    pub fn experiments(&self) -> Result<Vec<String>> {
        let mut out = Vec::new();
        let entries = fs::read_dir(&self.root).map_err(|e| Error::io(&self.root, e))?;
        for entry in entries {
            let entry = entry.map_err(|e| Error::io(&self.root, e))?;
            if entry.path().is_dir() {
                if let Some(name) = entry.file_name().to_str() {
                    if !name.starts_with('.') {
                        out.push(name.to_string());
                    }
                }
            }
        }
        out.sort();
        Ok(out)
    }

    /// Seeds of `experiment` that have a log, ascending.
    pub fn seeds(&self, experiment: &str) -> Result<Vec<u64>> {
        let dir = self.root.join(experiment);
        let mut out = Vec::new();
        let entries = fs::read_dir(&dir).map_err(|e| Error::io(&dir, e))?;
        for entry in entries {
            let entry = entry.map_err(|e| Error::io(&dir, e))?;
            if let Some(seed) = entry.file_name().to_str().and_then(|s| s.parse::<u64>().ok()) {
                if self.is_complete(experiment, seed) {
                    out.push(seed);
                }
            }
        }
        out.sort_unstable();
        Ok(out)
    }
}
