//! Command-line front end: run one experiment or a whole matrix, rebuild
//! the comparison table from logs and emit plot-ready curve CSVs.

mod curves;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use log::{info, warn};

use formulab::config::MatrixConfig;
use formulab::harness::{load_summaries, run_experiment, run_matrix, ExperimentSpec, RunStore};
use formulab::stats::build_table;

pub use curves::{emit_curves, CurveOptions};

#[derive(Debug, Parser)]
#[command(name = "formulab", version, about = "RL problem-formulation lab for a 1-DoF pitch plant")]
pub struct Cli {
    /// Only print warnings and errors.
    #[arg(short, long, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train every seed of one experiment.
    Run(RunArgs),
    /// Train the whole matrix (resumable) and write comparison.csv.
    Matrix(MatrixArgs),
    /// Rebuild summaries and comparison.csv from existing logs.
    Compare(CompareArgs),
    /// Write curves_training.csv and optionally curves_episode.csv.
    EmitCurves(CurvesArgs),
}

#[derive(Debug, Args)]
pub struct OutArg {
    /// Run directory.
    #[arg(long, env = "FORMULAB_OUT", default_value = "runs")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Matrix config file.
    #[arg(long)]
    pub config: PathBuf,
    #[command(flatten)]
    pub out: OutArg,
    /// Worker threads; each runs one (experiment, seed) unit at a time.
    #[arg(long, default_value_t = default_workers())]
    pub parallel: usize,
    /// Comma-separated seeds replacing the configured ones.
    #[arg(long, value_delimiter = ',')]
    pub seeds: Option<Vec<u64>>,
    /// Training steps replacing the configured budget.
    #[arg(long)]
    pub steps: Option<u64>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub train: TrainArgs,
    /// Experiment name from the config.
    #[arg(long)]
    pub name: String,
}

#[derive(Debug, Args)]
pub struct MatrixArgs {
    #[command(flatten)]
    pub train: TrainArgs,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[command(flatten)]
    pub out: OutArg,
    #[arg(long, value_delimiter = ',')]
    pub seeds: Option<Vec<u64>>,
}

#[derive(Debug, Args)]
pub struct CurvesArgs {
    #[command(flatten)]
    pub out: OutArg,
    /// Experiment whose policy is replayed for curves_episode.csv.
    #[arg(long)]
    pub experiment: Option<String>,
    /// Seed of that policy; defaults to the lowest completed seed.
    #[arg(long, requires = "experiment")]
    pub seed: Option<u64>,
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

/// Failure classes, mapped to exit codes 1 (run), 2 (usage) and 3 (io).
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Run(String),
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Run(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

impl From<formulab::Error> for CliError {
    fn from(e: formulab::Error) -> Self {
        use formulab::Error as E;
        match e {
            E::Parse(_) | E::Config(_) => CliError::Usage(e.to_string()),
            E::Io { .. } | E::Csv(_) | E::Json(_) => CliError::Io(e.to_string()),
            _ => CliError::Run(e.to_string()),
        }
    }
}

pub type CliResult = Result<(), CliError>;

fn load_config(path: &Path) -> Result<MatrixConfig, CliError> {
    if !path.is_file() {
        return Err(CliError::Usage(format!("config file {} not found", path.display())));
    }
    MatrixConfig::from_path(path).map_err(|e| match e {
        formulab::Error::Parse(p) => CliError::Usage(format!("{}: {p}", path.display())),
        other => other.into(),
    })
}

fn specs_with_overrides(cfg: &MatrixConfig, seeds: Option<&[u64]>, steps: Option<u64>) -> Result<Vec<ExperimentSpec>, CliError> {
    let mut specs = cfg.specs()?;
    for s in &mut specs {
        if let Some(seeds) = seeds {
            s.seeds = seeds.to_vec();
        }
        if let Some(steps) = steps {
            s.total_steps = steps;
        }
        s.validate()?;
    }
    Ok(specs)
}

fn open_store(out: &Path) -> Result<RunStore, CliError> {
    let store = RunStore::new(out);
    store
        .ensure_writable()
        .map_err(|e| CliError::Io(format!("output directory not writable: {e}")))?;
    Ok(store)
}

pub fn cmd_run(args: &RunArgs) -> CliResult {
    let t = &args.train;
    let cfg = load_config(&t.config)?;
    let specs = specs_with_overrides(&cfg, t.seeds.as_deref(), t.steps)?;
    let spec = specs.into_iter().find(|s| s.name == args.name).ok_or_else(|| {
        CliError::Usage(format!(
            "no experiment named {:?} in {} (available: {})",
            args.name,
            t.config.display(),
            cfg.names().join(", ")
        ))
    })?;
    let store = open_store(&t.out.out)?;
    let summary = run_experiment(&spec, Some(&store), t.parallel)?;
    let total = summary.seeds.len() + summary.failed.len();
    println!(
        "{}: {}/{} seeds completed, {:.0}% reached {}°",
        summary.name,
        summary.seeds.len(),
        total,
        100.0 * summary.success_fraction,
        spec.threshold_deg
    );
    if let Some(d) = summary.final_deviation {
        println!("final deviation {:.2} ± {:.2}° (min {:.2}, max {:.2})", d.mean, d.std, d.min, d.max);
    }
    if let Some(v) = summary.voltage {
        println!("mean |voltage| {:.2} ± {:.2} V", v.mean, v.std);
    }
    println!("summary: {}", store.summary_path(&summary.name).display());
    if summary.seeds.is_empty() {
        return Err(CliError::Run(format!("every seed of {} failed", summary.name)));
    }
    Ok(())
}

pub fn cmd_matrix(args: &MatrixArgs) -> CliResult {
    let t = &args.train;
    let cfg = load_config(&t.config)?;
    let specs = specs_with_overrides(&cfg, t.seeds.as_deref(), t.steps)?;
    let store = open_store(&t.out.out)?;
    let report = run_matrix(&specs, Some(&store), t.parallel)?;
    println!("{}", report.table.render());
    println!(
        "executed {} unit(s), skipped {} already complete, {} failed",
        report.executed,
        report.skipped,
        report.failed_units()
    );
    println!("comparison: {}", store.comparison_path().display());
    if report.total_units() > 0 && report.failed_units() == report.total_units() {
        return Err(CliError::Run("every unit failed".into()));
    }
    Ok(())
}

pub fn cmd_compare(args: &CompareArgs) -> CliResult {
    let cfg = load_config(&args.config)?;
    let specs = specs_with_overrides(&cfg, args.seeds.as_deref(), None)?;
    let store = RunStore::new(&args.out.out);
    if !store.root().is_dir() {
        return Err(CliError::Io(format!("run directory {} does not exist", store.root().display())));
    }
    let summaries = load_summaries(&specs, &store)?;
    if summaries.iter().all(|s| s.seeds.is_empty() && s.failed.is_empty()) {
        return Err(CliError::Run(format!("no run logs found in {}", store.root().display())));
    }
    for s in &summaries {
        if s.seeds.is_empty() && s.failed.is_empty() {
            warn!("{}: no logs, left out of summary files", s.name);
        } else {
            store.write_summary(s)?;
        }
    }
    let stats: Vec<_> = summaries.iter().map(|s| s.to_stats()).collect();
    let table = build_table(&stats)?;
    store.write_comparison(&table)?;
    println!("{}", table.render());
    info!("wrote {}", store.comparison_path().display());
    Ok(())
}

pub fn cmd_emit_curves(args: &CurvesArgs) -> CliResult {
    let options = CurveOptions {
        experiment: args.experiment.clone(),
        seed: args.seed,
    };
    let written = emit_curves(&RunStore::new(&args.out.out), &options)?;
    for path in written {
        println!("wrote {}", path.display());
    }
    Ok(())
}

pub fn run(cli: &Cli) -> CliResult {
    match &cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Matrix(a) => cmd_matrix(a),
        Command::Compare(a) => cmd_compare(a),
        Command::EmitCurves(a) => cmd_emit_curves(a),
    }
}
