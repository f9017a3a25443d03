use std::io;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::adam::Adam;
use super::gae::RolloutBuffer;
use super::policy::{sample_action, ActorCritic, ForwardCache};
use super::ppo::{ppo_update, PpoConfig, PpoWorkspace, UpdateDiagnostics};
use crate::env::{Observation, PitchEnv};
use crate::error::{Error, Result};

/// Result of one evaluation episode, as recorded in the training log.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub mean_deviation_deg: f64,
    pub mean_abs_voltage: f64,
    pub truncated: bool,
}

/// One line of `log.csv`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogRow {
    pub global_step: u64,
    /// Mean return of the episodes that finished since the previous row.
    pub episode_return: Option<f64>,
    pub eval_mean_deviation_deg: Option<f64>,
    pub eval_mean_abs_voltage: Option<f64>,
    /// Diagnostics of the most recent PPO update.
    pub clip_fraction: Option<f64>,
    pub approx_kl: Option<f64>,
    pub eval_truncated: Option<bool>,
}

impl LogRow {
    pub fn eval(&self) -> Option<EvalRecord> {
        Some(EvalRecord {
            mean_deviation_deg: self.eval_mean_deviation_deg?,
            mean_abs_voltage: self.eval_mean_abs_voltage?,
            truncated: self.eval_truncated.unwrap_or(false),
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingLog {
    pub rows: Vec<LogRow>,
    pub updates: usize,
    pub episodes: usize,
    pub steps: u64,
}

impl TrainingLog {
    pub const COLUMNS: [&'static str; 7] = [
        "global_step",
        "episode_return",
        "eval_mean_deviation_deg",
        "eval_mean_abs_voltage",
        "clip_fraction",
        "approx_kl",
        "eval_truncated",
    ];

    pub fn write_csv<W: io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        if self.rows.is_empty() {
            w.write_record(Self::COLUMNS)?;
        }
        for row in &self.rows {
            w.serialize(row)?;
        }
        w.flush().map_err(|e| Error::io("log.csv", e))?;
        Ok(())
    }

    pub fn read_csv<R: io::Read>(reader: R) -> Result<Vec<LogRow>> {
        let mut r = csv::Reader::from_reader(reader);
        r.deserialize().map(|row| row.map_err(Error::from)).collect()
    }

    /// Evaluation records in step order.
    pub fn evaluations(&self) -> impl Iterator<Item = (u64, EvalRecord)> + '_ {
        self.rows.iter().filter_map(|r| r.eval().map(|e| (r.global_step, e)))
    }
}

/// Training stopped early; carries the log written so far.
#[derive(Debug)]
pub struct TrainAbort {
    pub error: Error,
    pub log: TrainingLog,
}

impl std::fmt::Display for TrainAbort {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "training aborted after {} steps: {}", self.log.steps, self.error)
    }
}

impl std::error::Error for TrainAbort {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.error)
    }
}

/// Periodic evaluation hook: called with the global step and current model
/// every `interval` environment steps.
pub struct EvalHook<'a> {
    pub interval: u64,
    pub run: &'a mut dyn FnMut(u64, &ActorCritic) -> EvalRecord,
}

#[allow(clippy::result_large_err)]
/// Train a fresh policy with PPO.
///
/// Rollouts of `n_steps` are collected until at least `total_steps`
/// environment steps have been taken; each rollout is followed by one
/// update. `make_env` receives a seed derived from `seed`. Everything is
/// deterministic in `seed`.
pub fn train<F>(
    make_env: F,
    cfg: &PpoConfig,
    seed: u64,
    mut eval: Option<EvalHook<'_>>,
) -> std::result::Result<(ActorCritic, TrainingLog), TrainAbort>
where
    F: FnOnce(u64) -> Result<PitchEnv>,
{
    let mut log = TrainingLog::default();
    let abort = |error: Error, log: TrainingLog| TrainAbort { error, log };
    if let Err(e) = cfg.validate() {
        return Err(abort(e, log));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut model = ActorCritic::init(Observation::DIM, &cfg.hidden, cfg.log_std_init, &mut rng);
    let mut env = match make_env(rng.gen()) {
        Ok(env) => env,
        Err(e) => return Err(abort(e, log)),
    };
    let mut adam = Adam::new(model.num_params(), cfg.learning_rate);
    let mut buffer = RolloutBuffer::new(cfg.n_steps);
    let mut ws = PpoWorkspace::default();
    let mut cache = ForwardCache::default();

    let mut obs = env.reset();
    let mut episode_return = 0.0;
    let mut finished: Vec<f64> = Vec::new();
    let mut last_update: Option<UpdateDiagnostics> = None;

    let flush_row = |log: &mut TrainingLog,
                         finished: &mut Vec<f64>,
                         eval: Option<EvalRecord>,
                         last: Option<UpdateDiagnostics>| {
        let episode_return =
            (!finished.is_empty()).then(|| finished.iter().sum::<f64>() / finished.len() as f64);
        finished.clear();
        log.rows.push(LogRow {
            global_step: log.steps,
            episode_return,
            eval_mean_deviation_deg: eval.map(|e| e.mean_deviation_deg),
            eval_mean_abs_voltage: eval.map(|e| e.mean_abs_voltage),
            clip_fraction: last.map(|d| d.clip_fraction),
            approx_kl: last.map(|d| d.approx_kl),
            eval_truncated: eval.map(|e| e.truncated),
        });
    };

    while log.steps < cfg.total_steps {
        buffer.clear();
        while !buffer.is_full() {
            let out = model.forward_obs(&obs, &mut cache);
            let (action, log_prob) = sample_action(out.mean, out.log_std, &mut rng);
            let step = match env.step(action) {
                Ok(s) => s,
                Err(e) => return Err(abort(e, log)),
            };
            log.steps += 1;
            episode_return += step.reward;
            buffer.push(&obs, action, step.reward, out.value, log_prob, step.done);
            if step.done {
                finished.push(episode_return);
                log.episodes += 1;
                episode_return = 0.0;
                obs = env.reset();
            } else {
                obs = step.observation;
            }
            if let Some(hook) = eval.as_mut() {
                if log.steps % hook.interval == 0 {
                    let record = (hook.run)(log.steps, &model);
                    flush_row(&mut log, &mut finished, Some(record), last_update);
                }
            }
        }

        let last_value = model.forward_obs(&obs, &mut cache).value;
        buffer.compute_returns_and_advantages(last_value, cfg.gamma, cfg.gae_lambda);
        match ppo_update(&mut model, &mut adam, &buffer, cfg, &mut ws, &mut rng) {
            Ok(d) => last_update = Some(d),
            Err(e) => return Err(abort(e, log)),
        }
        log.updates += 1;
        if eval.is_none() {
            flush_row(&mut log, &mut finished, None, last_update);
        }
    }
    Ok((model, log))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::FormulationConfig;
    use crate::plant::PlantParams;

    fn small_cfg(total: u64) -> PpoConfig {
        PpoConfig {
            n_steps: 256,
            batch_size: 64,
            n_epochs: 2,
            hidden: vec![16, 16],
            total_steps: total,
            ..Default::default()
        }
    }

    fn make(seed: u64) -> Result<PitchEnv> {
        PitchEnv::new(PlantParams::default(), FormulationConfig::new_setting(), seed)
    }

    #[test]
    fn update_count_follows_rollout_length() {
        let cfg = PpoConfig {
            n_steps: 2048,
            hidden: vec![8],
            n_epochs: 1,
            total_steps: 4096,
            ..Default::default()
        };
        let (_, log) = train(make, &cfg, 0, None).unwrap();
        assert_eq!(log.updates, 2);
        assert_eq!(log.steps, 4096);
        assert_eq!(log.rows.len(), 2);
    }

    #[test]
    fn same_seed_same_log() {
        let cfg = small_cfg(1024);
        let run = |seed| {
            let mut calls = 0u64;
            let mut hook = |step: u64, m: &ActorCritic| {
                calls += 1;
                EvalRecord {
                    mean_deviation_deg: step as f64 + m.params[0],
                    mean_abs_voltage: m.log_std(),
                    truncated: false,
                }
            };
            let (model, log) = train(
                make,
                &cfg,
                seed,
                Some(EvalHook {
                    interval: 256,
                    run: &mut hook,
                }),
            )
            .unwrap();
            (model, log, calls)
        };
        let (ma, la, ca) = run(4);
        let (mb, lb, _) = run(4);
        assert_eq!(ma, mb);
        assert_eq!(la, lb);
        assert_eq!(ca, 4);
        let (mc, _, _) = run(5);
        assert_ne!(ma, mc);

        let mut a = Vec::new();
        la.write_csv(&mut a).unwrap();
        let mut b = Vec::new();
        lb.write_csv(&mut b).unwrap();
        assert_eq!(a, b);
        let parsed = TrainingLog::read_csv(a.as_slice()).unwrap();
        assert_eq!(parsed, la.rows);
    }

    #[test]
    fn csv_header_is_stable() {
        let log = TrainingLog {
            rows: vec![LogRow {
                global_step: 10,
                episode_return: None,
                eval_mean_deviation_deg: Some(3.5),
                eval_mean_abs_voltage: Some(4.0),
                clip_fraction: None,
                approx_kl: None,
                eval_truncated: Some(false),
            }],
            ..Default::default()
        };
        let mut buf = Vec::new();
        log.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let header = text.lines().next().unwrap();
        assert_eq!(header, TrainingLog::COLUMNS.join(","));
        assert_eq!(text.lines().nth(1).unwrap(), "10,,3.5,4.0,,,false");
    }

    #[test]
    fn bad_config_aborts() {
        let cfg = PpoConfig {
            n_steps: 100,
            batch_size: 64,
            ..Default::default()
        };
        let err = train(make, &cfg, 0, None).unwrap_err();
        assert!(matches!(err.error, Error::Config(_)));
    }
}
