use crate::agent::{ActorCritic, EvalRecord, ForwardCache};
use crate::env::{FormulationConfig, PitchEnv, StepInfo};
use crate::error::Result;
use crate::plant::PlantParams;

/// The evaluation task for a policy trained under `training`: the baseline
/// task (80 s fixed profile, level start, no penalty) seen through the same
/// observation and action interface the policy was trained with.
pub fn evaluation_formulation(training: &FormulationConfig) -> FormulationConfig {
    FormulationConfig {
        normalize_obs: training.normalize_obs,
        normalize_action: training.normalize_action,
        velocity_norm_scale: training.velocity_norm_scale,
        ..FormulationConfig::baseline()
    }
}

/// One deterministic evaluation episode (action = policy mean), returning
/// the raw per-step trace.
pub fn evaluation_episode(
    model: &ActorCritic,
    training: &FormulationConfig,
    plant: &PlantParams,
) -> Result<(Vec<StepInfo>, bool)> {
    let mut env = PitchEnv::new(*plant, evaluation_formulation(training), 0)?;
    let mut cache = ForwardCache::default();
    let mut obs = env.reset();
    let mut trace = Vec::with_capacity(env.episode_steps() as usize);
    loop {
        let action = model.forward_obs(&obs, &mut cache).mean;
        let step = env.step(action)?;
        trace.push(step.info);
        if step.done {
            return Ok((trace, step.truncated));
        }
        obs = step.observation;
    }
}

/// Mean `|pitch − target|` in degrees and mean `|voltage|` over a trace.
pub fn trace_metrics(trace: &[StepInfo]) -> (f64, f64) {
    if trace.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = trace.len() as f64;
    let dev = trace.iter().map(|s| (s.pitch_deg - s.target_deg).abs()).sum::<f64>() / n;
    let volt = trace.iter().map(|s| s.voltage.abs()).sum::<f64>() / n;
    (dev, volt)
}

/// Evaluate `model` on the fixed profile. A truncated episode is scored over
/// the steps that occurred and flagged.
pub fn evaluate(model: &ActorCritic, training: &FormulationConfig, plant: &PlantParams) -> Result<EvalRecord> {
    let (trace, truncated) = evaluation_episode(model, training, plant)?;
    let (mean_deviation_deg, mean_abs_voltage) = trace_metrics(&trace);
    Ok(EvalRecord {
        mean_deviation_deg,
        mean_abs_voltage,
        truncated,
    })
}
