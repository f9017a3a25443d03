//! Clipped-surrogate PPO update with hand-written reverse-mode gradients.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::adam::{clip_grad_norm, Adam};
use super::gae::{normalize_advantages, RolloutBuffer};
use super::mlp::MlpCache;
use super::policy::{gaussian_entropy, gaussian_log_prob, ActorCritic};
use crate::error::{Error, Result};

/// PPO hyperparameters. Defaults are the usual continuous-control defaults
/// (lr 3e-4, 2048-step rollouts, 64-sample minibatches, 10 epochs).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PpoConfig {
    pub learning_rate: f64,
    pub n_steps: usize,
    pub batch_size: usize,
    pub n_epochs: usize,
    pub gamma: f64,
    pub gae_lambda: f64,
    pub clip_range: f64,
    pub ent_coef: f64,
    pub vf_coef: f64,
    pub max_grad_norm: f64,
    pub hidden: Vec<usize>,
    pub log_std_init: f64,
    pub total_steps: u64,
}

impl Default for PpoConfig {
    fn default() -> Self {
        Self {
            learning_rate: 3e-4,
            n_steps: 2048,
            batch_size: 64,
            n_epochs: 10,
            gamma: 0.99,
            gae_lambda: 0.95,
            clip_range: 0.2,
            ent_coef: 0.0,
            vf_coef: 0.5,
            max_grad_norm: 0.5,
            hidden: vec![64, 64],
            log_std_init: 0.0,
            total_steps: 1_000_000,
        }
    }
}

impl PpoConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("learning_rate", self.learning_rate),
            ("gamma", self.gamma),
            ("clip_range", self.clip_range),
            ("max_grad_norm", self.max_grad_norm),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("ppo.{name} must be > 0")));
            }
        }
        if self.gamma > 1.0 || !(0.0..=1.0).contains(&self.gae_lambda) {
            return Err(Error::Config("ppo.gamma and ppo.gae_lambda must lie in [0, 1]".into()));
        }
        if self.ent_coef < 0.0 || self.vf_coef < 0.0 {
            return Err(Error::Config("ppo loss coefficients must be >= 0".into()));
        }
        if self.n_steps == 0 || self.batch_size == 0 || self.n_epochs == 0 || self.total_steps == 0 {
            return Err(Error::Config(
                "ppo.n_steps, batch_size, n_epochs and total_steps must be positive".into(),
            ));
        }
        if !self.n_steps.is_multiple_of(self.batch_size) {
            return Err(Error::Config(format!(
                "ppo.n_steps {} is not divisible by batch_size {}",
                self.n_steps, self.batch_size
            )));
        }
        if self.hidden.contains(&0) {
            return Err(Error::Config("ppo.hidden widths must be positive".into()));
        }
        Ok(())
    }
}

/// Loss components of one minibatch (or their means over an update).
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct UpdateDiagnostics {
    pub loss: f64,
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub clip_fraction: f64,
    pub approx_kl: f64,
    pub grad_norm: f64,
}

/// Borrowed view of a minibatch; observations are `len × obs_dim` row-major.
#[derive(Debug, Clone, Copy)]
pub struct Minibatch<'a> {
    pub observations: &'a [f64],
    pub actions: &'a [f64],
    pub old_log_probs: &'a [f64],
    pub advantages: &'a [f64],
    pub returns: &'a [f64],
}

impl Minibatch<'_> {
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }
}

/// Scratch buffers for [`minibatch_loss`].
#[derive(Debug, Clone, Default)]
pub struct LossWorkspace {
    policy: MlpCache,
    value: MlpCache,
    d_mean: Vec<f64>,
    d_value: Vec<f64>,
}

#[derive(Debug, Clone, Default)]
pub struct PpoWorkspace {
    loss: LossWorkspace,
    obs: Vec<f64>,
    actions: Vec<f64>,
    old_log_probs: Vec<f64>,
    advantages: Vec<f64>,
    returns: Vec<f64>,
    grads: Vec<f64>,
}

/// PPO loss of `model` on `batch`:
///
/// ```text
/// L = −mean(min(ρA, clip(ρ, 1−ε, 1+ε)A)) + c_v·mean((V − R)²) − c_e·H
/// ```
///
/// When `grads` is given, `∂L/∂params` is accumulated into it.
pub fn minibatch_loss(
    model: &ActorCritic,
    batch: &Minibatch<'_>,
    cfg: &PpoConfig,
    ws: &mut LossWorkspace,
    grads: Option<&mut [f64]>,
) -> UpdateDiagnostics {
    let n = batch.len();
    let inv_n = 1.0 / n as f64;
    let log_std = model.log_std();
    let inv_var = (-2.0 * log_std).exp();
    let (lo, hi) = (1.0 - cfg.clip_range, 1.0 + cfg.clip_range);

    let means = model
        .policy
        .forward(&model.params[model.policy_range()], batch.observations, n, &mut ws.policy);
    let values = model
        .value
        .forward(&model.params[model.value_range()], batch.observations, n, &mut ws.value);

    ws.d_mean.clear();
    ws.d_mean.resize(n, 0.0);
    ws.d_value.clear();
    ws.d_value.resize(n, 0.0);
    let mut d_log_std = 0.0;
    let mut policy_loss = 0.0;
    let mut value_loss = 0.0;
    let mut clipped = 0usize;
    let mut approx_kl = 0.0;

    for b in 0..n {
        let mean = means[b];
        let a = batch.actions[b];
        let adv = batch.advantages[b];
        let log_ratio = gaussian_log_prob(a, mean, log_std) - batch.old_log_probs[b];
        let ratio = log_ratio.exp();
        let unclipped = ratio * adv;
        let clipped_obj = ratio.clamp(lo, hi) * adv;
        policy_loss -= unclipped.min(clipped_obj);
        if (ratio - 1.0).abs() > cfg.clip_range {
            clipped += 1;
        }
        approx_kl += (ratio - 1.0) - log_ratio;
        // Gradient flows only through the unclipped branch when it is the
        // minimum; inside the clip range both branches coincide.
        if unclipped <= clipped_obj {
            let d_logp = -adv * ratio * inv_n;
            let diff = a - mean;
            ws.d_mean[b] = d_logp * diff * inv_var;
            d_log_std += d_logp * (diff * diff * inv_var - 1.0);
        }
        let err = values[b] - batch.returns[b];
        value_loss += err * err;
        ws.d_value[b] = cfg.vf_coef * 2.0 * err * inv_n;
    }
    policy_loss *= inv_n;
    value_loss *= inv_n;
    let entropy = gaussian_entropy(log_std);
    d_log_std -= cfg.ent_coef;

    if let Some(grads) = grads {
        let (pr, vr) = (model.policy_range(), model.value_range());
        model.policy.backward(
            &model.params[pr.clone()],
            &mut ws.policy,
            &ws.d_mean,
            &mut grads[pr],
        );
        model.value.backward(
            &model.params[vr.clone()],
            &mut ws.value,
            &ws.d_value,
            &mut grads[vr],
        );
        grads[model.log_std_index()] += d_log_std;
    }

    UpdateDiagnostics {
        loss: policy_loss + cfg.vf_coef * value_loss - cfg.ent_coef * entropy,
        policy_loss,
        value_loss,
        entropy,
        clip_fraction: clipped as f64 * inv_n,
        approx_kl: approx_kl * inv_n,
        grad_norm: 0.0,
    }
}

/// Run `n_epochs` passes of shuffled minibatch updates over a completed
/// buffer. Returns the mean diagnostics over all minibatches.
pub fn ppo_update<R: Rng + ?Sized>(
    model: &mut ActorCritic,
    adam: &mut Adam,
    buffer: &RolloutBuffer,
    cfg: &PpoConfig,
    ws: &mut PpoWorkspace,
    rng: &mut R,
) -> Result<UpdateDiagnostics> {
    let len = buffer.len();
    if len == 0 || buffer.advantages.len() != len {
        return Err(Error::Contract("ppo_update needs a buffer with computed advantages".into()));
    }
    let dim = model.obs_dim();
    let mut indices: Vec<usize> = (0..len).collect();
    let mut sum = UpdateDiagnostics::default();
    let mut count = 0usize;

    let PpoWorkspace {
        loss: loss_ws,
        obs,
        actions,
        old_log_probs,
        advantages,
        returns,
        grads,
    } = ws;

    for _ in 0..cfg.n_epochs {
        indices.shuffle(rng);
        for chunk in indices.chunks(cfg.batch_size) {
            obs.clear();
            actions.clear();
            old_log_probs.clear();
            advantages.clear();
            returns.clear();
            for &i in chunk {
                obs.extend_from_slice(&buffer.observations[i][..dim]);
                actions.push(buffer.actions[i]);
                old_log_probs.push(buffer.log_probs[i]);
                advantages.push(buffer.advantages[i]);
                returns.push(buffer.returns[i]);
            }
            normalize_advantages(advantages);

            grads.clear();
            grads.resize(model.num_params(), 0.0);
            let batch = Minibatch {
                observations: obs,
                actions,
                old_log_probs,
                advantages,
                returns,
            };
            let mut diag = minibatch_loss(model, &batch, cfg, loss_ws, Some(grads));
            if !diag.loss.is_finite() || grads.iter().any(|g| !g.is_finite()) {
                return Err(Error::NonFiniteLoss(diag));
            }
            diag.grad_norm = clip_grad_norm(grads, cfg.max_grad_norm);
            adam.step(&mut model.params, grads);

            sum.loss += diag.loss;
            sum.policy_loss += diag.policy_loss;
            sum.value_loss += diag.value_loss;
            sum.entropy += diag.entropy;
            sum.clip_fraction += diag.clip_fraction;
            sum.approx_kl += diag.approx_kl;
            sum.grad_norm += diag.grad_norm;
            count += 1;
        }
    }
    let k = 1.0 / count as f64;
    Ok(UpdateDiagnostics {
        loss: sum.loss * k,
        policy_loss: sum.policy_loss * k,
        value_loss: sum.value_loss * k,
        entropy: sum.entropy * k,
        clip_fraction: sum.clip_fraction * k,
        approx_kl: sum.approx_kl * k,
        grad_norm: sum.grad_norm * k,
    })
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::agent::policy::sample_action;
    use crate::agent::ForwardCache;
    use crate::env::Observation;

    fn toy_buffer(model: &ActorCritic, n: usize, seed: u64) -> RolloutBuffer {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut buf = RolloutBuffer::new(n);
        let mut cache = ForwardCache::default();
        for _ in 0..n {
            let obs = Observation {
                pitch: rng.gen_range(-1.0..1.0),
                omega: rng.gen_range(-1.0..1.0),
                target: rng.gen_range(-1.0..1.0),
            };
            let out = model.forward_obs(&obs, &mut cache);
            let (a, lp) = sample_action(out.mean, out.log_std, &mut rng);
            buf.push(&obs, a, rng.gen_range(-1.0..0.0), out.value, lp, rng.gen_bool(0.1));
        }
        buf.compute_returns_and_advantages(0.0, 0.99, 0.95);
        buf
    }

    #[test]
    fn default_config_is_valid() {
        PpoConfig::default().validate().unwrap();
        let bad = PpoConfig {
            n_steps: 100,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn zero_signal_gives_zero_loss() {
        let model = ActorCritic::init(3, &[8, 8], 0.0, &mut ChaCha8Rng::seed_from_u64(1));
        let mut buf = toy_buffer(&model, 16, 2);
        buf.advantages.iter_mut().for_each(|a| *a = 0.0);
        buf.returns = buf.values.clone();
        let obs: Vec<f64> = buf.observations.iter().flatten().copied().collect();
        let batch = Minibatch {
            observations: &obs,
            actions: &buf.actions,
            old_log_probs: &buf.log_probs,
            advantages: &buf.advantages,
            returns: &buf.returns,
        };
        let cfg = PpoConfig::default();
        let mut grads = vec![0.0; model.num_params()];
        let d = minibatch_loss(&model, &batch, &cfg, &mut LossWorkspace::default(), Some(&mut grads));
        assert!(d.loss.abs() < 1e-12);
        assert!(grads.iter().all(|g| g.abs() < 1e-12));
    }

    #[test]
    fn unit_ratio_surrogate_is_minus_mean_advantage() {
        let model = ActorCritic::init(3, &[8, 8], 0.0, &mut ChaCha8Rng::seed_from_u64(3));
        let buf = toy_buffer(&model, 32, 4);
        let obs: Vec<f64> = buf.observations.iter().flatten().copied().collect();
        let mut adv = buf.advantages.clone();
        normalize_advantages(&mut adv);
        let batch = Minibatch {
            observations: &obs,
            actions: &buf.actions,
            old_log_probs: &buf.log_probs,
            advantages: &adv,
            returns: &buf.returns,
        };
        let d = minibatch_loss(&model, &batch, &PpoConfig::default(), &mut LossWorkspace::default(), None);
        assert!(d.policy_loss.abs() < 1e-12, "{}", d.policy_loss);
        assert_eq!(d.clip_fraction, 0.0);
        assert!(d.approx_kl.abs() < 1e-12);
    }

    #[test]
    fn clipped_samples_have_no_policy_gradient() {
        let model = ActorCritic::init(3, &[8, 8], 0.0, &mut ChaCha8Rng::seed_from_u64(5));
        let buf = toy_buffer(&model, 8, 6);
        let obs: Vec<f64> = buf.observations.iter().flatten().copied().collect();
        // Old policy much less likely: ρ = e^0.5 > 1.2 with positive advantage.
        let old: Vec<f64> = buf.log_probs.iter().map(|lp| lp - 0.5).collect();
        let adv = vec![1.0; 8];
        let batch = Minibatch {
            observations: &obs,
            actions: &buf.actions,
            old_log_probs: &old,
            advantages: &adv,
            returns: &buf.values,
        };
        let mut grads = vec![0.0; model.num_params()];
        let d = minibatch_loss(&model, &batch, &PpoConfig::default(), &mut LossWorkspace::default(), Some(&mut grads));
        assert_eq!(d.clip_fraction, 1.0);
        assert!(grads[model.policy_range()].iter().all(|&g| g == 0.0));
        assert_eq!(grads[model.log_std_index()], 0.0);
    }

    #[test]
    fn update_runs_and_is_deterministic() {
        let cfg = PpoConfig {
            n_steps: 64,
            batch_size: 16,
            n_epochs: 3,
            hidden: vec![8, 8],
            ..Default::default()
        };
        let run = || {
            let mut model = ActorCritic::init(3, &cfg.hidden, 0.0, &mut ChaCha8Rng::seed_from_u64(1));
            let buf = toy_buffer(&model, 64, 2);
            let mut adam = Adam::new(model.num_params(), cfg.learning_rate);
            let d = ppo_update(
                &mut model,
                &mut adam,
                &buf,
                &cfg,
                &mut PpoWorkspace::default(),
                &mut ChaCha8Rng::seed_from_u64(3),
            )
            .unwrap();
            assert_eq!(adam.steps(), 12);
            (model, d)
        };
        let (a, da) = run();
        let (b, db) = run();
        assert_eq!(a, b);
        assert_eq!(da, db);
    }

    #[test]
    fn non_finite_loss_aborts() {
        let cfg = PpoConfig {
            n_steps: 8,
            batch_size: 8,
            hidden: vec![4],
            ..Default::default()
        };
        let mut model = ActorCritic::init(3, &cfg.hidden, 0.0, &mut ChaCha8Rng::seed_from_u64(1));
        let mut buf = toy_buffer(&model, 8, 2);
        buf.returns[3] = f64::NAN;
        let mut adam = Adam::new(model.num_params(), cfg.learning_rate);
        let before = model.clone();
        let err = ppo_update(
            &mut model,
            &mut adam,
            &buf,
            &cfg,
            &mut PpoWorkspace::default(),
            &mut ChaCha8Rng::seed_from_u64(0),
        )
        .unwrap_err();
        assert!(matches!(err, Error::NonFiniteLoss(_)));
        assert_eq!(model, before);
    }
}
