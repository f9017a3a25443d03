use std::ops::Range;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::mlp::{MlpCache, MlpShape};
use crate::env::Observation;
use crate::error::{Error, Result};

/// `½·ln(2π)`
pub const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

/// Separate policy and value MLPs plus a state-independent log standard
/// deviation, all stored in one flat parameter vector laid out as
/// `[policy | value | log_std]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActorCritic {
    pub policy: MlpShape,
    pub value: MlpShape,
    pub params: Vec<f64>,
}

/// Output of a single forward pass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicyOutput {
    pub mean: f64,
    pub log_std: f64,
    pub value: f64,
}

impl ActorCritic {
    /// All-zero network with the given hidden widths and initial log-std.
    pub fn zeros(obs_dim: usize, hidden: &[usize], log_std_init: f64) -> Self {
        let policy = MlpShape::new(obs_dim, hidden, 1);
        let value = MlpShape::new(obs_dim, hidden, 1);
        let mut params = vec![0.0; policy.num_params() + value.num_params() + 1];
        *params.last_mut().unwrap() = log_std_init;
        Self { policy, value, params }
    }

    /// Orthogonal initialisation: gain √2 for hidden layers, 0.01 for the
    /// action head and 1 for the value head.
    pub fn init<R: Rng + ?Sized>(obs_dim: usize, hidden: &[usize], log_std_init: f64, rng: &mut R) -> Self {
        let mut model = Self::zeros(obs_dim, hidden, log_std_init);
        let (p, v) = (model.policy_range(), model.value_range());
        model.policy.init_orthogonal(&mut model.params[p], rng, 2f64.sqrt(), 0.01);
        model.value.init_orthogonal(&mut model.params[v], rng, 2f64.sqrt(), 1.0);
        model
    }

    pub fn obs_dim(&self) -> usize {
        self.policy.input_dim()
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    pub fn policy_range(&self) -> Range<usize> {
        0..self.policy.num_params()
    }

    pub fn value_range(&self) -> Range<usize> {
        let start = self.policy.num_params();
        start..start + self.value.num_params()
    }

    pub fn log_std_index(&self) -> usize {
        self.params.len() - 1
    }

    pub fn log_std(&self) -> f64 {
        self.params[self.log_std_index()]
    }

    /// Deterministic forward pass for one observation vector.
    pub fn forward(&self, observation: &[f64], cache: &mut ForwardCache) -> Result<PolicyOutput> {
        if observation.len() != self.obs_dim() {
            return Err(Error::Contract(format!(
                "observation has {} components, network expects {}",
                observation.len(),
                self.obs_dim()
            )));
        }
        let mean = self.policy.forward(&self.params[self.policy_range()], observation, 1, &mut cache.policy)[0];
        let value = self.value.forward(&self.params[self.value_range()], observation, 1, &mut cache.value)[0];
        Ok(PolicyOutput {
            mean,
            log_std: self.log_std(),
            value,
        })
    }

    pub fn forward_obs(&self, observation: &Observation, cache: &mut ForwardCache) -> PolicyOutput {
        self.forward(&observation.to_array(), cache)
            .expect("observation width matches a 3-input network")
    }

    pub fn is_finite(&self) -> bool {
        self.params.iter().all(|p| p.is_finite())
    }
}

/// Scratch space for forward passes.
#[derive(Debug, Clone, Default)]
pub struct ForwardCache {
    pub(crate) policy: MlpCache,
    pub(crate) value: MlpCache,
}

/// Log-density of `N(mean, exp(log_std)²)` at `x`.
#[inline]
pub fn gaussian_log_prob(x: f64, mean: f64, log_std: f64) -> f64 {
    let z = (x - mean) * (-log_std).exp();
    -0.5 * z * z - log_std - HALF_LN_2PI
}

/// Differential entropy of `N(·, exp(log_std)²)`.
pub fn gaussian_entropy(log_std: f64) -> f64 {
    0.5 + HALF_LN_2PI + log_std
}

/// Draw an action and its log-probability. The sample is not clamped.
pub fn sample_action<R: Rng + ?Sized>(mean: f64, log_std: f64, rng: &mut R) -> (f64, f64) {
    let eps: f64 = rng.sample(StandardNormal);
    let action = mean + log_std.exp() * eps;
    (action, gaussian_log_prob(action, mean, log_std))
}
