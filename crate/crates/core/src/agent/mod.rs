//! PPO agent: Gaussian MLP policy, GAE, clipped-surrogate updates and the
//! training loop.

mod adam;
mod gae;
mod mlp;
mod policy;
mod ppo;
mod train;

pub use adam::{clip_grad_norm, Adam};
pub use gae::{compute_gae, normalize_advantages, RolloutBuffer};
pub use mlp::{MlpCache, MlpShape};
pub use policy::{
    gaussian_entropy, gaussian_log_prob, sample_action, ActorCritic, ForwardCache, PolicyOutput,
    HALF_LN_2PI,
};
pub use ppo::{
    minibatch_loss, ppo_update, LossWorkspace, Minibatch, PpoConfig, PpoWorkspace,
    UpdateDiagnostics,
};
pub use train::{train, EvalHook, EvalRecord, LogRow, TrainAbort, TrainingLog};
