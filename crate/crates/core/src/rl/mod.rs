//! PPO task planner: Gaussian MLP policy, clipped-surrogate updates,
//! checkpoints and the training loop.

mod checkpoint;
mod policy;
mod ppo;
mod train;

pub use checkpoint::{Checkpoint, CheckpointHeader, MAGIC, VERSION};
pub use policy::{
    gaussian_entropy, gaussian_log_prob, sample_action, ActionSample, Layout, NetShape, PolicyNet,
    PolicyOutput, LOG_STD_MAX, LOG_STD_MIN,
};
pub use ppo::{
    gae_advantages, importance_ratios, loss_and_grad, ppo_update, Adam, LossBreakdown, LossCoefs,
    PpoParams, RolloutBuffer, TrainStats,
};
pub use train::{
    evaluate, evaluate_seeds, select_by_validation, train, training_episode_seed, EpisodeRecord, EvalSummary,
    TrainOptions, TrainOutcome, UpdateRecord,
};
