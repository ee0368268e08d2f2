//! Training loop and deterministic evaluation.

use std::path::PathBuf;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::checkpoint::Checkpoint;
use super::policy::{sample_action, NetShape, PolicyNet};
use super::ppo::{ppo_update, Adam, PpoParams, RolloutBuffer, TrainStats};
use crate::env::{EnvConfig, EpisodeMetrics, TaskEnv, OBS_DIM};
use crate::error::{Error, Result};
use crate::seeding::derive_seed;
use crate::stats::MeanStd;

const NET_STREAM: u64 = 1;
const EPISODE_STREAM: u64 = 2;
const ACTION_STREAM: u64 = 3;
const SHUFFLE_STREAM: u64 = 4;

/// World seed of training episode `episode` under the run seed.
pub fn training_episode_seed(seed: u64, episode: usize) -> u64 {
    derive_seed(seed, EPISODE_STREAM, episode as u64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    /// Zero-based index, continuing across resumed runs.
    pub episode: usize,
    pub failures: usize,
    pub replans: usize,
    pub episode_return: f64,
    pub steps: usize,
    pub completed: usize,
    /// Updates finished before this episode ended.
    pub updates_done: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UpdateRecord {
    pub update: usize,
    pub episodes_done: usize,
    pub stats: TrainStats,
}

#[derive(Debug, Clone, Default)]
pub struct TrainOptions {
    /// Where periodic and final checkpoints go.
    pub checkpoint_path: Option<PathBuf>,
    /// Continue from this state instead of a fresh network.
    pub resume: Option<Checkpoint>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub net: PolicyNet,
    pub adam: Adam,
    pub episodes: Vec<EpisodeRecord>,
    pub updates: Vec<UpdateRecord>,
    pub episodes_done: usize,
    pub updates_done: usize,
}

impl TrainOutcome {
    pub fn checkpoint(&self, seed: u64) -> Checkpoint {
        Checkpoint {
            net: self.net.clone(),
            adam: Some(self.adam.clone()),
            seed,
            episodes_done: self.episodes_done,
            updates_done: self.updates_done,
        }
    }
}

/// Trains until `ppo.total_episodes` episodes have finished in total
/// (counting those already done by a resumed checkpoint).
///
/// Rollouts of `n_steps` transitions may span episode boundaries; the partial
/// rollout in flight when the episode budget runs out is discarded. Each
/// episode's world and action noise depend only on the run seed and the
/// episode index.
pub fn train(env_cfg: &EnvConfig, ppo: &PpoParams, seed: u64, opts: TrainOptions) -> Result<TrainOutcome> {
    env_cfg.validate()?;
    ppo.validate()?;
    let shape = NetShape {
        obs_dim: OBS_DIM,
        hidden: ppo.hidden,
        act_dim: 2,
    };
    let (mut net, mut adam, mut episodes_done, mut updates_done) = match opts.resume {
        Some(ck) => {
            if *ck.net.shape() != shape {
                return Err(Error::Checkpoint(format!(
                    "checkpoint shape {:?} does not match configured {:?}",
                    ck.net.shape(),
                    shape
                )));
            }
            let n = ck.net.params().len();
            let mut adam = ck.adam.unwrap_or_else(|| Adam::new(n, ppo.learning_rate));
            adam.lr = ppo.learning_rate;
            (ck.net, adam, ck.episodes_done, ck.updates_done)
        }
        None => {
            let mut net = PolicyNet::new(shape, derive_seed(seed, NET_STREAM, 0));
            net.set_log_std(ppo.log_std_init);
            let adam = Adam::new(net.params().len(), ppo.learning_rate);
            (net, adam, 0, 0)
        }
    };

    let mut episodes = Vec::new();
    let mut updates = Vec::new();
    let save = |net: &PolicyNet, adam: &Adam, eps: usize, ups: usize| -> Result<()> {
        if let Some(path) = &opts.checkpoint_path {
            Checkpoint {
                net: net.clone(),
                adam: Some(adam.clone()),
                seed,
                episodes_done: eps,
                updates_done: ups,
            }
            .save(path)?;
        }
        Ok(())
    };

    if episodes_done < ppo.total_episodes {
        let mut env = TaskEnv::new(env_cfg.clone(), training_episode_seed(seed, episodes_done))?;
        let mut obs = env.reset(training_episode_seed(seed, episodes_done))?.flatten();
        let mut action_rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, ACTION_STREAM, episodes_done as u64));
        let mut buf = RolloutBuffer::default();

        'outer: loop {
            buf.clear();
            while buf.len() < ppo.n_steps {
                let out = net.forward(&obs)?;
                let s = sample_action(&out.mean, &out.log_std, &mut action_rng);
                let step = env.step(s.action)?;
                let next = step.observation.flatten();
                buf.push(std::mem::replace(&mut obs, next), s.raw, s.log_prob, step.reward, out.value, step.done);
                if step.done {
                    let m = env.metrics();
                    episodes.push(record(episodes_done, &m, updates_done));
                    episodes_done += 1;
                    if episodes_done >= ppo.total_episodes {
                        break 'outer;
                    }
                    obs = env.reset(training_episode_seed(seed, episodes_done))?.flatten();
                    action_rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, ACTION_STREAM, episodes_done as u64));
                }
            }
            let last_value = net.forward(&obs)?.value;
            buf.finish(last_value, ppo.gamma, ppo.gae_lambda);
            let mut shuffle = ChaCha8Rng::seed_from_u64(derive_seed(seed, SHUFFLE_STREAM, updates_done as u64));
            let stats = ppo_update(&mut net, &mut adam, &buf, ppo, &mut shuffle)?;
            updates_done += 1;
            updates.push(UpdateRecord {
                update: updates_done,
                episodes_done,
                stats,
            });
            if ppo.checkpoint_every > 0 && updates_done % ppo.checkpoint_every == 0 {
                save(&net, &adam, episodes_done, updates_done)?;
            }
        }
    }
    save(&net, &adam, episodes_done, updates_done)?;

    Ok(TrainOutcome {
        net,
        adam,
        episodes,
        updates,
        episodes_done,
        updates_done,
    })
}

fn record(episode: usize, m: &EpisodeMetrics, updates_done: usize) -> EpisodeRecord {
    EpisodeRecord {
        episode,
        failures: m.failures,
        replans: m.replans,
        episode_return: m.episode_return,
        steps: m.steps,
        completed: m.completed,
        updates_done,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub seeds: Vec<u64>,
    pub episodes: Vec<EpisodeMetrics>,
    pub failures: MeanStd,
    pub replans: MeanStd,
}

impl EvalSummary {
    pub fn from_episodes(seeds: Vec<u64>, episodes: Vec<EpisodeMetrics>) -> Self {
        let f: Vec<f64> = episodes.iter().map(|m| m.failures as f64).collect();
        let r: Vec<f64> = episodes.iter().map(|m| m.replans as f64).collect();
        Self {
            seeds,
            failures: MeanStd::of(&f),
            replans: MeanStd::of(&r),
            episodes,
        }
    }
}

/// Plays one episode per world seed with the mean action of `net`.
pub fn evaluate_seeds(net: &PolicyNet, env_cfg: &EnvConfig, seeds: &[u64]) -> Result<EvalSummary> {
    let first = seeds.first().copied().unwrap_or(0);
    let mut env = TaskEnv::new(env_cfg.clone(), first)?;
    let mut out = Vec::with_capacity(seeds.len());
    for &s in seeds {
        out.push(env.run_episode(s, |_, obs| net.deterministic_action(&obs.flatten()))?);
    }
    Ok(EvalSummary::from_episodes(seeds.to_vec(), out))
}

/// Deterministic evaluation on world seeds `seed, seed + 1, ...`.
pub fn evaluate(net: &PolicyNet, env_cfg: &EnvConfig, n_episodes: usize, seed: u64) -> Result<EvalSummary> {
    let seeds: Vec<u64> = (0..n_episodes as u64).map(|i| seed + i).collect();
    evaluate_seeds(net, env_cfg, &seeds)
}

/// Index of the candidate with the lowest mean failures plus mean replans
/// over `seeds` (ties go to the earlier candidate), with every summary.
pub fn select_by_validation(
    candidates: &[&PolicyNet],
    env_cfg: &EnvConfig,
    seeds: &[u64],
) -> Result<(usize, Vec<EvalSummary>)> {
    if candidates.is_empty() {
        return Err(Error::InvalidConfig("no candidate policies to select from".into()));
    }
    let summaries = candidates
        .iter()
        .map(|net| evaluate_seeds(net, env_cfg, seeds))
        .collect::<Result<Vec<_>>>()?;
    let score = |s: &EvalSummary| s.failures.mean + s.replans.mean;
    let best = (0..summaries.len())
        .min_by(|&a, &b| score(&summaries[a]).total_cmp(&score(&summaries[b])).then(a.cmp(&b)))
        .expect("non-empty");
    Ok((best, summaries))
}
