//! Clipped-surrogate PPO: rollout storage, GAE, the loss with its analytic
//! gradient, and Adam.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::policy::{gaussian_entropy, gaussian_log_prob, PolicyNet, LOG_STD_MAX, LOG_STD_MIN};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PpoParams {
    pub learning_rate: f64,
    pub n_steps: usize,
    pub batch_size: usize,
    pub clip_epsilon: f64,
    pub gamma: f64,
    pub gae_lambda: f64,
    pub epochs_per_update: usize,
    pub entropy_coef: f64,
    pub value_coef: f64,
    /// Global gradient-norm cap applied to every minibatch step.
    pub max_grad_norm: f64,
    pub total_episodes: usize,
    pub hidden: [usize; 2],
    /// Initial value of every log-std component.
    pub log_std_init: f64,
    /// Write a checkpoint every this many updates (0 disables periodic saves).
    pub checkpoint_every: usize,
}

impl Default for PpoParams {
    fn default() -> Self {
        Self {
            learning_rate: 5e-4,
            n_steps: 200,
            batch_size: 50,
            clip_epsilon: 0.2,
            gamma: 0.99,
            gae_lambda: 0.95,
            epochs_per_update: 10,
            entropy_coef: 0.01,
            value_coef: 0.5,
            max_grad_norm: 0.5,
            total_episodes: 800,
            hidden: [64, 64],
            log_std_init: 0.0,
            checkpoint_every: 10,
        }
    }
}

impl PpoParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive and finite");
        }
        if self.n_steps == 0 || self.batch_size == 0 {
            return bad("n_steps and batch_size must be > 0");
        }
        if self.n_steps % self.batch_size != 0 {
            return bad("batch_size must divide n_steps");
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return bad("gamma must lie in (0, 1]");
        }
        if !(0.0..=1.0).contains(&self.gae_lambda) {
            return bad("gae_lambda must lie in [0, 1]");
        }
        if !(self.clip_epsilon > 0.0) {
            return bad("clip_epsilon must be > 0");
        }
        if self.epochs_per_update == 0 {
            return bad("epochs_per_update must be >= 1");
        }
        if !(self.entropy_coef >= 0.0 && self.value_coef >= 0.0) {
            return bad("loss coefficients must be >= 0");
        }
        if !(self.max_grad_norm > 0.0) {
            return bad("max_grad_norm must be > 0");
        }
        if !(LOG_STD_MIN..=LOG_STD_MAX).contains(&self.log_std_init) {
            return bad("log_std_init must lie in the log-std clamp range");
        }
        if self.hidden.contains(&0) {
            return bad("hidden layers must be non-empty");
        }
        Ok(())
    }
}

/// GAE over a rollout that may span several episodes.
///
/// `dones[t]` marks that the episode ended after step `t`; `last_value` is the
/// critic's estimate for the observation following the final step.
pub fn gae_advantages(
    rewards: &[f64],
    values: &[f64],
    dones: &[bool],
    last_value: f64,
    gamma: f64,
    lambda: f64,
) -> (Vec<f64>, Vec<f64>) {
    let n = rewards.len();
    let mut adv = vec![0.0; n];
    let mut next_adv = 0.0;
    let mut next_value = last_value;
    for t in (0..n).rev() {
        let live = if dones[t] { 0.0 } else { 1.0 };
        let delta = rewards[t] + gamma * next_value * live - values[t];
        next_adv = delta + gamma * lambda * live * next_adv;
        adv[t] = next_adv;
        next_value = values[t];
    }
    let returns = adv.iter().zip(values).map(|(a, v)| a + v).collect();
    (adv, returns)
}

#[derive(Debug, Clone, Default)]
pub struct RolloutBuffer {
    pub obs: Vec<Vec<f64>>,
    pub actions: Vec<[f64; 2]>,
    pub log_probs: Vec<f64>,
    pub rewards: Vec<f64>,
    pub values: Vec<f64>,
    pub dones: Vec<bool>,
    /// Normalized advantages, filled by [`RolloutBuffer::finish`].
    pub advantages: Vec<f64>,
    pub returns: Vec<f64>,
}

impl RolloutBuffer {
    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }

    pub fn clear(&mut self) {
        *self = Self::default();
    }

    pub fn push(&mut self, obs: Vec<f64>, action: [f64; 2], log_prob: f64, reward: f64, value: f64, done: bool) {
        self.obs.push(obs);
        self.actions.push(action);
        self.log_probs.push(log_prob);
        self.rewards.push(reward);
        self.values.push(value);
        self.dones.push(done);
    }

    /// Computes returns from raw GAE advantages, then normalizes the
    /// advantages to zero mean and unit variance.
    pub fn finish(&mut self, last_value: f64, gamma: f64, lambda: f64) {
        let (adv, ret) = gae_advantages(&self.rewards, &self.values, &self.dones, last_value, gamma, lambda);
        self.returns = ret;
        self.advantages = normalize(&adv);
    }
}

fn normalize(x: &[f64]) -> Vec<f64> {
    if x.is_empty() {
        return Vec::new();
    }
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let sd = var.sqrt();
    if sd < 1e-12 {
        return x.iter().map(|v| v - mean).collect();
    }
    x.iter().map(|v| (v - mean) / sd).collect()
}

/// Weights of the three loss terms; PPO uses `(1, value_coef, entropy_coef)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossCoefs {
    pub policy: f64,
    pub value: f64,
    pub entropy: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    /// Negated clipped surrogate.
    pub policy_loss: f64,
    /// Mean squared error of the critic against the returns.
    pub value_loss: f64,
    pub entropy: f64,
    pub total: f64,
    pub clip_fraction: f64,
    pub approx_kl: f64,
}

/// Minibatch loss `policy·(−surrogate) + value·MSE − entropy·H` and its
/// gradient with respect to every network parameter.
pub fn loss_and_grad(
    net: &PolicyNet,
    buf: &RolloutBuffer,
    batch: &[usize],
    clip_epsilon: f64,
    coefs: LossCoefs,
) -> (LossBreakdown, Vec<f64>) {
    let layout = net.layout();
    let mut grad = vec![0.0; layout.total()];
    let log_std = net.log_std().to_vec();
    let inv_var: Vec<f64> = log_std.iter().map(|s| (-2.0 * s).exp()).collect();
    let b = batch.len() as f64;
    let mut out = LossBreakdown::default();
    let mut dlog_std = vec![0.0; log_std.len()];
    let mut dmean = vec![0.0; log_std.len()];

    for &t in batch {
        let obs = &buf.obs[t];
        let cache = net.forward_cached(obs);
        let mean = cache.mean();
        let a = &buf.actions[t];
        let lp = gaussian_log_prob(a, mean, &log_std);
        let log_ratio = lp - buf.log_probs[t];
        let ratio = log_ratio.exp();
        let adv = buf.advantages[t];
        let clipped = ratio.clamp(1.0 - clip_epsilon, 1.0 + clip_epsilon);
        let unclipped_term = ratio * adv;
        let clipped_term = clipped * adv;
        let surrogate = unclipped_term.min(clipped_term);
        out.policy_loss -= surrogate / b;
        out.approx_kl += ((ratio - 1.0) - log_ratio) / b;
        if (ratio - 1.0).abs() > clip_epsilon {
            out.clip_fraction += 1.0 / b;
        }

        // d(surrogate)/d(log p) is ratio*adv on the unclipped branch, 0 otherwise
        let dlp = if unclipped_term <= clipped_term {
            -coefs.policy * ratio * adv / b
        } else {
            0.0
        };
        for k in 0..dmean.len() {
            let diff = a[k] - mean[k];
            dmean[k] = dlp * diff * inv_var[k];
            dlog_std[k] += dlp * (diff * diff * inv_var[k] - 1.0);
        }

        let v = cache.value();
        let err = v - buf.returns[t];
        out.value_loss += err * err / b;
        let dvalue = coefs.value * 2.0 * err / b;

        net.backward(obs, &cache, &dmean, dvalue, &mut grad);
    }

    out.entropy = gaussian_entropy(&log_std);
    for (g, d) in grad[layout.log_std_range()].iter_mut().zip(&dlog_std) {
        // entropy gradient is 1 per log-std component
        *g += d - coefs.entropy;
    }
    out.total = coefs.policy * out.policy_loss + coefs.value * out.value_loss - coefs.entropy * out.entropy;
    (out, grad)
}

/// Importance ratios of the current network against the stored log-probs.
pub fn importance_ratios(net: &PolicyNet, buf: &RolloutBuffer) -> Vec<f64> {
    let log_std = net.log_std().to_vec();
    (0..buf.len())
        .map(|t| {
            let out = net.forward_cached(&buf.obs[t]);
            (gaussian_log_prob(&buf.actions[t], out.mean(), &log_std) - buf.log_probs[t]).exp()
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub t: u64,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
}

impl Adam {
    pub fn new(n: usize, lr: f64) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            t: 0,
            m: vec![0.0; n],
            v: vec![0.0; n],
        }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t as i32);
        let c2 = 1.0 - self.beta2.powi(self.t as i32);
        for i in 0..params.len() {
            let g = grad[i];
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            let mh = self.m[i] / c1;
            let vh = self.v[i] / c2;
            params[i] -= self.lr * mh / (vh.sqrt() + self.eps);
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainStats {
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub approx_kl: f64,
    pub clip_fraction: f64,
    pub grad_norm: f64,
}

/// Runs `epochs_per_update` shuffled minibatch passes over a finished buffer.
pub fn ppo_update<R: Rng + ?Sized>(
    net: &mut PolicyNet,
    adam: &mut Adam,
    buf: &RolloutBuffer,
    params: &PpoParams,
    rng: &mut R,
) -> Result<TrainStats> {
    if buf.advantages.len() != buf.len() || buf.is_empty() {
        return Err(Error::InvalidConfig("rollout buffer has no advantages".into()));
    }
    let coefs = LossCoefs {
        policy: 1.0,
        value: params.value_coef,
        entropy: params.entropy_coef,
    };
    let mut order: Vec<usize> = (0..buf.len()).collect();
    let mut stats = TrainStats::default();
    let mut batches = 0.0;
    for epoch in 0..params.epochs_per_update {
        order.shuffle(rng);
        for (bi, batch) in order.chunks(params.batch_size).enumerate() {
            let (loss, mut grad) = loss_and_grad(net, buf, batch, params.clip_epsilon, coefs);
            if !loss.total.is_finite() {
                return Err(Error::NonFiniteLoss { epoch, batch: bi });
            }
            let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
            if norm > params.max_grad_norm {
                let s = params.max_grad_norm / norm;
                grad.iter_mut().for_each(|g| *g *= s);
            }
            adam.step(net.params_mut(), &grad);
            net.clamp_log_std();
            if !net.is_finite() {
                return Err(Error::NonFiniteLoss { epoch, batch: bi });
            }
            stats.policy_loss += loss.policy_loss;
            stats.value_loss += loss.value_loss;
            stats.entropy += loss.entropy;
            stats.approx_kl += loss.approx_kl;
            stats.clip_fraction += loss.clip_fraction;
            stats.grad_norm += norm;
            batches += 1.0;
        }
    }
    stats.policy_loss /= batches;
    stats.value_loss /= batches;
    stats.entropy /= batches;
    stats.approx_kl /= batches;
    stats.clip_fraction /= batches;
    stats.grad_norm /= batches;
    Ok(stats)
}
