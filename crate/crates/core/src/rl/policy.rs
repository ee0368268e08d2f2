//! Diagonal-Gaussian actor-critic MLP with hand-written backpropagation.
//!
//! All parameters live in one flat `Vec<f64>` so the optimizer and the
//! checkpoint code can treat them uniformly. [`Layout`] maps that vector onto
//! the two towers and the log-std vector.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::env::{Action, OBS_DIM};
use crate::error::{Error, Result};

pub const LOG_STD_MIN: f64 = -5.0;
pub const LOG_STD_MAX: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetShape {
    pub obs_dim: usize,
    pub hidden: [usize; 2],
    pub act_dim: usize,
}

impl Default for NetShape {
    fn default() -> Self {
        Self {
            obs_dim: OBS_DIM,
            hidden: [64, 64],
            act_dim: 2,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Dense {
    w: usize,
    b: usize,
    n_in: usize,
    n_out: usize,
}

impl Dense {
    fn end(&self) -> usize {
        self.b + self.n_out
    }
}

/// Offsets of every tensor inside the flat parameter vector.
#[derive(Debug, Clone, Copy)]
pub struct Layout {
    actor: [Dense; 3],
    critic: [Dense; 3],
    log_std: usize,
    total: usize,
}

impl Layout {
    pub fn new(shape: &NetShape) -> Self {
        let mut at = 0;
        let mut tower = |out: usize| {
            let dims = [
                (shape.obs_dim, shape.hidden[0]),
                (shape.hidden[0], shape.hidden[1]),
                (shape.hidden[1], out),
            ];
            dims.map(|(n_in, n_out)| {
                let d = Dense {
                    w: at,
                    b: at + n_in * n_out,
                    n_in,
                    n_out,
                };
                at = d.end();
                d
            })
        };
        let actor = tower(shape.act_dim);
        let critic = tower(1);
        let log_std = at;
        Self {
            actor,
            critic,
            log_std,
            total: log_std + shape.act_dim,
        }
    }

    pub fn total(&self) -> usize {
        self.total
    }

    /// Parameter range of the actor tower (mean head included, log-std excluded).
    pub fn actor_range(&self) -> std::ops::Range<usize> {
        self.actor[0].w..self.actor[2].end()
    }

    pub fn critic_range(&self) -> std::ops::Range<usize> {
        self.critic[0].w..self.critic[2].end()
    }

    pub fn log_std_range(&self) -> std::ops::Range<usize> {
        self.log_std..self.total
    }
}

/// Activations of one tower kept for the backward pass.
#[derive(Debug, Clone)]
struct TowerCache {
    h1: Vec<f64>,
    h2: Vec<f64>,
    out: Vec<f64>,
}

fn dense_forward(p: &[f64], d: &Dense, x: &[f64], out: &mut Vec<f64>) {
    out.clear();
    out.extend_from_slice(&p[d.b..d.b + d.n_out]);
    for (j, o) in out.iter_mut().enumerate() {
        let row = &p[d.w + j * d.n_in..d.w + (j + 1) * d.n_in];
        *o += row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
    }
}

fn tower_forward(p: &[f64], t: &[Dense; 3], x: &[f64]) -> TowerCache {
    let mut h1 = Vec::new();
    dense_forward(p, &t[0], x, &mut h1);
    h1.iter_mut().for_each(|v| *v = v.tanh());
    let mut h2 = Vec::new();
    dense_forward(p, &t[1], &h1, &mut h2);
    h2.iter_mut().for_each(|v| *v = v.tanh());
    let mut out = Vec::new();
    dense_forward(p, &t[2], &h2, &mut out);
    TowerCache { h1, h2, out }
}

/// Accumulates `d(out)/d(params) * dout` into `grad`; returns the gradient
/// with respect to the layer input.
fn dense_backward(p: &[f64], d: &Dense, x: &[f64], dout: &[f64], grad: &mut [f64]) -> Vec<f64> {
    let mut dx = vec![0.0; d.n_in];
    for (j, &g) in dout.iter().enumerate() {
        if g == 0.0 {
            continue;
        }
        grad[d.b + j] += g;
        let w = d.w + j * d.n_in;
        for i in 0..d.n_in {
            grad[w + i] += g * x[i];
            dx[i] += g * p[w + i];
        }
    }
    dx
}

fn tower_backward(
    p: &[f64],
    t: &[Dense; 3],
    x: &[f64],
    c: &TowerCache,
    dout: &[f64],
    grad: &mut [f64],
) {
    let mut dh2 = dense_backward(p, &t[2], &c.h2, dout, grad);
    for (g, h) in dh2.iter_mut().zip(&c.h2) {
        *g *= 1.0 - h * h;
    }
    let mut dh1 = dense_backward(p, &t[1], &c.h1, &dh2, grad);
    for (g, h) in dh1.iter_mut().zip(&c.h1) {
        *g *= 1.0 - h * h;
    }
    // the input gradient of the first layer is never needed
    for (j, &g) in dh1.iter().enumerate() {
        let d = &t[0];
        grad[d.b + j] += g;
        let w = d.w + j * d.n_in;
        for (i, &v) in x.iter().enumerate() {
            if v != 0.0 {
                grad[w + i] += g * v;
            }
        }
    }
}

/// Row-major `rows x cols` matrix with orthonormal rows (or columns, when
/// there are more rows than columns), via Gram-Schmidt on Gaussian draws.
fn orthogonal<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Vec<f64> {
    let (n, m) = if rows <= cols { (rows, cols) } else { (cols, rows) };
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(n);
    while basis.len() < n {
        let mut v: Vec<f64> = (0..m).map(|_| rng.sample(StandardNormal)).collect();
        for b in &basis {
            let dot: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
            v.iter_mut().zip(b).for_each(|(x, y)| *x -= dot * y);
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-8 {
            v.iter_mut().for_each(|x| *x /= norm);
            basis.push(v);
        }
    }
    let mut out = vec![0.0; rows * cols];
    for r in 0..rows {
        for c in 0..cols {
            out[r * cols + c] = if rows <= cols { basis[r][c] } else { basis[c][r] };
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyOutput {
    pub mean: Vec<f64>,
    pub log_std: Vec<f64>,
    pub value: f64,
}

/// Forward activations of both towers for one observation.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    actor: TowerCache,
    critic: TowerCache,
}

impl ForwardCache {
    pub fn mean(&self) -> &[f64] {
        &self.actor.out
    }

    pub fn value(&self) -> f64 {
        self.critic.out[0]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyNet {
    shape: NetShape,
    params: Vec<f64>,
}

impl PolicyNet {
    /// Orthogonal weights (gain sqrt 2 in hidden layers, 0.01 on the mean
    /// head, 1 on the value head), zero biases and unit standard deviation.
    pub fn new(shape: NetShape, seed: u64) -> Self {
        let layout = Layout::new(&shape);
        let mut params = vec![0.0; layout.total()];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for (tower, head_gain) in [(&layout.actor, 0.01), (&layout.critic, 1.0)] {
            for (k, d) in tower.iter().enumerate() {
                let gain = if k == 2 { head_gain } else { 2f64.sqrt() };
                let w = orthogonal(d.n_out, d.n_in, &mut rng);
                for (p, v) in params[d.w..d.b].iter_mut().zip(w) {
                    *p = gain * v;
                }
            }
        }
        Self { shape, params }
    }

    pub fn zeros(shape: NetShape) -> Self {
        Self {
            params: vec![0.0; Layout::new(&shape).total()],
            shape,
        }
    }

    pub fn from_params(shape: NetShape, params: Vec<f64>) -> Result<Self> {
        let expected = Layout::new(&shape).total();
        if params.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                got: params.len(),
            });
        }
        Ok(Self { shape, params })
    }

    pub fn shape(&self) -> &NetShape {
        &self.shape
    }

    pub fn layout(&self) -> Layout {
        Layout::new(&self.shape)
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn log_std(&self) -> &[f64] {
        &self.params[self.layout().log_std_range()]
    }

    pub fn set_log_std(&mut self, value: f64) {
        let r = self.layout().log_std_range();
        self.params[r].fill(value.clamp(LOG_STD_MIN, LOG_STD_MAX));
    }

    pub fn clamp_log_std(&mut self) {
        let r = self.layout().log_std_range();
        for v in &mut self.params[r] {
            *v = v.clamp(LOG_STD_MIN, LOG_STD_MAX);
        }
    }

    pub fn is_finite(&self) -> bool {
        self.params.iter().all(|v| v.is_finite())
    }

    pub(crate) fn forward_cached(&self, obs: &[f64]) -> ForwardCache {
        let l = self.layout();
        ForwardCache {
            actor: tower_forward(&self.params, &l.actor, obs),
            critic: tower_forward(&self.params, &l.critic, obs),
        }
    }

    pub fn forward(&self, obs: &[f64]) -> Result<PolicyOutput> {
        if obs.len() != self.shape.obs_dim {
            return Err(Error::DimensionMismatch {
                expected: self.shape.obs_dim,
                got: obs.len(),
            });
        }
        let c = self.forward_cached(obs);
        Ok(PolicyOutput {
            value: c.value(),
            mean: c.actor.out,
            log_std: self.log_std().to_vec(),
        })
    }

    /// Backpropagates `dmean` through the actor and `dvalue` through the critic.
    pub(crate) fn backward(
        &self,
        obs: &[f64],
        cache: &ForwardCache,
        dmean: &[f64],
        dvalue: f64,
        grad: &mut [f64],
    ) {
        let l = self.layout();
        tower_backward(&self.params, &l.actor, obs, &cache.actor, dmean, grad);
        if dvalue != 0.0 {
            tower_backward(&self.params, &l.critic, obs, &cache.critic, &[dvalue], grad);
        }
    }

    /// Mean action, clamped into the action box.
    pub fn deterministic_action(&self, obs: &[f64]) -> Result<Action> {
        let out = self.forward(obs)?;
        Ok(Action::new(out.mean[0], out.mean[1]).clamped())
    }
}

/// Log-density of a diagonal Gaussian.
pub fn gaussian_log_prob(x: &[f64], mean: &[f64], log_std: &[f64]) -> f64 {
    x.iter()
        .zip(mean)
        .zip(log_std)
        .map(|((x, m), s)| {
            let z = (x - m) / s.exp();
            -0.5 * z * z - s - 0.5 * (2.0 * PI).ln()
        })
        .sum()
}

pub fn gaussian_entropy(log_std: &[f64]) -> f64 {
    log_std
        .iter()
        .map(|s| s + 0.5 * (1.0 + (2.0 * PI).ln()))
        .sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActionSample {
    /// Unclamped draw; the log-probability refers to this value.
    pub raw: [f64; 2],
    pub action: Action,
    pub log_prob: f64,
}

pub fn sample_action<R: Rng + ?Sized>(mean: &[f64], log_std: &[f64], rng: &mut R) -> ActionSample {
    let mut raw = [0.0; 2];
    for ((r, m), s) in raw.iter_mut().zip(mean).zip(log_std) {
        let z: f64 = rng.sample(StandardNormal);
        *r = m + s.clamp(LOG_STD_MIN, LOG_STD_MAX).exp() * z;
    }
    let clamped: Vec<f64> = log_std.iter().map(|s| s.clamp(LOG_STD_MIN, LOG_STD_MAX)).collect();
    ActionSample {
        raw,
        action: Action::new(raw[0], raw[1]).clamped(),
        log_prob: gaussian_log_prob(&raw, mean, &clamped),
    }
}
