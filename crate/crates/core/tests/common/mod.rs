//! Brute-force reference implementations shared by the oracle tests and the
//! acceptance run.
#![allow(dead_code)]

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;

use hrc_core::env::{compute_reward, nearest_task, EnvConfig, RewardWeights};
use hrc_core::planner::{collision_check, plan_rrt_star, PlannerParams};
use hrc_core::rl::{
    gae_advantages, importance_ratios, loss_and_grad, sample_action, LossCoefs, NetShape, PolicyNet, RolloutBuffer,
};
use hrc_core::robot::{segment_segment_distance, ArmModel, Capsule2, JointConfig, Point2, Segment2};
use hrc_core::world::World;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// ---------------------------------------------------------------- geometry

pub fn sample_points(s: &Segment2, n: usize) -> Vec<Point2> {
    (0..=n)
        .map(|i| s.a + (s.b - s.a) * (i as f64 / n as f64))
        .collect()
}

/// Minimum over a dense grid of point pairs. Never below the true distance,
/// and above it by at most half a sample spacing on each segment.
pub fn sampled_distance(s1: &Segment2, s2: &Segment2, n: usize) -> f64 {
    let p1 = sample_points(s1, n);
    let p2 = sample_points(s2, n);
    p1.iter()
        .flat_map(|a| p2.iter().map(move |b| a.distance(*b)))
        .fold(f64::INFINITY, f64::min)
}

/// Checks `count` random segment pairs; returns the number that disagree.
pub fn segment_distance_mismatches(count: usize, seed: u64) -> usize {
    const N: usize = 300;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pt = || Point2::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
    let mut bad = 0;
    for _ in 0..count {
        let (s1, s2) = (Segment2::new(pt(), pt()), Segment2::new(pt(), pt()));
        let exact = segment_segment_distance(&s1, &s2);
        let oracle = sampled_distance(&s1, &s2, N);
        let slack = 0.5 * (s1.a.distance(s1.b) + s2.a.distance(s2.b)) / N as f64 + 1e-12;
        if oracle < exact - 1e-12 || oracle > exact + slack {
            bad += 1;
        }
    }
    bad
}

// ---------------------------------------------------------------- planning

pub const GRID: usize = 121;

pub fn two_link() -> ArmModel {
    ArmModel::with_links(vec![0.6, 0.5], 0.04)
}

pub fn grid_angle(i: usize) -> f64 {
    -PI + 2.0 * PI * i as f64 / (GRID - 1) as f64
}

#[derive(PartialEq)]
struct Item(f64, usize);
impl Eq for Item {}
impl PartialOrd for Item {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Item {
    fn cmp(&self, o: &Self) -> Ordering {
        o.0.total_cmp(&self.0)
    }
}

/// Shortest 8-connected path on a joint-angle lattice, edges checked at their
/// midpoint as well as both ends. `None` when start and goal lie in different
/// free components of the lattice.
pub fn grid_dijkstra(arm: &ArmModel, obs: &[Capsule2], start: (usize, usize), goal: (usize, usize)) -> Option<f64> {
    let cfg = |i: usize, j: usize| JointConfig::new(vec![grid_angle(i), grid_angle(j)]);
    let free: Vec<bool> = (0..GRID * GRID)
        .map(|k| !collision_check(arm, &cfg(k / GRID, k % GRID), obs))
        .collect();
    let idx = |(i, j): (usize, usize)| i * GRID + j;
    let h = 2.0 * PI / (GRID - 1) as f64;
    let mut dist = vec![f64::INFINITY; GRID * GRID];
    let mut heap = BinaryHeap::new();
    dist[idx(start)] = 0.0;
    heap.push(Item(0.0, idx(start)));
    while let Some(Item(d, k)) = heap.pop() {
        if k == idx(goal) {
            return Some(d);
        }
        if d > dist[k] {
            continue;
        }
        let (i, j) = ((k / GRID) as i64, (k % GRID) as i64);
        for di in -1..=1i64 {
            for dj in -1..=1i64 {
                let (ni, nj) = (i + di, j + dj);
                if (di == 0 && dj == 0) || ni < 0 || nj < 0 || ni >= GRID as i64 || nj >= GRID as i64 {
                    continue;
                }
                let nk = ni as usize * GRID + nj as usize;
                if !free[nk] {
                    continue;
                }
                let mid = JointConfig::new(vec![
                    0.5 * (grid_angle(i as usize) + grid_angle(ni as usize)),
                    0.5 * (grid_angle(j as usize) + grid_angle(nj as usize)),
                ]);
                if collision_check(arm, &mid, obs) {
                    continue;
                }
                let nd = d + h * ((di * di + dj * dj) as f64).sqrt();
                if nd < dist[nk] {
                    dist[nk] = nd;
                    heap.push(Item(nd, nk));
                }
            }
        }
    }
    None
}

/// RRT* cost over lattice-optimal cost on seeded 2-link instances whose
/// start and goal the lattice connects. Failed plans report infinity.
pub fn rrt_over_grid_ratios(instances: usize, seed: u64) -> Vec<f64> {
    let arm = two_link();
    let params = PlannerParams {
        time_budget: None,
        ..PlannerParams::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ratios = Vec::new();
    while ratios.len() < instances {
        let obs: Vec<Capsule2> = (0..2)
            .map(|_| {
                let c = Point2::new(rng.random_range(-0.9..0.9), rng.random_range(-0.9..0.9));
                let ang: f64 = rng.random_range(0.0..PI);
                let d = Point2::new(ang.cos(), ang.sin()) * rng.random_range(0.05..0.25);
                Capsule2::new(c - d, c + d, rng.random_range(0.04..0.1))
            })
            .collect();
        let s = (rng.random_range(0..GRID), rng.random_range(0..GRID));
        let g = (rng.random_range(0..GRID), rng.random_range(0..GRID));
        let qs = JointConfig::new(vec![grid_angle(s.0), grid_angle(s.1)]);
        let qg = JointConfig::new(vec![grid_angle(g.0), grid_angle(g.1)]);
        if collision_check(&arm, &qs, &obs) || collision_check(&arm, &qg, &obs) || qs.distance(&qg) < 0.5 {
            continue;
        }
        let Some(reference) = grid_dijkstra(&arm, &obs, s, g) else {
            continue;
        };
        let ratio = match plan_rrt_star(&arm, &qs, &qg, &obs, &params, 3000, &mut rng) {
            Ok(path) => path.cost() / reference,
            Err(_) => f64::INFINITY,
        };
        ratios.push(ratio);
    }
    ratios
}

/// Queries where `nearest_task` disagrees with a linear scan over the
/// remaining tasks, across `worlds` partially completed worlds.
pub fn nearest_scan_mismatches(worlds: u64, seed: u64) -> usize {
    let cfg = EnvConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bad = 0;
    for w in 0..worlds {
        let mut world = World::reset_episode(&cfg.scenario, w).unwrap();
        let done = rng.random_range(0..cfg.scenario.tasks.n_tasks);
        for id in 0..done {
            world.complete_task(id).unwrap();
        }
        for _ in 0..20 {
            let g = Point2::new(rng.random_range(-1.5..1.5), rng.random_range(-0.5..1.7));
            let got = nearest_task(g, &world).unwrap().id;
            let mut best: Option<(f64, usize)> = None;
            for t in world.state.tasks.iter().filter(|t| t.id >= done) {
                let d = (t.position.x - g.x).hypot(t.position.y - g.y);
                if best.is_none_or(|(bd, _)| d < bd) {
                    best = Some((d, t.id));
                }
            }
            if best.map(|b| b.1) != Some(got) {
                bad += 1;
            }
        }
    }
    bad
}

// ---------------------------------------------------------------- learning

/// Advantages by explicit summation of discounted TD residuals, O(T^2).
pub fn gae_quadratic(rewards: &[f64], values: &[f64], dones: &[bool], last: f64, gamma: f64, lambda: f64) -> Vec<f64> {
    let n = rewards.len();
    let v_next = |t: usize| if t + 1 < n { values[t + 1] } else { last };
    let delta = |t: usize| rewards[t] + gamma * v_next(t) * if dones[t] { 0.0 } else { 1.0 } - values[t];
    (0..n)
        .map(|t| {
            let mut a = 0.0;
            let mut w = 1.0;
            for l in t..n {
                a += w * delta(l);
                if dones[l] {
                    break;
                }
                w *= gamma * lambda;
            }
            a
        })
        .collect()
}

/// Largest deviation of the recursive advantages and returns from
/// [`gae_quadratic`] over `cases` random rollouts of 20 steps.
pub fn gae_max_error(cases: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..cases {
        let n = 20;
        let rewards: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let values: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let dones: Vec<bool> = (0..n).map(|_| rng.random_bool(0.2)).collect();
        let last = rng.random_range(-1.0..1.0);
        let gamma = rng.random_range(0.8..1.0);
        let lambda = rng.random_range(0.0..1.0);
        let (adv, ret) = gae_advantages(&rewards, &values, &dones, last, gamma, lambda);
        let oracle = gae_quadratic(&rewards, &values, &dones, last, gamma, lambda);
        for t in 0..n {
            worst = worst.max((adv[t] - oracle[t]).abs());
            worst = worst.max((ret[t] - (oracle[t] + values[t])).abs());
        }
    }
    worst
}

pub fn tiny_shape() -> NetShape {
    NetShape {
        obs_dim: 4,
        hidden: [8, 8],
        act_dim: 2,
    }
}

/// Buffer collected with `collector`, so a different evaluated network sees
/// importance ratios away from 1.
pub fn rollout(collector: &PolicyNet, n: usize, seed: u64) -> RolloutBuffer {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut buf = RolloutBuffer::default();
    for t in 0..n {
        let obs: Vec<f64> = (0..collector.shape().obs_dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let out = collector.forward(&obs).unwrap();
        let s = sample_action(&out.mean, &out.log_std, &mut rng);
        buf.push(obs, s.raw, s.log_prob, rng.random_range(-1.0..1.0), out.value, t % 5 == 4);
    }
    buf.finish(0.1, 0.99, 0.95);
    buf
}

pub fn perturbed(net: &PolicyNet, scale: f64, seed: u64) -> PolicyNet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut p = net.clone();
    for v in p.params_mut() {
        *v += rng.random_range(-scale..scale);
    }
    p
}

pub const FD_STEP: f64 = 1e-5;
pub const FD_REL_TOL: f64 = 1e-4;
/// Denominator floor for parameters whose gradient vanishes.
pub const FD_FLOOR: f64 = 1e-5;

/// Largest relative error between the analytic loss gradient and central
/// differences, over every parameter of a tiny network.
pub fn worst_gradient_error(coefs: LossCoefs, clip: f64) -> f64 {
    let base = PolicyNet::new(tiny_shape(), 21);
    let buf = rollout(&base, 24, 22);
    let net = perturbed(&base, 0.05, 23);
    let batch: Vec<usize> = (0..24).collect();
    let (_, grad) = loss_and_grad(&net, &buf, &batch, clip, coefs);

    // differences across a kink of the clipped surrogate would be meaningless
    for r in importance_ratios(&net, &buf) {
        assert!((r - (1.0 - clip)).abs() > 1e-3 && (r - (1.0 + clip)).abs() > 1e-3);
    }

    let mut worst: f64 = 0.0;
    for (i, g) in grad.iter().enumerate() {
        let mut plus = net.clone();
        plus.params_mut()[i] += FD_STEP;
        let mut minus = net.clone();
        minus.params_mut()[i] -= FD_STEP;
        let lp = loss_and_grad(&plus, &buf, &batch, clip, coefs).0.total;
        let lm = loss_and_grad(&minus, &buf, &batch, clip, coefs).0.total;
        let numeric = (lp - lm) / (2.0 * FD_STEP);
        let rel = (g - numeric).abs() / g.abs().max(numeric.abs()).max(FD_FLOOR);
        worst = worst.max(rel);
    }
    worst
}

// ---------------------------------------------------------------- reward

/// `(achieved, goal_collision, replans, distance, expected)` under the
/// default weights 1, 1, 0.1, 0.5, worked out by hand.
pub const REWARD_TABLE: &[(bool, bool, usize, f64, f64)] = &[
    (true, false, 0, 0.0, 1.0),
    (true, false, 0, 0.2, 0.9),
    (true, false, 3, 0.0, 0.7),
    (true, false, 2, 0.4, 0.6),
    (false, true, 0, 0.0, -1.0),
    (false, true, 0, 0.3, -1.15),
    (false, false, 0, 0.0, 0.0),
    (false, false, 5, 0.0, -0.5),
    (false, false, 1, 1.0, -0.6),
    (false, true, 4, 0.1, -1.45),
];

/// Rows of [`REWARD_TABLE`] the reward function gets wrong.
pub fn reward_table_mismatches() -> usize {
    let w = RewardWeights::default();
    REWARD_TABLE
        .iter()
        .filter(|&&(a, c, k, d, expect)| (compute_reward(a, c, k, d, &w) - expect).abs() > 1e-12)
        .count()
}
