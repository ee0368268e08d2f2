//! Planar serial arm: forward kinematics, link geometry and damped
//! least-squares inverse kinematics.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::geometry::{Capsule2, Point2};
use crate::error::{Error, Result};

/// Joint-space point, one angle per link.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct JointConfig {
    pub angles: Vec<f64>,
}

impl JointConfig {
    pub fn new(angles: Vec<f64>) -> Self {
        Self { angles }
    }

    pub fn zeros(dof: usize) -> Self {
        Self {
            angles: vec![0.0; dof],
        }
    }

    pub fn dof(&self) -> usize {
        self.angles.len()
    }

    pub fn distance(&self, other: &JointConfig) -> f64 {
        joint_distance(&self.angles, &other.angles)
    }

    pub fn max_norm_distance(&self, other: &JointConfig) -> f64 {
        self.angles
            .iter()
            .zip(&other.angles)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl From<Vec<f64>> for JointConfig {
    fn from(angles: Vec<f64>) -> Self {
        Self { angles }
    }
}

/// Euclidean joint-space distance.
pub fn joint_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IkParams {
    pub damping: f64,
    pub step_clamp: f64,
    pub max_iters: usize,
    pub tolerance: f64,
    pub restarts: usize,
}

impl Default for IkParams {
    fn default() -> Self {
        Self {
            damping: 0.05,
            step_clamp: 0.2,
            max_iters: 200,
            tolerance: 1e-3,
            restarts: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ArmModel {
    pub base: Point2,
    pub link_lengths: Vec<f64>,
    pub link_radius: f64,
    pub joint_limits: Vec<[f64; 2]>,
    /// Largest per-joint change allowed in one control tick.
    pub max_joint_step: f64,
    pub ik: IkParams,
}

impl Default for ArmModel {
    fn default() -> Self {
        Self::with_links(vec![0.6, 0.5, 0.3], 0.04)
    }
}

impl ArmModel {
    /// Arm at the origin with `[-pi, pi]` limits on every joint.
    pub fn with_links(link_lengths: Vec<f64>, link_radius: f64) -> Self {
        let n = link_lengths.len();
        Self {
            base: Point2::default(),
            link_lengths,
            link_radius,
            joint_limits: vec![[-PI, PI]; n],
            max_joint_step: 0.15,
            ik: IkParams::default(),
        }
    }

    pub fn dof(&self) -> usize {
        self.link_lengths.len()
    }

    pub fn reach(&self) -> f64 {
        self.link_lengths.iter().sum()
    }

    /// Inner radius of the reachable annulus (zero when the arm can fold
    /// back onto its base).
    pub fn min_reach(&self) -> f64 {
        let longest = self.link_lengths.iter().cloned().fold(0.0, f64::max);
        (2.0 * longest - self.reach()).max(0.0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.link_lengths.is_empty() {
            return Err(Error::InvalidConfig("arm needs at least one link".into()));
        }
        if self.link_lengths.iter().any(|l| !(*l > 0.0 && l.is_finite())) {
            return Err(Error::InvalidConfig("link lengths must be positive".into()));
        }
        if !(self.link_radius > 0.0) {
            return Err(Error::InvalidConfig("link radius must be positive".into()));
        }
        if self.joint_limits.len() != self.dof() {
            return Err(Error::InvalidConfig(format!(
                "{} joint limits for {} links",
                self.joint_limits.len(),
                self.dof()
            )));
        }
        if self.joint_limits.iter().any(|[lo, hi]| !(lo < hi)) {
            return Err(Error::InvalidConfig("joint limits need lo < hi".into()));
        }
        if !(self.max_joint_step > 0.0) {
            return Err(Error::InvalidConfig("max_joint_step must be positive".into()));
        }
        if !self.base.is_finite() {
            return Err(Error::InvalidConfig("arm base must be finite".into()));
        }
        Ok(())
    }

    pub fn check_config(&self, q: &JointConfig) -> Result<()> {
        if q.dof() != self.dof() {
            return Err(Error::DimensionMismatch {
                expected: self.dof(),
                got: q.dof(),
            });
        }
        for (joint, (&angle, &[lo, hi])) in q.angles.iter().zip(&self.joint_limits).enumerate() {
            if !(angle >= lo && angle <= hi) {
                return Err(Error::JointLimit {
                    joint,
                    angle,
                    lo,
                    hi,
                });
            }
        }
        Ok(())
    }

    pub fn clamp_to_limits(&self, angles: &mut [f64]) {
        for (a, &[lo, hi]) in angles.iter_mut().zip(&self.joint_limits) {
            *a = a.clamp(lo, hi);
        }
    }

    /// Joint positions (base first, end-effector last) and the end-effector.
    pub fn forward_kinematics(&self, q: &JointConfig) -> Result<(Vec<Point2>, Point2)> {
        self.check_config(q)?;
        let joints = self.joint_positions(&q.angles);
        let ee = *joints.last().expect("at least the base");
        Ok((joints, ee))
    }

    /// Cumulative-angle chain without limit checks.
    pub fn joint_positions(&self, angles: &[f64]) -> Vec<Point2> {
        let mut out = Vec::with_capacity(angles.len() + 1);
        let mut p = self.base;
        let mut theta = 0.0;
        out.push(p);
        for (a, l) in angles.iter().zip(&self.link_lengths) {
            theta += a;
            p = p + Point2::new(theta.cos(), theta.sin()) * *l;
            out.push(p);
        }
        out
    }

    pub fn end_effector(&self, angles: &[f64]) -> Point2 {
        let mut p = self.base;
        let mut theta = 0.0;
        for (a, l) in angles.iter().zip(&self.link_lengths) {
            theta += a;
            p = p + Point2::new(theta.cos(), theta.sin()) * *l;
        }
        p
    }

    /// One capsule per link between consecutive joint positions.
    pub fn link_capsules(&self, q: &JointConfig) -> Vec<Capsule2> {
        self.joint_positions(&q.angles)
            .windows(2)
            .map(|w| Capsule2::new(w[0], w[1], self.link_radius))
            .collect()
    }

    /// Columns d(ee)/d(q_j) in closed form.
    pub fn analytic_jacobian(&self, angles: &[f64]) -> Vec<Point2> {
        let n = angles.len();
        let mut thetas = Vec::with_capacity(n);
        let mut theta = 0.0;
        for a in angles {
            theta += a;
            thetas.push(theta);
        }
        (0..n)
            .map(|j| {
                (j..n).fold(Point2::default(), |acc, k| {
                    let l = self.link_lengths[k];
                    acc + Point2::new(-thetas[k].sin() * l, thetas[k].cos() * l)
                })
            })
            .collect()
    }

    /// Central-difference Jacobian; this is what the IK iteration uses.
    pub fn finite_difference_jacobian(&self, angles: &[f64], h: f64) -> Vec<Point2> {
        let mut work = angles.to_vec();
        (0..angles.len())
            .map(|j| {
                work[j] = angles[j] + h;
                let plus = self.end_effector(&work);
                work[j] = angles[j] - h;
                let minus = self.end_effector(&work);
                work[j] = angles[j];
                (plus - minus) * (0.5 / h)
            })
            .collect()
    }

    /// Damped least-squares IK from `seed`, followed by deterministic random
    /// restarts. Joints are clamped to their limits after every iteration.
    pub fn inverse_kinematics(&self, target: Point2, seed: &JointConfig) -> Result<JointConfig> {
        let no_solution = Error::NoSolution {
            x: target.x,
            y: target.y,
        };
        if !target.is_finite() || seed.dof() != self.dof() {
            return Err(no_solution);
        }
        let r = target.distance(self.base);
        if r > self.reach() || r < self.min_reach() {
            return Err(no_solution);
        }

        let mut start = seed.angles.clone();
        self.clamp_to_limits(&mut start);
        if let Some(q) = self.dls_from(target, start) {
            return Ok(JointConfig::new(q));
        }
        // fixed stream so the solver stays a pure function of its inputs
        let mut rng = ChaCha8Rng::seed_from_u64(0x1c0ffee);
        for _ in 0..self.ik.restarts {
            let start: Vec<f64> = self
                .joint_limits
                .iter()
                .map(|&[lo, hi]| rng.random_range(lo..hi))
                .collect();
            if let Some(q) = self.dls_from(target, start) {
                return Ok(JointConfig::new(q));
            }
        }
        Err(no_solution)
    }

    fn dls_from(&self, target: Point2, mut q: Vec<f64>) -> Option<Vec<f64>> {
        let lambda2 = self.ik.damping * self.ik.damping;
        for _ in 0..=self.ik.max_iters {
            let err = target - self.end_effector(&q);
            if err.norm() <= self.ik.tolerance {
                return Some(q);
            }
            let jac = self.finite_difference_jacobian(&q, 1e-6);
            // (J J^T + lambda^2 I)^-1 e, with J J^T a 2x2 matrix
            let (mut a, mut b, mut d) = (lambda2, 0.0, lambda2);
            for c in &jac {
                a += c.x * c.x;
                b += c.x * c.y;
                d += c.y * c.y;
            }
            let det = a * d - b * b;
            if det.abs() < 1e-300 {
                return None;
            }
            let w = Point2::new((d * err.x - b * err.y) / det, (a * err.y - b * err.x) / det);
            let mut dq: Vec<f64> = jac.iter().map(|c| c.dot(w)).collect();
            let biggest = dq.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if biggest > self.ik.step_clamp {
                let s = self.ik.step_clamp / biggest;
                dq.iter_mut().for_each(|v| *v *= s);
            }
            for (qi, dqi) in q.iter_mut().zip(&dq) {
                *qi += dqi;
            }
            self.clamp_to_limits(&mut q);
        }
        None
    }
}
