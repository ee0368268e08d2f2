//! Joint-space motion planning: collision checking, RRT* and the
//! check-then-replan execution loops.

mod execute;
mod rrt_star;

pub use execute::{
    ee_path_length, execute_fixed_frequency, execute_re_rrt_star, ExecutionResult, FailureReason,
    ObstacleField, StaticObstacles, TickRecord,
};
pub use rrt_star::{plan_rrt_star, RrtStar, Tree};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::robot::{ArmModel, Capsule2, JointConfig, Point2, Segment2};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlannerParams {
    pub max_iters: usize,
    /// Largest joint-space extension per tree edge (radians).
    pub steer_step: f64,
    pub goal_bias: f64,
    /// Scale of the shrinking rewire radius `gamma * (ln n / n)^(1/d)`.
    pub rewire_radius_const: f64,
    pub edge_check_resolution: f64,
    /// Number of upcoming waypoints checked each tick.
    pub predictive_check_count: usize,
    /// Planning time allowed per request, in seconds of the virtual planning
    /// clock. `None` means only `max_iters` applies.
    pub time_budget: Option<f64>,
    /// Iterations the virtual planning clock credits per second.
    pub planning_rate: f64,
    /// Clearance added to obstacle radii for planning and predictive checks.
    pub safety_margin: f64,
    pub max_replan_attempts: usize,
    pub tick_cap: usize,
    pub tick_duration: f64,
}

impl Default for PlannerParams {
    fn default() -> Self {
        Self {
            max_iters: 3000,
            steer_step: 0.15,
            goal_bias: 0.1,
            rewire_radius_const: 6.0,
            edge_check_resolution: 0.05,
            predictive_check_count: 5,
            time_budget: Some(2.0),
            planning_rate: 1500.0,
            safety_margin: 0.02,
            max_replan_attempts: 5,
            tick_cap: 500,
            tick_duration: 0.1,
        }
    }
}

impl PlannerParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.max_iters == 0 {
            return bad("max_iters must be > 0");
        }
        if !(self.steer_step > 0.0) {
            return bad("steer_step must be > 0");
        }
        if !(0.0..=1.0).contains(&self.goal_bias) {
            return bad("goal_bias must lie in [0, 1]");
        }
        if self.predictive_check_count == 0 {
            return bad("predictive_check_count must be >= 1");
        }
        if !(self.edge_check_resolution > 0.0) {
            return bad("edge_check_resolution must be > 0");
        }
        if !(self.rewire_radius_const > 0.0) {
            return bad("rewire_radius_const must be > 0");
        }
        if let Some(t) = self.time_budget {
            if !(t > 0.0) {
                return bad("time_budget must be > 0");
            }
        }
        if !(self.planning_rate > 0.0) {
            return bad("planning_rate must be > 0");
        }
        if !(self.safety_margin >= 0.0) {
            return bad("safety_margin must be >= 0");
        }
        if !(self.tick_duration > 0.0) {
            return bad("tick_duration must be > 0");
        }
        if self.tick_cap == 0 {
            return bad("tick_cap must be > 0");
        }
        Ok(())
    }

    /// Iterations one request may spend under the given time budget.
    pub fn iteration_budget(&self, time_budget: Option<f64>) -> usize {
        match time_budget {
            Some(t) => ((t * self.planning_rate).floor() as usize).clamp(1, self.max_iters),
            None => self.max_iters,
        }
    }
}

/// Ordered joint-space waypoints from the start configuration to the goal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Path {
    pub waypoints: Vec<JointConfig>,
}

impl Path {
    pub fn len(&self) -> usize {
        self.waypoints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.waypoints.is_empty()
    }

    /// Sum of Euclidean joint-space edge lengths.
    pub fn cost(&self) -> f64 {
        self.waypoints
            .windows(2)
            .map(|w| w[0].distance(&w[1]))
            .sum()
    }

    pub fn max_step(&self) -> f64 {
        self.waypoints
            .windows(2)
            .map(|w| w[0].max_norm_distance(&w[1]))
            .fold(0.0, f64::max)
    }
}

/// True iff any link capsule of `q` collides with any obstacle.
pub fn collision_check(model: &ArmModel, q: &JointConfig, obstacles: &[Capsule2]) -> bool {
    config_collides(model, &q.angles, obstacles)
}

/// Allocation-free collision check on raw joint angles.
pub(crate) fn config_collides(model: &ArmModel, angles: &[f64], obstacles: &[Capsule2]) -> bool {
    if obstacles.is_empty() {
        return false;
    }
    let mut p = model.base;
    let mut theta = 0.0;
    for (a, l) in angles.iter().zip(&model.link_lengths) {
        theta += a;
        let next = p + Point2::new(theta.cos(), theta.sin()) * *l;
        let link = Segment2::new(p, next);
        for ob in obstacles {
            let reach = ob.radius + model.link_radius;
            if crate::robot::segment_segment_distance(&link, &ob.axis) <= reach {
                return true;
            }
        }
        p = next;
    }
    false
}

/// Checks the straight joint-space edge `from -> to` at `resolution`
/// (max-norm spacing), excluding `from` itself.
pub(crate) fn edge_collides(
    model: &ArmModel,
    from: &[f64],
    to: &[f64],
    obstacles: &[Capsule2],
    resolution: f64,
) -> bool {
    if obstacles.is_empty() {
        return false;
    }
    let span = from
        .iter()
        .zip(to)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let steps = ((span / resolution).ceil() as usize).max(1);
    let mut work = vec![0.0; from.len()];
    for i in 1..=steps {
        let t = i as f64 / steps as f64;
        for (w, (a, b)) in work.iter_mut().zip(from.iter().zip(to)) {
            *w = a + (b - a) * t;
        }
        if config_collides(model, &work, obstacles) {
            return true;
        }
    }
    false
}

pub(crate) fn inflate(obstacles: &[Capsule2], margin: f64) -> Vec<Capsule2> {
    obstacles.iter().map(|o| o.inflated(margin)).collect()
}
