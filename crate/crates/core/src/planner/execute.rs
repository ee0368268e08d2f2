//! Tick-level execution: the re-RRT* check-then-replan loop and the
//! fixed-frequency replanning baseline.

use std::collections::VecDeque;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{config_collides, edge_collides, inflate, plan_rrt_star, PlannerParams};
use crate::robot::{ArmModel, Capsule2, JointConfig, Point2};

/// Anything that exposes obstacles and advances one tick at a time.
pub trait ObstacleField {
    fn obstacles(&self) -> Vec<Capsule2>;
    fn advance(&mut self);
}

/// A world that never moves.
#[derive(Debug, Clone, Default)]
pub struct StaticObstacles(pub Vec<Capsule2>);

impl ObstacleField for StaticObstacles {
    fn obstacles(&self) -> Vec<Capsule2> {
        self.0.clone()
    }
    fn advance(&mut self) {}
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureReason {
    None,
    GoalInCollision,
    ReplanFailed,
    TickLimit,
    /// IK found no configuration for the requested end-effector goal.
    GoalUnreachable,
    /// An obstacle moved onto the robot's current configuration.
    RobotInCollision,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecutionResult {
    pub success: bool,
    /// Planner invocations after the initial plan.
    pub replan_count: usize,
    pub ee_trace: Vec<Point2>,
    pub elapsed_ticks: usize,
    pub failure_reason: FailureReason,
    /// Every planner invocation, the initial one included.
    pub plan_requests: usize,
    pub plan_failures: usize,
    pub final_config: JointConfig,
}

impl ExecutionResult {
    pub fn planning_failure_ratio(&self) -> f64 {
        if self.plan_requests == 0 {
            0.0
        } else {
            self.plan_failures as f64 / self.plan_requests as f64
        }
    }

    pub fn path_length(&self) -> f64 {
        ee_path_length(&self.ee_trace)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TickEvent {
    Advance,
    Hold,
    Replan,
    ReplanFailed,
}

/// One line of the per-run JSONL trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TickRecord {
    pub tick: usize,
    pub config: Vec<f64>,
    pub ee: Point2,
    pub obstacles: Vec<Capsule2>,
    pub events: Vec<TickEvent>,
}

/// Sum of consecutive Euclidean distances.
pub fn ee_path_length(trace: &[Point2]) -> f64 {
    trace.windows(2).map(|w| w[0].distance(w[1])).sum()
}

struct Run<'a, W: ObstacleField + ?Sized> {
    model: &'a ArmModel,
    params: &'a PlannerParams,
    world: &'a mut W,
    q: JointConfig,
    goal: JointConfig,
    path: Option<VecDeque<JointConfig>>,
    ticks: usize,
    requests: usize,
    failures: usize,
    trace: Vec<Point2>,
    log: Option<&'a mut Vec<TickRecord>>,
    events: Vec<TickEvent>,
}

impl<'a, W: ObstacleField + ?Sized> Run<'a, W> {
    fn plan<R: Rng + ?Sized>(&mut self, obstacles: &[Capsule2], budget: usize, rng: &mut R) -> bool {
        self.requests += 1;
        match plan_rrt_star(self.model, &self.q, &self.goal, obstacles, self.params, budget, rng) {
            Ok(path) => {
                let mut wp: VecDeque<JointConfig> = path.waypoints.into();
                wp.pop_front();
                self.path = Some(wp);
                if self.requests > 1 {
                    self.events.push(TickEvent::Replan);
                }
                true
            }
            Err(_) => {
                self.failures += 1;
                self.events.push(TickEvent::ReplanFailed);
                false
            }
        }
    }

    /// Whether the next `count` edges of the current path are blocked.
    fn path_blocked(&self, obstacles: &[Capsule2], count: usize) -> bool {
        let Some(path) = &self.path else {
            return true;
        };
        let mut prev = &self.q.angles;
        for wp in path.iter().take(count) {
            if edge_collides(
                self.model,
                prev,
                &wp.angles,
                obstacles,
                self.params.edge_check_resolution,
            ) {
                return true;
            }
            prev = &wp.angles;
        }
        false
    }

    fn arrived(&self) -> bool {
        matches!(&self.path, Some(p) if p.is_empty())
    }

    fn advance(&mut self) {
        if let Some(next) = self.path.as_mut().and_then(|p| p.pop_front()) {
            self.q = next;
            self.events.push(TickEvent::Advance);
        } else {
            self.events.push(TickEvent::Hold);
        }
    }

    /// Ends the tick: world moves, trace grows. Returns false when an
    /// obstacle has moved onto the robot.
    fn end_tick(&mut self) -> bool {
        self.world.advance();
        self.ticks += 1;
        self.trace.push(self.model.end_effector(&self.q.angles));
        let obstacles = self.world.obstacles();
        if let Some(log) = self.log.as_deref_mut() {
            log.push(TickRecord {
                tick: self.ticks,
                config: self.q.angles.clone(),
                ee: *self.trace.last().expect("trace non-empty"),
                obstacles: obstacles.clone(),
                events: std::mem::take(&mut self.events),
            });
        } else {
            self.events.clear();
        }
        !config_collides(self.model, &self.q.angles, &obstacles)
    }

    fn finish(self, reason: FailureReason) -> ExecutionResult {
        ExecutionResult {
            success: reason == FailureReason::None,
            replan_count: self.requests.saturating_sub(1),
            ee_trace: self.trace,
            elapsed_ticks: self.ticks,
            failure_reason: reason,
            plan_requests: self.requests,
            plan_failures: self.failures,
            final_config: self.q,
        }
    }
}

/// Shared prologue: goal resolution and the start-of-run checks.
fn start_run<'a, W: ObstacleField + ?Sized>(
    model: &'a ArmModel,
    start: &JointConfig,
    goal_ee: Point2,
    world: &'a mut W,
    params: &'a PlannerParams,
    log: Option<&'a mut Vec<TickRecord>>,
) -> Result<Run<'a, W>, ExecutionResult> {
    let trace = vec![model.end_effector(&start.angles)];
    let goal = model.inverse_kinematics(goal_ee, start);
    let mut run = Run {
        model,
        params,
        world,
        q: start.clone(),
        goal: start.clone(),
        path: None,
        ticks: 0,
        requests: 0,
        failures: 0,
        trace,
        log,
        events: Vec::new(),
    };
    match goal {
        Ok(g) => run.goal = g,
        Err(_) => return Err(run.finish(FailureReason::GoalUnreachable)),
    }
    if config_collides(model, &start.angles, &run.world.obstacles()) {
        return Err(run.finish(FailureReason::RobotInCollision));
    }
    Ok(run)
}

/// Follows a path waypoint by waypoint, checking the goal and the next
/// `predictive_check_count` edges against the current obstacles before every
/// move, and replanning from the current configuration only when the path
/// is invalidated. Exits early with `GoalInCollision` as soon as the goal
/// configuration is occupied.
pub fn execute_re_rrt_star<W, R>(
    model: &ArmModel,
    start: &JointConfig,
    goal_ee: Point2,
    world: &mut W,
    params: &PlannerParams,
    rng: &mut R,
    log: Option<&mut Vec<TickRecord>>,
) -> ExecutionResult
where
    W: ObstacleField + ?Sized,
    R: Rng + ?Sized,
{
    let mut run = match start_run(model, start, goal_ee, world, params, log) {
        Ok(r) => r,
        Err(done) => return done,
    };
    let budget = params.iteration_budget(params.time_budget);
    let mut consecutive_failures = 0;

    loop {
        if run.arrived() {
            return run.finish(FailureReason::None);
        }
        if run.ticks >= params.tick_cap {
            return run.finish(FailureReason::TickLimit);
        }
        let obstacles = inflate(&run.world.obstacles(), params.safety_margin);
        if config_collides(model, &run.goal.angles, &obstacles) {
            return run.finish(FailureReason::GoalInCollision);
        }
        if run.path_blocked(&obstacles, params.predictive_check_count) {
            if run.plan(&obstacles, budget, rng) {
                consecutive_failures = 0;
                if run.arrived() {
                    return run.finish(FailureReason::None);
                }
                run.advance();
            } else {
                consecutive_failures += 1;
                if consecutive_failures >= params.max_replan_attempts {
                    return run.finish(FailureReason::ReplanFailed);
                }
                run.events.push(TickEvent::Hold);
            }
        } else {
            run.advance();
        }
        if !run.end_tick() {
            return run.finish(FailureReason::RobotInCollision);
        }
    }
}

/// Baseline that requests a new plan every `replan_every` ticks regardless
/// of whether the current path is still valid. Each scheduled request gets
/// `replan_every * tick_duration` seconds of planning time. Between requests
/// the robot only performs a safety stop when its very next edge is blocked.
/// `replan_every = None` never replans after the initial plan.
#[allow(clippy::too_many_arguments)]
pub fn execute_fixed_frequency<W, R>(
    model: &ArmModel,
    start: &JointConfig,
    goal_ee: Point2,
    world: &mut W,
    replan_every: Option<usize>,
    params: &PlannerParams,
    rng: &mut R,
    log: Option<&mut Vec<TickRecord>>,
) -> ExecutionResult
where
    W: ObstacleField + ?Sized,
    R: Rng + ?Sized,
{
    let mut run = match start_run(model, start, goal_ee, world, params, log) {
        Ok(r) => r,
        Err(done) => return done,
    };
    let scheduled_budget = replan_every
        .map(|k| params.iteration_budget(Some(k.max(1) as f64 * params.tick_duration)))
        .unwrap_or(params.max_iters);
    let initial_budget = params.iteration_budget(params.time_budget);

    // the initial plan is made before the robot starts moving
    {
        let obstacles = inflate(&run.world.obstacles(), params.safety_margin);
        if config_collides(model, &run.goal.angles, &obstacles) {
            return run.finish(FailureReason::GoalInCollision);
        }
        run.plan(&obstacles, initial_budget, rng);
    }

    loop {
        if run.arrived() {
            return run.finish(FailureReason::None);
        }
        if run.ticks >= params.tick_cap {
            return run.finish(FailureReason::TickLimit);
        }
        let obstacles = inflate(&run.world.obstacles(), params.safety_margin);
        if config_collides(model, &run.goal.angles, &obstacles) {
            return run.finish(FailureReason::GoalInCollision);
        }
        if let Some(k) = replan_every {
            if run.ticks > 0 && run.ticks % k.max(1) == 0 {
                run.plan(&obstacles, scheduled_budget, rng);
                if run.arrived() {
                    return run.finish(FailureReason::None);
                }
            }
        }
        if run.path_blocked(&obstacles, 1) {
            run.events.push(TickEvent::Hold);
        } else {
            run.advance();
        }
        if !run.end_tick() {
            return run.finish(FailureReason::RobotInCollision);
        }
    }
}
