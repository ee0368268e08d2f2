//! Task-planning MDP: a 2D end-effector goal per step, nearest-task
//! assignment, re-RRT* execution and a three-layer occupancy observation.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::planner::{
    collision_check, execute_re_rrt_star, FailureReason, PlannerParams, TickRecord,
};
use crate::robot::{ArmModel, JointConfig, Point2};
use crate::seeding::splitmix64;
use crate::world::{Scenario, TaskItem, Workspace, World};

pub const GRID: usize = 10;
pub const LAYERS: usize = 3;
pub const OBS_DIM: usize = LAYERS * GRID * GRID;

/// Normalized action in `[-1, 1]^2`, mapped affinely onto the workspace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Action {
    pub u: [f64; 2],
}

impl Action {
    pub fn new(u0: f64, u1: f64) -> Self {
        Self { u: [u0, u1] }
    }

    pub fn clamped(self) -> Self {
        Self {
            u: self.u.map(|v| if v.is_nan() { 0.0 } else { v.clamp(-1.0, 1.0) }),
        }
    }

    pub fn decode(self, ws: &Workspace) -> Point2 {
        let [u0, u1] = self.clamped().u;
        let c = ws.center();
        Point2::new(c.x + 0.5 * u0 * ws.width(), c.y + 0.5 * u1 * ws.height())
    }

    /// Inverse of [`Action::decode`] for points inside the workspace.
    pub fn encode(p: Point2, ws: &Workspace) -> Self {
        let c = ws.center();
        Self::new(2.0 * (p.x - c.x) / ws.width(), 2.0 * (p.y - c.y) / ws.height()).clamped()
    }
}

/// 3 x 10 x 10 integer grid: remaining tasks (+1), arm 1 (-1), arm 2 (-1).
/// Indexed as `(layer, x_bin, y_bin)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    pub cells: [[[i8; GRID]; GRID]; LAYERS],
}

impl FeatureMatrix {
    pub fn zeros() -> Self {
        Self {
            cells: [[[0; GRID]; GRID]; LAYERS],
        }
    }

    pub fn get(&self, layer: usize, i: usize, j: usize) -> i8 {
        self.cells[layer][i][j]
    }

    pub fn layer_sum(&self, layer: usize) -> i32 {
        self.cells[layer]
            .iter()
            .flat_map(|row| row.iter())
            .map(|&v| v as i32)
            .sum()
    }

    /// Row-major flattening, layer first.
    pub fn flatten(&self) -> Vec<f64> {
        self.cells
            .iter()
            .flat_map(|l| l.iter().flat_map(|r| r.iter().map(|&v| v as f64)))
            .collect()
    }
}

pub fn grid_cell(p: Point2, ws: &Workspace) -> (usize, usize) {
    let bin = |v: f64, lo: f64, extent: f64| {
        // nudge so points on a cell boundary land in the upper cell despite
        // rounding in `v - lo`
        let b = ((v - lo) / extent * GRID as f64 + 1e-9).floor();
        if b.is_nan() {
            0
        } else {
            b.clamp(0.0, (GRID - 1) as f64) as usize
        }
    };
    (
        bin(p.x, ws.x_min, ws.width()),
        bin(p.y, ws.y_min, ws.height()),
    )
}

pub fn encode_observation(world: &World) -> FeatureMatrix {
    let ws = &world.scenario.workspace;
    let mut f = FeatureMatrix::zeros();
    for t in world.remaining() {
        let (i, j) = grid_cell(t.position, ws);
        f.cells[0][i][j] = 1;
    }
    if world.scenario.human.arms_present {
        for (arm, p) in world.state.arm_positions.iter().enumerate() {
            let (i, j) = grid_cell(*p, ws);
            f.cells[1 + arm][i][j] = -1;
        }
    }
    f
}

/// Remaining task closest to `goal`; ties go to the lowest id.
pub fn nearest_task(goal: Point2, world: &World) -> Result<&TaskItem> {
    world
        .remaining()
        .min_by(|a, b| {
            goal.distance(a.position)
                .total_cmp(&goal.distance(b.position))
                .then(a.id.cmp(&b.id))
        })
        .ok_or(Error::NoTasksRemaining)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RewardWeights {
    pub achieved: f64,
    pub collision: f64,
    pub replan: f64,
    pub distance: f64,
}

impl Default for RewardWeights {
    fn default() -> Self {
        Self {
            achieved: 1.0,
            collision: 1.0,
            replan: 0.1,
            distance: 0.5,
        }
    }
}

impl RewardWeights {
    pub fn validate(&self) -> Result<()> {
        if [self.achieved, self.collision, self.replan, self.distance]
            .iter()
            .any(|w| !(*w >= 0.0 && w.is_finite()))
        {
            return Err(Error::InvalidConfig("reward weights must be finite and >= 0".into()));
        }
        Ok(())
    }
}

/// `a0 [achieved] - a1 [collision] - a2 c - a3 d`, with `d` the plain
/// Euclidean goal-to-task distance.
pub fn compute_reward(
    task_achieved: bool,
    goal_collision: bool,
    replans: usize,
    distance: f64,
    w: &RewardWeights,
) -> f64 {
    let indicator = |b: bool| if b { 1.0 } else { 0.0 };
    w.achieved * indicator(task_achieved)
        - w.collision * indicator(goal_collision)
        - w.replan * replans as f64
        - w.distance * distance
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnvConfig {
    pub scenario: Scenario,
    pub arm: ArmModel,
    /// Configuration the robot returns to after every step.
    pub home: JointConfig,
    pub planner: PlannerParams,
    pub reward: RewardWeights,
    pub robot_quota: usize,
    pub max_steps: usize,
    /// Human ticks that elapse after each step (drop-off or back-off time).
    pub idle_ticks: usize,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            scenario: Scenario::default(),
            arm: ArmModel {
                // one elbow orientation only; keeps the planning space compact
                joint_limits: vec![[0.0, PI], [-PI, 0.0], [-PI, 0.0]],
                ..ArmModel::default()
            },
            home: JointConfig::new(vec![2.6, -2.6, -0.6]),
            planner: PlannerParams::default(),
            reward: RewardWeights::default(),
            robot_quota: 6,
            max_steps: 30,
            idle_ticks: 10,
        }
    }
}

impl EnvConfig {
    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        self.arm.validate()?;
        self.arm.check_config(&self.home)?;
        self.planner.validate()?;
        self.reward.validate()?;
        if self.planner.steer_step > self.arm.max_joint_step {
            return Err(Error::InvalidConfig(
                "planner steer_step exceeds the arm's max_joint_step".into(),
            ));
        }
        if self.robot_quota == 0 || self.max_steps == 0 {
            return Err(Error::InvalidConfig("robot_quota and max_steps must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepInfo {
    pub task_achieved: bool,
    pub goal_collision: bool,
    pub replan_count: usize,
    pub distance: f64,
    pub assigned_task: Option<usize>,
    pub goal_ee: Point2,
    pub execution_failure: Option<FailureReason>,
    pub execution_ticks: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub observation: FeatureMatrix,
    pub reward: f64,
    pub done: bool,
    pub info: StepInfo,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EpisodeMetrics {
    pub failures: usize,
    pub replans: usize,
    pub episode_return: f64,
    pub steps: usize,
    pub completed: usize,
}

/// The task-planning environment. One instance runs one episode at a time.
#[derive(Debug, Clone)]
pub struct TaskEnv {
    cfg: EnvConfig,
    world: World,
    robot: JointConfig,
    planner_rng: ChaCha8Rng,
    metrics: EpisodeMetrics,
    done: bool,
    record_ticks: bool,
    tick_log: Vec<TickRecord>,
}

fn planner_seed(seed: u64) -> u64 {
    // decorrelates the planner stream from the world stream of the same seed
    splitmix64(seed)
}

impl TaskEnv {
    pub fn new(cfg: EnvConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let world = World::reset_episode(&cfg.scenario, seed)?;
        Ok(Self {
            robot: cfg.home.clone(),
            planner_rng: ChaCha8Rng::seed_from_u64(planner_seed(seed)),
            world,
            cfg,
            metrics: EpisodeMetrics::default(),
            done: false,
            record_ticks: false,
            tick_log: Vec::new(),
        })
    }

    pub fn config(&self) -> &EnvConfig {
        &self.cfg
    }

    pub fn world(&self) -> &World {
        &self.world
    }

    pub fn world_mut(&mut self) -> &mut World {
        &mut self.world
    }

    pub fn robot(&self) -> &JointConfig {
        &self.robot
    }

    pub fn metrics(&self) -> EpisodeMetrics {
        self.metrics
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    /// Keep per-tick execution records (for the `demo` trace).
    pub fn set_tick_recording(&mut self, on: bool) {
        self.record_ticks = on;
    }

    pub fn take_tick_log(&mut self) -> Vec<TickRecord> {
        std::mem::take(&mut self.tick_log)
    }

    pub fn reset(&mut self, seed: u64) -> Result<FeatureMatrix> {
        self.world = World::reset_episode(&self.cfg.scenario, seed)?;
        self.robot = self.cfg.home.clone();
        self.planner_rng = ChaCha8Rng::seed_from_u64(planner_seed(seed));
        self.metrics = EpisodeMetrics::default();
        self.done = false;
        self.tick_log.clear();
        Ok(self.observe())
    }

    /// Resets to `seed` and plays one full episode, asking `policy` for each
    /// action.
    pub fn run_episode<F>(&mut self, seed: u64, mut policy: F) -> Result<EpisodeMetrics>
    where
        F: FnMut(&TaskEnv, &FeatureMatrix) -> Result<Action>,
    {
        let mut obs = self.reset(seed)?;
        while !self.done {
            let a = policy(self, &obs)?;
            obs = self.step(a)?.observation;
        }
        Ok(self.metrics)
    }

    pub fn observe(&self) -> FeatureMatrix {
        encode_observation(&self.world)
    }

    pub fn step(&mut self, action: Action) -> Result<StepOutcome> {
        if self.done {
            return Err(Error::EpisodeFinished);
        }
        let cfg = &self.cfg;
        let goal_ee = action.decode(&cfg.scenario.workspace);
        let nearest = nearest_task(goal_ee, &self.world)?.clone();
        let distance = goal_ee.distance(nearest.position);

        let obstacles: Vec<_> = self
            .world
            .obstacles_at()
            .iter()
            .map(|o| o.inflated(cfg.planner.safety_margin))
            .collect();
        let goal_collision = match cfg.arm.inverse_kinematics(goal_ee, &cfg.home) {
            Ok(q) => collision_check(&cfg.arm, &q, &obstacles),
            Err(_) => true,
        };

        let mut info = StepInfo {
            task_achieved: false,
            goal_collision,
            replan_count: 0,
            distance,
            assigned_task: None,
            goal_ee,
            execution_failure: None,
            execution_ticks: 0,
        };
        if !goal_collision {
            info.assigned_task = Some(nearest.id);
            let log = self.record_ticks.then_some(&mut self.tick_log);
            let result = execute_re_rrt_star(
                &cfg.arm,
                &self.robot,
                nearest.position,
                &mut self.world,
                &cfg.planner,
                &mut self.planner_rng,
                log,
            );
            info.replan_count = result.replan_count;
            info.execution_ticks = result.elapsed_ticks;
            if result.success {
                self.world.complete_task(nearest.id)?;
                info.task_achieved = true;
            } else {
                info.execution_failure = Some(result.failure_reason);
            }
        }
        // drop-off (or back-off) returns the arm home while the human keeps moving
        self.robot = self.cfg.home.clone();
        for _ in 0..self.cfg.idle_ticks {
            self.world.step_human();
        }

        let reward = compute_reward(
            info.task_achieved,
            info.goal_collision,
            info.replan_count,
            info.distance,
            &self.cfg.reward,
        );
        let m = &mut self.metrics;
        m.steps += 1;
        m.replans += info.replan_count;
        m.episode_return += reward;
        if info.task_achieved {
            m.completed += 1;
        } else {
            m.failures += 1;
        }
        self.done = m.completed >= self.cfg.robot_quota
            || self.world.remaining_count() == 0
            || m.steps >= self.cfg.max_steps;

        Ok(StepOutcome {
            observation: self.observe(),
            reward,
            done: self.done,
            info,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reward_substitution_table() {
        let w = RewardWeights::default();
        assert_eq!(compute_reward(true, false, 0, 0.0, &w), 1.0);
        assert!((compute_reward(false, true, 0, 0.4, &w) - (-1.2)).abs() < 1e-15);
        assert!((compute_reward(true, false, 3, 0.2, &w) - 0.6).abs() < 1e-15);
    }

    #[test]
    fn reward_monotone_in_replans_and_distance() {
        let w = RewardWeights::default();
        for achieved in [false, true] {
            for coll in [false, true] {
                let mut prev = f64::INFINITY;
                for c in 0..20 {
                    let r = compute_reward(achieved, coll, c, 0.3, &w);
                    assert!(r <= prev);
                    prev = r;
                }
                let mut prev = f64::INFINITY;
                for k in 0..50 {
                    let r = compute_reward(achieved, coll, 2, k as f64 * 0.05, &w);
                    assert!(r <= prev);
                    prev = r;
                }
            }
        }
    }

    #[test]
    fn action_decoding() {
        let ws = Workspace::default();
        assert_eq!(Action::new(0.0, 0.0).decode(&ws), ws.center());
        let corner = Action::new(-3.0, 5.0).decode(&ws);
        assert_eq!(corner, Point2::new(ws.x_min, ws.y_max));
        let p = Point2::new(0.13, 0.91);
        let back = Action::encode(p, &ws).decode(&ws);
        assert!(back.distance(p) < 1e-12);
    }

    #[test]
    fn center_task_bins_to_five_five() {
        let ws = Workspace::default();
        assert_eq!(grid_cell(ws.center(), &ws), (5, 5));
        assert_eq!(grid_cell(Point2::new(ws.x_max, ws.y_max), &ws), (9, 9));
        assert_eq!(grid_cell(Point2::new(-10.0, -10.0), &ws), (0, 0));
    }

    #[test]
    fn shared_cell_is_one_hot() {
        let mut world = World::reset_episode(&Scenario::default(), 0).unwrap();
        let c = world.scenario.workspace.center();
        world.state.tasks[0].position = c;
        world.state.tasks[1].position = c + Point2::new(0.01, 0.01);
        let f = encode_observation(&world);
        assert_eq!(f.get(0, 5, 5), 1);
        for id in 0..12 {
            world.complete_task(id).unwrap();
        }
        assert_eq!(encode_observation(&world).layer_sum(0), 0);
    }

    #[test]
    fn nearest_tie_breaks_low_id() {
        let mut world = World::reset_episode(&Scenario::default(), 0).unwrap();
        let c = world.scenario.workspace.center();
        for t in world.state.tasks.iter_mut() {
            t.position = c + Point2::new(0.45, 0.45);
        }
        world.state.tasks[5].position = c + Point2::new(0.1, 0.0);
        world.state.tasks[2].position = c - Point2::new(0.1, 0.0);
        assert_eq!(nearest_task(c, &world).unwrap().id, 2);
        let t7 = world.state.tasks[7].position;
        let n = nearest_task(t7, &world).unwrap();
        assert!(n.position.distance(t7) == 0.0);
        assert_eq!(n.id, 0, "all tasks except 2 and 5 share this spot");
    }

    #[test]
    fn reset_counts_and_layers() {
        let mut env = TaskEnv::new(EnvConfig::default(), 0).unwrap();
        let obs = env.reset(11).unwrap();
        assert_eq!(env.world().remaining_count(), 12);
        assert_eq!(env.metrics().failures, 0);
        assert_eq!(obs.layer_sum(1), -1);
        assert_eq!(obs.layer_sum(2), -1);
        assert_eq!(env.reset(11).unwrap(), obs);
    }

    #[test]
    fn default_config_valid() {
        EnvConfig::default().validate().unwrap();
    }
}
