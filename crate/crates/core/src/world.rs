//! Shared-workspace simulation: task blocks and two moving human arms.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::planner::ObstacleField;
use crate::robot::{Capsule2, Point2};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Workspace {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Default for Workspace {
    fn default() -> Self {
        Self {
            x_min: -0.5,
            x_max: 0.5,
            y_min: 0.2,
            y_max: 1.2,
        }
    }
}

impl Workspace {
    pub fn validate(&self) -> Result<()> {
        if !(self.x_min < self.x_max && self.y_min < self.y_max) {
            return Err(Error::InvalidConfig("workspace needs min < max on both axes".into()));
        }
        Ok(())
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn center(&self) -> Point2 {
        Point2::new(
            0.5 * (self.x_min + self.x_max),
            0.5 * (self.y_min + self.y_max),
        )
    }

    pub fn contains(&self, p: Point2) -> bool {
        p.x >= self.x_min && p.x <= self.x_max && p.y >= self.y_min && p.y <= self.y_max
    }

    pub fn clamp(&self, p: Point2) -> Point2 {
        Point2::new(p.x.clamp(self.x_min, self.x_max), p.y.clamp(self.y_min, self.y_max))
    }

    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> Point2 {
        Point2::new(
            rng.random_range(self.x_min..self.x_max),
            rng.random_range(self.y_min..self.y_max),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MotionKind {
    Gaussian,
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HumanMotionModel {
    pub kind: MotionKind,
    /// Per-axis standard deviation around the episode mean (gaussian only).
    pub sigma: f64,
    pub arm_radius: f64,
    pub arm_length: f64,
    /// Fraction of the remaining distance to the target covered per tick.
    pub step_smoothing: f64,
    pub retarget_interval: u64,
    /// Shoulder anchors; defaults to two points on the far workspace edge.
    pub anchors: Option<[Point2; 2]>,
    /// Pins the episode means instead of sampling them.
    pub fixed_means: Option<[Point2; 2]>,
    /// With no arms present the workspace is obstacle-free.
    pub arms_present: bool,
}

impl Default for HumanMotionModel {
    fn default() -> Self {
        Self {
            kind: MotionKind::Gaussian,
            sigma: 0.15,
            arm_radius: 0.06,
            arm_length: 0.6,
            step_smoothing: 0.2,
            retarget_interval: 10,
            anchors: None,
            fixed_means: None,
            arms_present: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TaskLayout {
    pub n_tasks: usize,
    pub grid_cols: usize,
    pub grid_rows: usize,
    /// Uniform offset (meters, per axis) applied to each cell center.
    pub jitter: f64,
    pub min_task_spacing: f64,
}

impl Default for TaskLayout {
    fn default() -> Self {
        Self {
            n_tasks: 12,
            grid_cols: 4,
            grid_rows: 4,
            jitter: 0.05,
            min_task_spacing: 0.12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct Scenario {
    pub workspace: Workspace,
    pub tasks: TaskLayout,
    pub human: HumanMotionModel,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        self.workspace.validate()?;
        let t = &self.tasks;
        if t.grid_cols == 0 || t.grid_rows == 0 {
            return Err(Error::InvalidConfig("task grid must be non-empty".into()));
        }
        if t.n_tasks > t.grid_cols * t.grid_rows {
            return Err(Error::InvalidConfig(format!(
                "{} tasks exceed grid capacity {}",
                t.n_tasks,
                t.grid_cols * t.grid_rows
            )));
        }
        let (cw, ch) = self.cell_size();
        if !(t.jitter >= 0.0) || 2.0 * t.jitter > cw.min(ch) {
            return Err(Error::InvalidConfig("jitter must fit inside a grid cell".into()));
        }
        if cw.min(ch) - 2.0 * t.jitter < t.min_task_spacing {
            return Err(Error::InvalidConfig(
                "grid cells too small for min_task_spacing under jitter".into(),
            ));
        }
        let h = &self.human;
        if h.kind == MotionKind::Gaussian && !(h.sigma >= 0.0 && h.sigma.is_finite()) {
            return Err(Error::InvalidConfig("sigma must be finite and >= 0".into()));
        }
        if !(h.arm_radius > 0.0 && h.arm_length > 0.0) {
            return Err(Error::InvalidConfig("arm dimensions must be positive".into()));
        }
        if !(h.step_smoothing > 0.0 && h.step_smoothing <= 1.0) {
            return Err(Error::InvalidConfig("step_smoothing must lie in (0, 1]".into()));
        }
        if h.retarget_interval == 0 {
            return Err(Error::InvalidConfig("retarget_interval must be >= 1".into()));
        }
        Ok(())
    }

    fn cell_size(&self) -> (f64, f64) {
        (
            self.workspace.width() / self.tasks.grid_cols as f64,
            self.workspace.height() / self.tasks.grid_rows as f64,
        )
    }

    pub fn anchors(&self) -> [Point2; 2] {
        self.human.anchors.unwrap_or_else(|| {
            let w = &self.workspace;
            [
                Point2::new(w.x_min + 0.3 * w.width(), w.y_max),
                Point2::new(w.x_min + 0.7 * w.width(), w.y_max),
            ]
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskState {
    Remaining,
    Done,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskItem {
    pub id: usize,
    pub position: Point2,
    pub state: TaskState,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorldState {
    pub tasks: Vec<TaskItem>,
    /// Latest sampled target per arm (may lie outside the workspace).
    pub arm_targets: [Point2; 2],
    /// Smoothed wrist positions, always inside the workspace.
    pub arm_positions: [Point2; 2],
    pub episode_means: [Point2; 2],
    pub tick: u64,
    pub rng: ChaCha8Rng,
}

/// A scenario together with its evolving state.
#[derive(Debug, Clone, PartialEq)]
pub struct World {
    pub scenario: Scenario,
    pub state: WorldState,
}

impl World {
    /// Lays out tasks on a jittered grid, samples per-arm episode means and
    /// places the arms. Task ids follow a random permutation of the chosen
    /// cells, so id order carries no spatial information.
    pub fn reset_episode(scenario: &Scenario, seed: u64) -> Result<World> {
        scenario.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ws = scenario.workspace;
        let layout = &scenario.tasks;
        let (cw, ch) = scenario.cell_size();

        let mut cells: Vec<usize> = (0..layout.grid_cols * layout.grid_rows).collect();
        cells.shuffle(&mut rng);
        let tasks = cells[..layout.n_tasks]
            .iter()
            .enumerate()
            .map(|(id, &cell)| {
                let (cx, cy) = (cell % layout.grid_cols, cell / layout.grid_cols);
                let mut jitter = || {
                    if layout.jitter > 0.0 {
                        rng.random_range(-layout.jitter..=layout.jitter)
                    } else {
                        0.0
                    }
                };
                let (jx, jy) = (jitter(), jitter());
                let center = Point2::new(
                    ws.x_min + (cx as f64 + 0.5) * cw,
                    ws.y_min + (cy as f64 + 0.5) * ch,
                );
                TaskItem {
                    id,
                    position: ws.clamp(center + Point2::new(jx, jy)),
                    state: TaskState::Remaining,
                }
            })
            .collect();

        let means = match scenario.human.fixed_means {
            Some(m) => m,
            None => [ws.sample_uniform(&mut rng), ws.sample_uniform(&mut rng)],
        };
        let positions = match scenario.human.kind {
            MotionKind::Gaussian => means.map(|m| ws.clamp(m)),
            MotionKind::Uniform => [ws.sample_uniform(&mut rng), ws.sample_uniform(&mut rng)],
        };
        Ok(World {
            scenario: scenario.clone(),
            state: WorldState {
                tasks,
                arm_targets: positions,
                arm_positions: positions,
                episode_means: means,
                tick: 0,
                rng,
            },
        })
    }

    /// One tick of human motion: retarget on schedule, then move each arm a
    /// `step_smoothing` fraction toward its target.
    pub fn step_human(&mut self) {
        let h = &self.scenario.human;
        let ws = self.scenario.workspace;
        let st = &mut self.state;
        if st.tick % h.retarget_interval == 0 {
            for arm in 0..2 {
                st.arm_targets[arm] = match h.kind {
                    MotionKind::Gaussian => {
                        let zx: f64 = st.rng.sample(StandardNormal);
                        let zy: f64 = st.rng.sample(StandardNormal);
                        st.episode_means[arm] + Point2::new(zx, zy) * h.sigma
                    }
                    MotionKind::Uniform => ws.sample_uniform(&mut st.rng),
                };
            }
        }
        for arm in 0..2 {
            let p = st.arm_positions[arm];
            let next = p + (st.arm_targets[arm] - p) * h.step_smoothing;
            st.arm_positions[arm] = ws.clamp(next);
        }
        st.tick += 1;
    }

    /// One capsule per arm from its shoulder anchor toward the wrist,
    /// trimmed to `arm_length`.
    pub fn obstacles_at(&self) -> Vec<Capsule2> {
        let h = &self.scenario.human;
        if !h.arms_present {
            return Vec::new();
        }
        self.scenario
            .anchors()
            .iter()
            .zip(&self.state.arm_positions)
            .map(|(&anchor, &pos)| {
                let v = pos - anchor;
                let len = v.norm();
                let tip = if len <= h.arm_length {
                    pos
                } else {
                    anchor + v * (h.arm_length / len)
                };
                Capsule2::new(anchor, tip, h.arm_radius)
            })
            .collect()
    }

    pub fn complete_task(&mut self, task_id: usize) -> Result<()> {
        let task = self
            .state
            .tasks
            .iter_mut()
            .find(|t| t.id == task_id)
            .ok_or(Error::UnknownTask(task_id))?;
        if task.state == TaskState::Done {
            return Err(Error::TaskAlreadyDone(task_id));
        }
        task.state = TaskState::Done;
        Ok(())
    }

    pub fn remaining(&self) -> impl Iterator<Item = &TaskItem> {
        self.state
            .tasks
            .iter()
            .filter(|t| t.state == TaskState::Remaining)
    }

    pub fn remaining_count(&self) -> usize {
        self.remaining().count()
    }

    pub fn task(&self, id: usize) -> Option<&TaskItem> {
        self.state.tasks.iter().find(|t| t.id == id)
    }
}

impl ObstacleField for World {
    fn obstacles(&self) -> Vec<Capsule2> {
        self.obstacles_at()
    }

    fn advance(&mut self) {
        self.step_human();
    }
}
