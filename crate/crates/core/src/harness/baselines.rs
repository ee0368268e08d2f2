//! Hand-written task pickers the learned policy is compared against.

use rand::seq::IndexedRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::env::{Action, TaskEnv};
use crate::error::{Error, Result};
use crate::planner::collision_check;
use crate::rl::PolicyNet;
use crate::world::TaskItem;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum StrategyKind {
    Rl,
    Random,
    Logical,
    Sequential,
}

impl StrategyKind {
    pub fn name(self) -> &'static str {
        match self {
            StrategyKind::Rl => "rl",
            StrategyKind::Random => "random",
            StrategyKind::Logical => "logical",
            StrategyKind::Sequential => "sequential",
        }
    }
}

/// How logical picking chooses among tasks whose pick pose is free.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LogicalMode {
    #[default]
    Uniform,
    /// The free task closest to the robot's end effector.
    Nearest,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PickingStrategy {
    RlPolicy(Box<PolicyNet>),
    Random,
    Logical(LogicalMode),
    Sequential,
}

impl PickingStrategy {
    pub fn kind(&self) -> StrategyKind {
        match self {
            PickingStrategy::RlPolicy(_) => StrategyKind::Rl,
            PickingStrategy::Random => StrategyKind::Random,
            PickingStrategy::Logical(_) => StrategyKind::Logical,
            PickingStrategy::Sequential => StrategyKind::Sequential,
        }
    }
}

/// True when the arm can reach `task` with a configuration that clears the
/// current (safety-inflated) obstacles.
pub fn pick_pose_free(env: &TaskEnv, task: &TaskItem) -> bool {
    let cfg = env.config();
    let Ok(q) = cfg.arm.inverse_kinematics(task.position, &cfg.home) else {
        return false;
    };
    let obstacles: Vec<_> = env
        .world()
        .obstacles_at()
        .iter()
        .map(|o| o.inflated(cfg.planner.safety_margin))
        .collect();
    !collision_check(&cfg.arm, &q, &obstacles)
}

/// Action chosen by `strategy` in the current state of `env`.
pub fn baseline_action<R: Rng + ?Sized>(strategy: &PickingStrategy, env: &TaskEnv, rng: &mut R) -> Result<Action> {
    let ws = &env.config().scenario.workspace;
    let remaining: Vec<&TaskItem> = env.world().remaining().collect();
    if remaining.is_empty() {
        return Err(Error::NoTasksRemaining);
    }
    let target = match strategy {
        PickingStrategy::RlPolicy(net) => return net.deterministic_action(&env.observe().flatten()),
        PickingStrategy::Random => *remaining.choose(rng).unwrap(),
        PickingStrategy::Sequential => *remaining.iter().min_by_key(|t| t.id).unwrap(),
        PickingStrategy::Logical(mode) => {
            let free: Vec<&TaskItem> = remaining.iter().copied().filter(|t| pick_pose_free(env, t)).collect();
            match (free.is_empty(), mode) {
                (true, _) => *remaining.choose(rng).unwrap(),
                (false, LogicalMode::Uniform) => *free.choose(rng).unwrap(),
                (false, LogicalMode::Nearest) => {
                    let ee = env.config().arm.end_effector(&env.robot().angles);
                    *free
                        .iter()
                        .min_by(|a, b| {
                            a.position
                                .distance(ee)
                                .total_cmp(&b.position.distance(ee))
                                .then(a.id.cmp(&b.id))
                        })
                        .unwrap()
                }
            }
        }
    };
    Ok(Action::encode(target.position, ws))
}
