//! Hybrid task and motion planning for a robot sharing a desk with a human.
//!
//! The motion layer ([`planner`]) follows joint-space RRT* paths and only
//! replans when the next stretch of the path or the goal is invalidated by
//! the moving human arms ([`world`]). The task layer ([`env`], [`rl`]) learns
//! with PPO which end-effector goals lead to tasks that are both reachable now
//! and rarely occupied, and [`harness`] runs the experiments that compare it
//! against hand-written picking strategies.

pub mod env;
pub mod error;
pub mod harness;
pub mod planner;
pub mod rl;
pub mod robot;
pub mod seeding;
pub mod stats;
pub mod world;

pub use error::{Error, Result};
