//! Single-episode JSONL trace: every decision and every execution tick.

use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::baselines::{baseline_action, PickingStrategy};
use crate::env::{EnvConfig, EpisodeMetrics, StepInfo, TaskEnv};
use crate::error::Result;
use crate::planner::TickRecord;
use crate::robot::Point2;
use crate::seeding::derive_seed;

const DEMO_STREAM: u64 = 31;

#[derive(Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum TraceLine<'a> {
    Episode {
        seed: u64,
        strategy: &'static str,
        tasks: Vec<(usize, Point2)>,
    },
    Step {
        step: usize,
        action: [f64; 2],
        reward: f64,
        done: bool,
        remaining: usize,
        info: &'a StepInfo,
    },
    Tick {
        step: usize,
        #[serde(flatten)]
        record: &'a TickRecord,
    },
    Summary {
        metrics: &'a EpisodeMetrics,
    },
}

/// Plays one episode and returns the trace (one JSON object per line) with
/// the episode metrics.
pub fn run_demo(env_cfg: &EnvConfig, strategy: &PickingStrategy, seed: u64) -> Result<(String, EpisodeMetrics)> {
    let mut env = TaskEnv::new(env_cfg.clone(), seed)?;
    env.reset(seed)?;
    env.set_tick_recording(true);
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, DEMO_STREAM, 0));
    let mut out = String::new();
    let mut emit = |line: &TraceLine| -> Result<()> {
        writeln!(out, "{}", serde_json::to_string(line)?).expect("writing to a String");
        Ok(())
    };
    emit(&TraceLine::Episode {
        seed,
        strategy: strategy.kind().name(),
        tasks: env.world().remaining().map(|t| (t.id, t.position)).collect(),
    })?;
    let mut step = 0;
    while !env.is_done() {
        let action = baseline_action(strategy, &env, &mut rng)?;
        let outcome = env.step(action)?;
        for record in env.take_tick_log() {
            emit(&TraceLine::Tick { step, record: &record })?;
        }
        emit(&TraceLine::Step {
            step,
            action: [action.u[0], action.u[1]],
            reward: outcome.reward,
            done: outcome.done,
            remaining: env.world().remaining_count(),
            info: &outcome.info,
        })?;
        step += 1;
    }
    let metrics = env.metrics();
    emit(&TraceLine::Summary { metrics: &metrics })?;
    Ok((out, metrics))
}
