//! Replanning-frequency sweep: fixed-rate baselines at several rates and the
//! re-RRT* loop as reference, all on the same seeded moving-arm worlds.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::output::{line_chart, write_csv, write_text, Series};
use crate::env::EnvConfig;
use crate::error::Result;
use crate::planner::{execute_fixed_frequency, execute_re_rrt_star, ExecutionResult, FailureReason};
use crate::robot::Point2;
use crate::seeding::derive_seed;
use crate::stats::{mean, median, spearman};
use crate::world::World;

const PLANNER_STREAM: u64 = 11;
pub const REFERENCE_MODE: &str = "re_rrt_star";
pub const FIXED_MODE: &str = "fixed";

/// One execution of one mode on one seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRun {
    pub mode: String,
    pub replan_every: Option<usize>,
    pub seed: u64,
    pub success: bool,
    pub path_length: f64,
    pub plan_requests: usize,
    pub plan_failures: usize,
    pub replan_count: usize,
    pub elapsed_ticks: usize,
    pub failure_reason: FailureReason,
}

/// Aggregate of one sweep point, re-derivable from the matching runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub mode: String,
    pub replan_every: Option<usize>,
    pub frequency_hz: Option<f64>,
    pub runs: usize,
    pub successes: usize,
    /// Mean end-effector path length over successful runs.
    pub mean_path_length: f64,
    /// Failed plan requests over all plan requests, pooled across runs.
    pub failure_ratio: f64,
    pub mean_replans: f64,
    pub median_replans: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTrend {
    pub metric: String,
    /// Spearman correlation with replanning frequency over the fixed-rate rows.
    pub spearman_rho: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    /// Fixed-rate rows in sweep order, then the reference row.
    pub rows: Vec<SweepRow>,
    pub runs: Vec<SweepRun>,
    pub trends: Vec<SweepTrend>,
}

impl SweepReport {
    pub fn reference(&self) -> Option<&SweepRow> {
        self.rows.iter().find(|r| r.mode == REFERENCE_MODE)
    }

    pub fn fixed(&self, every: usize) -> Option<&SweepRow> {
        self.rows.iter().find(|r| r.replan_every == Some(every))
    }

    pub fn runs_of(&self, replan_every: Option<usize>) -> impl Iterator<Item = &SweepRun> {
        self.runs.iter().filter(move |r| r.replan_every == replan_every)
    }
}

/// Runs one mode (`None` = re-RRT*) on the world of `seed`.
pub fn sweep_execution(env: &EnvConfig, goal: Point2, seed: u64, replan_every: Option<usize>) -> Result<ExecutionResult> {
    let mut world = World::reset_episode(&env.scenario, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, PLANNER_STREAM, 0));
    Ok(match replan_every {
        None => execute_re_rrt_star(&env.arm, &env.home, goal, &mut world, &env.planner, &mut rng, None),
        Some(k) => execute_fixed_frequency(&env.arm, &env.home, goal, &mut world, Some(k), &env.planner, &mut rng, None),
    })
}

pub fn aggregate(mode: &str, replan_every: Option<usize>, tick_duration: f64, runs: &[SweepRun]) -> SweepRow {
    let lengths: Vec<f64> = runs.iter().filter(|r| r.success).map(|r| r.path_length).collect();
    let replans: Vec<f64> = runs.iter().map(|r| r.replan_count as f64).collect();
    let requests: usize = runs.iter().map(|r| r.plan_requests).sum();
    let failures: usize = runs.iter().map(|r| r.plan_failures).sum();
    SweepRow {
        mode: mode.to_string(),
        replan_every,
        frequency_hz: replan_every.map(|k| 1.0 / (k as f64 * tick_duration)),
        runs: runs.len(),
        successes: lengths.len(),
        mean_path_length: if lengths.is_empty() { f64::NAN } else { mean(&lengths) },
        failure_ratio: if requests == 0 { 0.0 } else { failures as f64 / requests as f64 },
        mean_replans: mean(&replans),
        median_replans: median(&replans),
    }
}

pub fn run_sweep(cfg: &ExperimentConfig) -> Result<SweepReport> {
    cfg.validate()?;
    let env = &cfg.env;
    let goal = cfg.sweep.goal;
    let mut modes: Vec<Option<usize>> = cfg.sweep.replan_every.iter().map(|&k| Some(k)).collect();
    modes.push(None);

    let jobs: Vec<(Option<usize>, u64)> = modes
        .iter()
        .flat_map(|&m| cfg.sweep.seeds.iter().map(move |&s| (m, s)))
        .collect();
    let runs: Vec<SweepRun> = jobs
        .par_iter()
        .map(|&(m, seed)| {
            let r = sweep_execution(env, goal, seed, m)?;
            Ok(SweepRun {
                mode: if m.is_some() { FIXED_MODE } else { REFERENCE_MODE }.to_string(),
                replan_every: m,
                seed,
                success: r.success,
                path_length: r.path_length(),
                plan_requests: r.plan_requests,
                plan_failures: r.plan_failures,
                replan_count: r.replan_count,
                elapsed_ticks: r.elapsed_ticks,
                failure_reason: r.failure_reason,
            })
        })
        .collect::<Result<_>>()?;

    let rows: Vec<SweepRow> = modes
        .iter()
        .map(|&m| {
            let sel: Vec<SweepRun> = runs.iter().filter(|r| r.replan_every == m).cloned().collect();
            let mode = if m.is_some() { FIXED_MODE } else { REFERENCE_MODE };
            aggregate(mode, m, env.planner.tick_duration, &sel)
        })
        .collect();

    let fixed: Vec<&SweepRow> = rows.iter().filter(|r| r.frequency_hz.is_some()).collect();
    let freq: Vec<f64> = fixed.iter().map(|r| r.frequency_hz.unwrap()).collect();
    let rho = |f: &dyn Fn(&SweepRow) -> f64| {
        let ys: Vec<f64> = fixed.iter().map(|r| f(r)).collect();
        if freq.len() < 2 {
            f64::NAN
        } else {
            spearman(&freq, &ys)
        }
    };
    let trends = vec![
        SweepTrend {
            metric: "mean_path_length".into(),
            spearman_rho: rho(&|r| r.mean_path_length),
        },
        SweepTrend {
            metric: "failure_ratio".into(),
            spearman_rho: rho(&|r| r.failure_ratio),
        },
    ];
    Ok(SweepReport { rows, runs, trends })
}

pub fn write_sweep(report: &SweepReport, out_dir: &Path) -> Result<()> {
    write_csv(&out_dir.join("sweep_runs.csv"), &report.runs)?;
    write_csv(&out_dir.join("sweep.csv"), &report.rows)?;
    write_csv(&out_dir.join("sweep_trend.csv"), &report.trends)?;
    let fixed: Vec<&SweepRow> = report.rows.iter().filter(|r| r.frequency_hz.is_some()).collect();
    let series = |f: &dyn Fn(&SweepRow) -> f64, label: &str| {
        let mut pts: Vec<(f64, f64)> = fixed.iter().map(|r| (r.frequency_hz.unwrap(), f(r))).collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        Series {
            label: label.to_string(),
            points: pts,
        }
    };
    let reference = |f: &dyn Fn(&SweepRow) -> f64| {
        let r = report.reference()?;
        let xs: Vec<f64> = fixed.iter().map(|r| r.frequency_hz.unwrap()).collect();
        let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        lo.is_finite().then(|| Series {
            label: "re-RRT*".into(),
            points: vec![(lo, f(r)), (hi, f(r))],
        })
    };
    for (name, title, ylabel, f) in [
        (
            "sweep_path_length.svg",
            "End-effector path length vs replanning frequency",
            "mean path length (m)",
            (&|r: &SweepRow| r.mean_path_length) as &dyn Fn(&SweepRow) -> f64,
        ),
        (
            "sweep_failure_ratio.svg",
            "Planning failure ratio vs replanning frequency",
            "failure ratio",
            &|r: &SweepRow| r.failure_ratio,
        ),
    ] {
        let mut s = vec![series(f, "fixed rate")];
        s.extend(reference(f));
        write_text(&out_dir.join(name), &line_chart(title, "replanning frequency (Hz)", ylabel, &s, true))?;
    }
    Ok(())
}
