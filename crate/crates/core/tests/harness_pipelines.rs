//! Experiment pipelines checked against re-aggregation and scripted oracles.

use std::collections::BTreeMap;

use hrc_core::env::{Action, EnvConfig, TaskEnv};
use hrc_core::harness::output::read_csv;
use hrc_core::harness::{
    baseline_action, run_compare, run_sweep, write_compare, write_sweep, CompareRun, ComparisonRecord,
    ExperimentConfig, LogicalMode, PickingStrategy, StrategyKind, SweepRow, SweepRun,
};
use hrc_core::stats::{mean, median, MeanStd};
use hrc_core::world::MotionKind;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Accessibility as seen by the environment itself: stepping toward the task
/// on a copy of the environment does not report a goal collision. The probe
/// copy caps execution at one tick, since only the decision-time check matters.
fn env_says_free(probe: &TaskEnv, pos: hrc_core::robot::Point2) -> bool {
    let mut probe = probe.clone();
    let a = Action::encode(pos, &probe.config().scenario.workspace);
    !probe.step(a).unwrap().info.goal_collision
}

#[test]
fn logical_picks_the_only_free_task() {
    let cfg = EnvConfig::default();
    let ws = cfg.scenario.workspace;
    let mut probe_cfg = cfg.clone();
    probe_cfg.planner.tick_cap = 1;
    probe_cfg.planner.max_iters = 1;
    let mut worlds = 0;
    for seed in 0..2000u64 {
        if worlds == 100 {
            break;
        }
        let mut env = TaskEnv::new(cfg.clone(), seed).unwrap();
        let probe = TaskEnv::new(probe_cfg.clone(), seed).unwrap();
        assert_eq!(probe.world().state.tasks, env.world().state.tasks);
        let tasks: Vec<_> = env.world().remaining().map(|t| (t.id, t.position)).collect();
        let free: Vec<usize> = tasks.iter().filter(|t| env_says_free(&probe, t.1)).map(|t| t.0).collect();
        let blocked = tasks.len() - free.len();
        if free.is_empty() || blocked == 0 {
            continue;
        }
        // keep exactly one free task plus every blocked one
        for &id in &free[1..] {
            env.world_mut().complete_task(id).unwrap();
        }
        let only = env.world().task(free[0]).unwrap().position;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for mode in [LogicalMode::Uniform, LogicalMode::Nearest] {
            for _ in 0..5 {
                let a = baseline_action(&PickingStrategy::Logical(mode), &env, &mut rng).unwrap();
                assert!(a.decode(&ws).distance(only) < 1e-9, "seed {seed}");
            }
        }
        worlds += 1;
    }
    assert_eq!(worlds, 100);
}

fn small_compare() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    cfg.compare.strategies = vec![StrategyKind::Random, StrategyKind::Logical, StrategyKind::Sequential];
    cfg.compare.seeds = (500..506).collect();
    cfg
}

#[test]
fn without_human_arms_nothing_fails_or_replans() {
    let mut cfg = small_compare();
    cfg.env.scenario.human.arms_present = false;
    let rep = run_compare(&cfg).unwrap();
    assert_eq!(rep.records.len(), 6);
    for r in &rep.records {
        assert_eq!((r.failures_mean, r.replans_mean), (0.0, 0.0), "{r:?}");
    }
}

#[test]
fn compare_csv_re_aggregates_from_raw_runs() {
    let cfg = small_compare();
    let dir = tempfile::tempdir().unwrap();
    let rep = run_compare(&cfg).unwrap();
    write_compare(&rep, &cfg, dir.path()).unwrap();
    let runs: Vec<CompareRun> = read_csv(&dir.path().join("compare_runs.csv")).unwrap();
    let recs: Vec<ComparisonRecord> = read_csv(&dir.path().join("compare.csv")).unwrap();
    assert_eq!(runs.len(), 3 * 2 * cfg.compare.seeds.len());
    let mut groups: BTreeMap<(String, String), Vec<&CompareRun>> = BTreeMap::new();
    for r in &runs {
        groups
            .entry((format!("{:?}", r.strategy), format!("{:?}", r.scenario)))
            .or_default()
            .push(r);
    }
    for rec in &recs {
        let g = &groups[&(format!("{:?}", rec.strategy), format!("{:?}", rec.scenario))];
        let seeds: Vec<u64> = g.iter().map(|r| r.seed).collect();
        assert_eq!(seeds, cfg.compare.seeds, "paired seeds");
        let f: Vec<f64> = g.iter().map(|r| r.failures as f64).collect();
        let p: Vec<f64> = g.iter().map(|r| r.replans as f64).collect();
        let (f, p) = (MeanStd::of(&f), MeanStd::of(&p));
        assert_eq!(rec.runs, g.len());
        assert!((rec.failures_mean - f.mean).abs() < 1e-12);
        assert!((rec.failures_std - f.std).abs() < 1e-12);
        assert!((rec.replans_mean - p.mean).abs() < 1e-12);
        assert!((rec.replans_std - p.std).abs() < 1e-12);
    }
    for sc in ["gaussian", "uniform"] {
        assert!(dir.path().join(format!("compare_{sc}.svg")).exists());
    }
}

#[test]
fn sweep_csv_re_aggregates_and_reference_replans_less() {
    let mut cfg = ExperimentConfig::default();
    cfg.sweep.replan_every = vec![20];
    let dir = tempfile::tempdir().unwrap();
    let rep = run_sweep(&cfg).unwrap();
    write_sweep(&rep, dir.path()).unwrap();
    let runs: Vec<SweepRun> = read_csv(&dir.path().join("sweep_runs.csv")).unwrap();
    let rows: Vec<SweepRow> = read_csv(&dir.path().join("sweep.csv")).unwrap();
    assert_eq!(rows.len(), 2);
    for row in &rows {
        let sel: Vec<&SweepRun> = runs.iter().filter(|r| r.replan_every == row.replan_every).collect();
        let lens: Vec<f64> = sel.iter().filter(|r| r.success).map(|r| r.path_length).collect();
        let reps: Vec<f64> = sel.iter().map(|r| r.replan_count as f64).collect();
        let req: usize = sel.iter().map(|r| r.plan_requests).sum();
        let fail: usize = sel.iter().map(|r| r.plan_failures).sum();
        assert_eq!(row.runs, 50);
        assert!((row.mean_path_length - mean(&lens)).abs() < 1e-12);
        assert!((row.failure_ratio - fail as f64 / req as f64).abs() < 1e-12);
        assert_eq!(row.median_replans, median(&reps));
    }
    let slowest = rep.fixed(20).unwrap();
    let reference = rep.reference().unwrap();
    assert!(reference.median_replans <= slowest.median_replans);
}

#[test]
fn compare_scenarios_differ_only_in_human_motion() {
    let cfg = small_compare();
    let rep = run_compare(&cfg).unwrap();
    let g = rep.record(StrategyKind::Sequential, MotionKind::Gaussian).unwrap();
    let u = rep.record(StrategyKind::Sequential, MotionKind::Uniform).unwrap();
    assert_eq!(g.runs, u.runs);
    assert_eq!(rep.runs.iter().filter(|r| r.scenario == MotionKind::Uniform).count(), 18);
}
