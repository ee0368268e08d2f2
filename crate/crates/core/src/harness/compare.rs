//! Comparative evaluation of task pickers over paired world seeds.

use std::collections::BTreeMap;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::baselines::{baseline_action, PickingStrategy, StrategyKind};
use super::config::ExperimentConfig;
use super::output::{grouped_bars, write_csv, write_text};
use crate::env::{EnvConfig, EpisodeMetrics, TaskEnv};
use crate::error::{Error, Result};
use crate::rl::{Checkpoint, PolicyNet};
use crate::seeding::derive_seed;
use crate::stats::{bootstrap_p_less, MeanStd};
use crate::world::MotionKind;

const STRATEGY_STREAM: u64 = 21;
const BOOTSTRAP_STREAM: u64 = 22;

pub fn scenario_name(kind: MotionKind) -> &'static str {
    match kind {
        MotionKind::Gaussian => "gaussian",
        MotionKind::Uniform => "uniform",
    }
}

/// Environment configuration with the human motion model switched to `kind`.
pub fn env_for(base: &EnvConfig, kind: MotionKind) -> EnvConfig {
    let mut env = base.clone();
    env.scenario.human.kind = kind;
    env
}

/// Plays one episode per world seed with `strategy`. The strategy's own
/// randomness is seeded from the world seed, so reruns are identical.
pub fn run_strategy_episodes(env_cfg: &EnvConfig, strategy: &PickingStrategy, seeds: &[u64]) -> Result<Vec<EpisodeMetrics>> {
    let Some(&first) = seeds.first() else {
        return Ok(Vec::new());
    };
    let mut env = TaskEnv::new(env_cfg.clone(), first)?;
    let stream = STRATEGY_STREAM + strategy.kind() as u64;
    seeds
        .iter()
        .map(|&seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, stream, 0));
            env.run_episode(seed, |e, _| baseline_action(strategy, e, &mut rng))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareRun {
    pub strategy: StrategyKind,
    pub scenario: MotionKind,
    pub seed: u64,
    pub failures: usize,
    pub replans: usize,
    pub episode_return: f64,
    pub steps: usize,
    pub completed: usize,
}

/// Mean and sample std of one strategy in one scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRecord {
    pub strategy: StrategyKind,
    pub scenario: MotionKind,
    pub runs: usize,
    pub failures_mean: f64,
    pub failures_std: f64,
    pub replans_mean: f64,
    pub replans_std: f64,
}

/// One-sided paired bootstrap test that the learned policy's mean is lower.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedTest {
    pub scenario: MotionKind,
    pub baseline: StrategyKind,
    pub metric: String,
    pub mean_difference: f64,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Robustness {
    pub strategy: StrategyKind,
    pub gaussian_failures_mean: f64,
    pub uniform_failures_mean: f64,
    pub degradation: f64,
}

/// Uniform-over-gaussian ratio of mean failure counts. Two zero means count
/// as no degradation; a zero gaussian mean with uniform failures is infinite.
pub fn degradation_ratio(gaussian: f64, uniform: f64) -> f64 {
    match (gaussian == 0.0, uniform == 0.0) {
        (true, true) => 1.0,
        (true, false) => f64::INFINITY,
        _ => uniform / gaussian,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareReport {
    pub runs: Vec<CompareRun>,
    pub records: Vec<ComparisonRecord>,
    pub tests: Vec<PairedTest>,
    pub robustness: Vec<Robustness>,
}

impl CompareReport {
    pub fn record(&self, strategy: StrategyKind, scenario: MotionKind) -> Option<&ComparisonRecord> {
        self.records
            .iter()
            .find(|r| r.strategy == strategy && r.scenario == scenario)
    }

    pub fn test(&self, baseline: StrategyKind, scenario: MotionKind, metric: &str) -> Option<&PairedTest> {
        self.tests
            .iter()
            .find(|t| t.baseline == baseline && t.scenario == scenario && t.metric == metric)
    }

    pub fn robustness_of(&self, strategy: StrategyKind) -> Option<&Robustness> {
        self.robustness.iter().find(|r| r.strategy == strategy)
    }
}

pub fn aggregate(strategy: StrategyKind, scenario: MotionKind, runs: &[CompareRun]) -> ComparisonRecord {
    let f: Vec<f64> = runs.iter().map(|r| r.failures as f64).collect();
    let r: Vec<f64> = runs.iter().map(|r| r.replans as f64).collect();
    let (f, r) = (MeanStd::of(&f), MeanStd::of(&r));
    ComparisonRecord {
        strategy,
        scenario,
        runs: runs.len(),
        failures_mean: f.mean,
        failures_std: f.std,
        replans_mean: r.mean,
        replans_std: r.std,
    }
}

fn load_policy(cfg: &ExperimentConfig) -> Result<Option<PolicyNet>> {
    if !cfg.compare.strategies.contains(&StrategyKind::Rl) {
        return Ok(None);
    }
    let path = cfg
        .compare
        .checkpoint
        .as_ref()
        .ok_or_else(|| Error::Checkpoint("the rl strategy needs compare.checkpoint".into()))?;
    Ok(Some(Checkpoint::load(path)?.net))
}

/// Loads the configured checkpoint (failing before any episode if it is
/// missing) and runs the comparison.
pub fn run_compare(cfg: &ExperimentConfig) -> Result<CompareReport> {
    cfg.validate()?;
    let policy = load_policy(cfg)?;
    run_compare_with(cfg, policy.as_ref())
}

/// Runs the comparison with an in-memory policy for the `rl` row.
pub fn run_compare_with(cfg: &ExperimentConfig, policy: Option<&PolicyNet>) -> Result<CompareReport> {
    let c = &cfg.compare;
    let strategies: Vec<PickingStrategy> = c
        .strategies
        .iter()
        .map(|k| {
            Ok(match k {
                StrategyKind::Rl => PickingStrategy::RlPolicy(Box::new(
                    policy
                        .cloned()
                        .ok_or_else(|| Error::Checkpoint("no policy for the rl strategy".into()))?,
                )),
                StrategyKind::Random => PickingStrategy::Random,
                StrategyKind::Logical => PickingStrategy::Logical(c.logical),
                StrategyKind::Sequential => PickingStrategy::Sequential,
            })
        })
        .collect::<Result<_>>()?;

    let jobs: Vec<(MotionKind, &PickingStrategy)> = c
        .scenarios
        .iter()
        .flat_map(|&sc| strategies.iter().map(move |s| (sc, s)))
        .collect();
    let per_job: Vec<Vec<CompareRun>> = jobs
        .par_iter()
        .map(|&(sc, strategy)| {
            let env = env_for(&cfg.env, sc);
            let metrics = run_strategy_episodes(&env, strategy, &c.seeds)?;
            Ok(c.seeds
                .iter()
                .zip(metrics)
                .map(|(&seed, m)| CompareRun {
                    strategy: strategy.kind(),
                    scenario: sc,
                    seed,
                    failures: m.failures,
                    replans: m.replans,
                    episode_return: m.episode_return,
                    steps: m.steps,
                    completed: m.completed,
                })
                .collect())
        })
        .collect::<Result<_>>()?;

    let records: Vec<ComparisonRecord> = jobs
        .iter()
        .zip(&per_job)
        .map(|(&(sc, s), runs)| aggregate(s.kind(), sc, runs))
        .collect();

    let by_key: BTreeMap<(u8, u8), &Vec<CompareRun>> = jobs
        .iter()
        .zip(&per_job)
        .map(|(&(sc, s), runs)| ((sc as u8, s.kind() as u8), runs))
        .collect();
    let mut tests = Vec::new();
    for &sc in &c.scenarios {
        let Some(rl) = by_key.get(&(sc as u8, StrategyKind::Rl as u8)) else {
            continue;
        };
        for &base in c.strategies.iter().filter(|&&k| k != StrategyKind::Rl) {
            let other = by_key[&(sc as u8, base as u8)];
            for (metric, get) in [
                ("failures", (|r: &CompareRun| r.failures as f64) as fn(&CompareRun) -> f64),
                ("replans", |r: &CompareRun| r.replans as f64),
            ] {
                let a: Vec<f64> = rl.iter().map(get).collect();
                let b: Vec<f64> = other.iter().map(get).collect();
                let diff = a.iter().zip(&b).map(|(x, y)| x - y).sum::<f64>() / a.len().max(1) as f64;
                let seed = derive_seed(sc as u64, BOOTSTRAP_STREAM, base as u64);
                tests.push(PairedTest {
                    scenario: sc,
                    baseline: base,
                    metric: metric.to_string(),
                    mean_difference: diff,
                    p_value: bootstrap_p_less(&a, &b, c.bootstrap_resamples, seed),
                });
            }
        }
    }

    let mut robustness = Vec::new();
    for &k in &c.strategies {
        let g = records.iter().find(|r| r.strategy == k && r.scenario == MotionKind::Gaussian);
        let u = records.iter().find(|r| r.strategy == k && r.scenario == MotionKind::Uniform);
        if let (Some(g), Some(u)) = (g, u) {
            robustness.push(Robustness {
                strategy: k,
                gaussian_failures_mean: g.failures_mean,
                uniform_failures_mean: u.failures_mean,
                degradation: degradation_ratio(g.failures_mean, u.failures_mean),
            });
        }
    }

    Ok(CompareReport {
        runs: per_job.into_iter().flatten().collect(),
        records,
        tests,
        robustness,
    })
}

pub fn write_compare(report: &CompareReport, cfg: &ExperimentConfig, out_dir: &Path) -> Result<()> {
    write_csv(&out_dir.join("compare_runs.csv"), &report.runs)?;
    write_csv(&out_dir.join("compare.csv"), &report.records)?;
    write_csv(&out_dir.join("compare_tests.csv"), &report.tests)?;
    write_csv(&out_dir.join("compare_robustness.csv"), &report.robustness)?;
    let groups: Vec<String> = cfg.compare.strategies.iter().map(|s| s.name().to_string()).collect();
    let labels = ["failures".to_string(), "replans".to_string()];
    for &sc in &cfg.compare.scenarios {
        let values: Vec<Vec<(f64, f64)>> = cfg
            .compare
            .strategies
            .iter()
            .map(|&s| {
                let r = report.record(s, sc).expect("every strategy has a record per scenario");
                vec![(r.failures_mean, r.failures_std), (r.replans_mean, r.replans_std)]
            })
            .collect();
        let name = scenario_name(sc);
        let svg = grouped_bars(
            &format!("Task failures and replanning requests ({name} human motion)"),
            "count per episode",
            &groups,
            &labels,
            &values,
        );
        write_text(&out_dir.join(format!("compare_{name}.svg")), &svg)?;
    }
    Ok(())
}

/// Per-episode rows and the aggregate of an `eval` run.
pub fn write_eval(report: &CompareReport, out_dir: &Path) -> Result<()> {
    write_csv(&out_dir.join("eval_runs.csv"), &report.runs)?;
    write_csv(&out_dir.join("eval.csv"), &report.records)
}
