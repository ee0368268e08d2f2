use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use hrc_core::error::{Error, Result};
use hrc_core::harness::{
    self, run_compare, run_compare_with, run_demo, run_sweep, run_train, write_compare, write_eval, write_sweep,
    ExperimentConfig, PickingStrategy, StrategyKind,
};
use hrc_core::rl::Checkpoint;
use hrc_core::world::MotionKind;

#[derive(Parser)]
#[command(name = "hrc", version, about = "Task and motion planning experiments for a shared human-robot workspace")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML configuration; every field is optional.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed or comma-separated seed list, e.g. `3` or `0,1,2` or `0..5`.
    #[arg(long, global = true)]
    seed: Option<String>,
    /// Output directory (overrides `out_dir`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_parser = parse_scenario)]
    scenario: Option<MotionKind>,
    #[arg(long, global = true, value_enum)]
    strategy: Option<StrategyKind>,
    #[arg(long, global = true)]
    checkpoint: Option<PathBuf>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Replanning-frequency sweep against the re-RRT* reference.
    Sweep,
    /// Train the task-picking policy.
    Train,
    /// Compare the policy against the hand-written pickers.
    Compare,
    /// Evaluate one strategy on one scenario.
    Eval,
    /// Write a JSONL trace of a single episode.
    Demo,
}

fn parse_scenario(s: &str) -> std::result::Result<MotionKind, String> {
    match s {
        "gaussian" => Ok(MotionKind::Gaussian),
        "uniform" => Ok(MotionKind::Uniform),
        _ => Err(format!("unknown scenario `{s}` (expected gaussian or uniform)")),
    }
}

fn parse_seeds(s: &str) -> Result<Vec<u64>> {
    let bad = || Error::InvalidConfig(format!("cannot parse seed list `{s}`"));
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        if let Some((a, b)) = part.split_once("..") {
            let a: u64 = a.parse().map_err(|_| bad())?;
            let b: u64 = b.parse().map_err(|_| bad())?;
            out.extend(a..b);
        } else {
            out.push(part.parse().map_err(|_| bad())?);
        }
    }
    if out.is_empty() {
        return Err(bad());
    }
    Ok(out)
}

fn strategy_for(kind: StrategyKind, cfg: &ExperimentConfig, checkpoint: Option<&Path>) -> Result<PickingStrategy> {
    Ok(match kind {
        StrategyKind::Rl => {
            let path = checkpoint
                .or(cfg.compare.checkpoint.as_deref())
                .ok_or_else(|| Error::Checkpoint("--checkpoint is required for the rl strategy".into()))?;
            PickingStrategy::RlPolicy(Box::new(Checkpoint::load(path)?.net))
        }
        StrategyKind::Random => PickingStrategy::Random,
        StrategyKind::Logical => PickingStrategy::Logical(cfg.compare.logical),
        StrategyKind::Sequential => PickingStrategy::Sequential,
    })
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(out) = &cli.out {
        cfg.out_dir = out.clone();
    }
    let seeds = cli.seed.as_deref().map(parse_seeds).transpose()?;
    if let Some(s) = &seeds {
        cfg.sweep.seeds = s.clone();
        cfg.train.seeds = s.clone();
        cfg.compare.seeds = s.clone();
    }
    if let Some(ck) = &cli.checkpoint {
        cfg.compare.checkpoint = Some(ck.clone());
    }
    if let Some(sc) = cli.scenario {
        cfg.env.scenario.human.kind = sc;
        cfg.compare.scenarios = vec![sc];
    }
    if let Some(k) = cli.strategy {
        cfg.compare.strategies = vec![k];
    }
    cfg.validate()?;
    let out = cfg.out_dir.clone();
    std::fs::create_dir_all(&out)?;

    match cli.command {
        Command::Sweep => {
            let rep = run_sweep(&cfg)?;
            write_sweep(&rep, &out)?;
            for r in &rep.rows {
                println!(
                    "{:<12} every={:<4} runs={:<3} success={:<3} path={:.3} failure_ratio={:.3} median_replans={}",
                    r.mode,
                    r.replan_every.map_or("-".into(), |k| k.to_string()),
                    r.runs,
                    r.successes,
                    r.mean_path_length,
                    r.failure_ratio,
                    r.median_replans
                );
            }
            for t in &rep.trends {
                println!("spearman({}, frequency) = {:.3}", t.metric, t.spearman_rho);
            }
        }
        Command::Train => {
            for run in run_train(&cfg, &out)? {
                let last = run.curve.last();
                println!(
                    "seed {}: {} episodes, {} updates, final MA failures {:.2}, replans {:.2}",
                    run.seed,
                    run.outcome.episodes_done,
                    run.outcome.updates_done,
                    last.map_or(f64::NAN, |r| r.failures_ma),
                    last.map_or(f64::NAN, |r| r.replans_ma)
                );
            }
            println!("selected policy: {}", harness::selected_path(&out).display());
        }
        Command::Compare => {
            let rep = run_compare(&cfg)?;
            write_compare(&rep, &cfg, &out)?;
            for r in &rep.records {
                println!(
                    "{:<10} {:<8} failures {:.2} ± {:.2}  replans {:.2} ± {:.2}",
                    r.strategy.name(),
                    harness::compare::scenario_name(r.scenario),
                    r.failures_mean,
                    r.failures_std,
                    r.replans_mean,
                    r.replans_std
                );
            }
        }
        Command::Eval => {
            let kind = cli.strategy.unwrap_or(StrategyKind::Rl);
            let strategy = strategy_for(kind, &cfg, cli.checkpoint.as_deref())?;
            cfg.compare.strategies = vec![kind];
            cfg.compare.scenarios = vec![cfg.env.scenario.human.kind];
            let policy = match &strategy {
                PickingStrategy::RlPolicy(net) => Some(net.as_ref()),
                _ => None,
            };
            let rep = run_compare_with(&cfg, policy)?;
            write_eval(&rep, &out)?;
            let r = &rep.records[0];
            println!(
                "{} on {}: {} episodes, failures {:.2} ± {:.2}, replans {:.2} ± {:.2}",
                kind.name(),
                harness::compare::scenario_name(r.scenario),
                r.runs,
                r.failures_mean,
                r.failures_std,
                r.replans_mean,
                r.replans_std
            );
        }
        Command::Demo => {
            let kind = cli.strategy.unwrap_or(StrategyKind::Logical);
            let strategy = strategy_for(kind, &cfg, cli.checkpoint.as_deref())?;
            let seed = seeds.as_ref().map_or(0, |s| s[0]);
            let (trace, m) = run_demo(&cfg.env, &strategy, seed)?;
            let path = out.join(format!("demo_seed{seed}.jsonl"));
            std::fs::write(&path, trace)?;
            println!(
                "{} seed {seed}: {} steps, {} failures, {} replans, trace in {}",
                kind.name(),
                m.steps,
                m.failures,
                m.replans,
                path.display()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_lists() {
        assert_eq!(parse_seeds("3").unwrap(), vec![3]);
        assert_eq!(parse_seeds("0,2, 5").unwrap(), vec![0, 2, 5]);
        assert_eq!(parse_seeds("1..4,9").unwrap(), vec![1, 2, 3, 9]);
        assert!(parse_seeds("x").is_err());
        assert!(parse_seeds("").is_err());
    }
}
