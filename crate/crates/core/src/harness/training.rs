//! Training runs with learning-curve output and resumable checkpoints.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::output::{line_chart, read_csv, write_csv, write_text, Series};
use crate::error::{Error, Result};
use crate::rl::{select_by_validation, train, Checkpoint, EpisodeRecord, PolicyNet, TrainOptions, TrainOutcome, UpdateRecord};

/// One row of the learning curve. The loss columns describe the most recent
/// update finished before the episode ended and are empty before the first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub episode: usize,
    pub failures: usize,
    pub replans: usize,
    pub episode_return: f64,
    pub steps: usize,
    pub completed: usize,
    pub updates_done: usize,
    pub failures_ma: f64,
    pub replans_ma: f64,
    pub policy_loss: Option<f64>,
    pub value_loss: Option<f64>,
    pub entropy: Option<f64>,
    pub approx_kl: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UpdateRow {
    pub update: usize,
    pub episodes_done: usize,
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub approx_kl: f64,
    pub clip_fraction: f64,
    pub grad_norm: f64,
}

impl From<&UpdateRecord> for UpdateRow {
    fn from(u: &UpdateRecord) -> Self {
        Self {
            update: u.update,
            episodes_done: u.episodes_done,
            policy_loss: u.stats.policy_loss,
            value_loss: u.stats.value_loss,
            entropy: u.stats.entropy,
            approx_kl: u.stats.approx_kl,
            clip_fraction: u.stats.clip_fraction,
            grad_norm: u.stats.grad_norm,
        }
    }
}

/// Trailing moving average; the first `window - 1` entries average what is
/// available so far.
pub fn moving_average(xs: &[f64], window: usize) -> Vec<f64> {
    let w = window.max(1);
    let mut out = Vec::with_capacity(xs.len());
    let mut sum = 0.0;
    for i in 0..xs.len() {
        sum += xs[i];
        if i >= w {
            sum -= xs[i - w];
        }
        out.push(sum / (i + 1).min(w) as f64);
    }
    out
}

pub fn checkpoint_path(out_dir: &Path, seed: u64) -> PathBuf {
    out_dir.join(format!("policy_seed{seed}.ckpt"))
}

pub fn curves_path(out_dir: &Path, seed: u64) -> PathBuf {
    out_dir.join(format!("train_curves_seed{seed}.csv"))
}

pub fn updates_path(out_dir: &Path, seed: u64) -> PathBuf {
    out_dir.join(format!("train_updates_seed{seed}.csv"))
}

/// Builds curve rows from raw episode and update records.
pub fn curve_rows(episodes: &[EpisodeRecord], updates: &[UpdateRow], window: usize) -> Vec<CurveRow> {
    let f: Vec<f64> = episodes.iter().map(|e| e.failures as f64).collect();
    let r: Vec<f64> = episodes.iter().map(|e| e.replans as f64).collect();
    let (fm, rm) = (moving_average(&f, window), moving_average(&r, window));
    episodes
        .iter()
        .enumerate()
        .map(|(i, e)| {
            let last = updates.iter().rfind(|u| u.update <= e.updates_done && e.updates_done > 0);
            CurveRow {
                episode: e.episode,
                failures: e.failures,
                replans: e.replans,
                episode_return: e.episode_return,
                steps: e.steps,
                completed: e.completed,
                updates_done: e.updates_done,
                failures_ma: fm[i],
                replans_ma: rm[i],
                policy_loss: last.map(|u| u.policy_loss),
                value_loss: last.map(|u| u.value_loss),
                entropy: last.map(|u| u.entropy),
                approx_kl: last.map(|u| u.approx_kl),
            }
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct TrainRun {
    pub seed: u64,
    pub outcome: TrainOutcome,
    /// Full curve including episodes from before a resume.
    pub curve: Vec<CurveRow>,
    pub updates: Vec<UpdateRow>,
}

pub fn selected_path(out_dir: &Path) -> PathBuf {
    out_dir.join("policy_selected.ckpt")
}

/// Validation result of one trained policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionRow {
    pub seed: u64,
    pub failures_mean: f64,
    pub replans_mean: f64,
    pub selected: bool,
}

/// Trains one policy per configured seed, writing curves, update statistics,
/// a plot and the checkpoint of each run into `out_dir`. The run with the
/// best validation score is also saved as `policy_selected.ckpt`.
pub fn run_train(cfg: &ExperimentConfig, out_dir: &Path) -> Result<Vec<TrainRun>> {
    cfg.validate()?;
    let runs: Vec<TrainRun> = cfg
        .train
        .seeds
        .par_iter()
        .map(|&seed| train_one(cfg, seed, out_dir))
        .collect::<Result<_>>()?;
    let (best, rows) = select_trained(&runs, cfg)?;
    write_csv(&out_dir.join("train_selection.csv"), &rows)?;
    runs[best].outcome.checkpoint(runs[best].seed).save(&selected_path(out_dir))?;
    Ok(runs)
}

/// Picks the run whose policy scores best on the validation seeds.
pub fn select_trained(runs: &[TrainRun], cfg: &ExperimentConfig) -> Result<(usize, Vec<SelectionRow>)> {
    let nets: Vec<&PolicyNet> = runs.iter().map(|r| &r.outcome.net).collect();
    let (best, sums) = select_by_validation(&nets, &cfg.env, &cfg.train.validation_seeds)?;
    let rows = runs
        .iter()
        .zip(&sums)
        .enumerate()
        .map(|(i, (r, s))| SelectionRow {
            seed: r.seed,
            failures_mean: s.failures.mean,
            replans_mean: s.replans.mean,
            selected: i == best,
        })
        .collect();
    Ok((best, rows))
}

fn train_one(cfg: &ExperimentConfig, seed: u64, out_dir: &Path) -> Result<TrainRun> {
    let ck_path = checkpoint_path(out_dir, seed);
    let (resume, mut episodes, mut updates) = if cfg.train.resume && ck_path.exists() {
        let ck = Checkpoint::load(&ck_path)?;
        if ck.seed != seed {
            return Err(Error::Checkpoint(format!(
                "{} belongs to seed {}, not {seed}",
                ck_path.display(),
                ck.seed
            )));
        }
        let prev: Vec<CurveRow> = if curves_path(out_dir, seed).exists() {
            read_csv(&curves_path(out_dir, seed))?
        } else {
            Vec::new()
        };
        let prev_updates: Vec<UpdateRow> = if updates_path(out_dir, seed).exists() {
            read_csv(&updates_path(out_dir, seed))?
        } else {
            Vec::new()
        };
        let eps: Vec<EpisodeRecord> = prev
            .iter()
            .filter(|r| r.episode < ck.episodes_done)
            .map(|r| EpisodeRecord {
                episode: r.episode,
                failures: r.failures,
                replans: r.replans,
                episode_return: r.episode_return,
                steps: r.steps,
                completed: r.completed,
                updates_done: r.updates_done,
            })
            .collect();
        let ups: Vec<UpdateRow> = prev_updates.into_iter().filter(|u| u.update <= ck.updates_done).collect();
        (Some(ck), eps, ups)
    } else {
        (None, Vec::new(), Vec::new())
    };

    let outcome = train(
        &cfg.env,
        &cfg.ppo,
        seed,
        TrainOptions {
            checkpoint_path: Some(ck_path),
            resume,
        },
    )?;
    episodes.extend(outcome.episodes.iter().copied());
    updates.extend(outcome.updates.iter().map(UpdateRow::from));
    let curve = curve_rows(&episodes, &updates, cfg.train.smoothing_window);

    write_csv(&curves_path(out_dir, seed), &curve)?;
    write_csv(&updates_path(out_dir, seed), &updates)?;
    let series = |label: &str, f: fn(&CurveRow) -> f64| Series {
        label: label.to_string(),
        points: curve.iter().map(|r| (r.episode as f64, f(r))).collect(),
    };
    let svg = line_chart(
        &format!("Learning curves, seed {seed} (moving average {})", cfg.train.smoothing_window),
        "episode",
        "count per episode",
        &[series("task failures", |r| r.failures_ma), series("replanning requests", |r| r.replans_ma)],
        false,
    );
    write_text(&out_dir.join(format!("train_curves_seed{seed}.svg")), &svg)?;
    Ok(TrainRun {
        seed,
        outcome,
        curve,
        updates,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moving_average_warms_up() {
        let ma = moving_average(&[2.0, 4.0, 6.0, 8.0], 2);
        assert_eq!(ma, vec![2.0, 3.0, 5.0, 7.0]);
        assert_eq!(moving_average(&[], 20), Vec::<f64>::new());
    }

    #[test]
    fn one_episode_gives_one_row() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = ExperimentConfig::default();
        cfg.ppo.total_episodes = 1;
        cfg.ppo.n_steps = 20;
        cfg.ppo.batch_size = 10;
        cfg.train.validation_seeds = vec![1];
        let runs = run_train(&cfg, dir.path()).unwrap();
        assert_eq!(runs[0].curve.len(), 1);
        let back: Vec<CurveRow> = read_csv(&curves_path(dir.path(), 0)).unwrap();
        assert_eq!(back.len(), 1);
        assert!(checkpoint_path(dir.path(), 0).exists());
        let sel = Checkpoint::load(&selected_path(dir.path())).unwrap();
        assert_eq!(sel.net, runs[0].outcome.net);
    }
}
