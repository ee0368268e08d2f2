//! Training-loop behaviour: learning on a toy world, determinism, resume.

use hrc_core::env::EnvConfig;
use hrc_core::harness::{run_strategy_episodes, run_train, CurveRow, ExperimentConfig, PickingStrategy};
use hrc_core::harness::output::read_csv;
use hrc_core::rl::{evaluate_seeds, train, Checkpoint, NetShape, PolicyNet, PpoParams, TrainOptions};
use hrc_core::robot::Point2;
use hrc_core::stats::MeanStd;

fn quick_ppo(total: usize) -> PpoParams {
    PpoParams {
        n_steps: 40,
        batch_size: 20,
        epochs_per_update: 3,
        total_episodes: total,
        ..PpoParams::default()
    }
}

fn window_mean(xs: &[usize]) -> f64 {
    xs.iter().sum::<usize>() as f64 / xs.len() as f64
}

#[test]
fn static_toy_world_failures_decrease() {
    let mut cfg = EnvConfig::default();
    let corner = Point2::new(0.45, 1.15);
    cfg.scenario.human.sigma = 0.0;
    cfg.scenario.human.fixed_means = Some([corner, corner]);
    let ppo = PpoParams {
        total_episodes: 300,
        ..PpoParams::default()
    };
    let out = train(&cfg, &ppo, 0, TrainOptions::default()).unwrap();
    let f: Vec<usize> = out.episodes.iter().map(|e| e.failures).collect();
    assert_eq!(f.len(), 300);
    let (first, last) = (window_mean(&f[..50]), window_mean(&f[250..]));
    assert!(last < first, "failures {first} -> {last}");
}

#[test]
fn same_seed_gives_identical_training() {
    let cfg = EnvConfig::default();
    let a = train(&cfg, &quick_ppo(6), 11, TrainOptions::default()).unwrap();
    let b = train(&cfg, &quick_ppo(6), 11, TrainOptions::default()).unwrap();
    assert_eq!(a.episodes, b.episodes);
    assert_eq!(a.updates, b.updates);
    assert_eq!(a.net, b.net);
    let c = train(&cfg, &quick_ppo(6), 12, TrainOptions::default()).unwrap();
    assert_ne!(a.net, c.net);
}

#[test]
fn resume_continues_where_the_checkpoint_stopped() {
    let cfg = EnvConfig::default();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.ckpt");
    let first = train(
        &cfg,
        &quick_ppo(4),
        3,
        TrainOptions {
            checkpoint_path: Some(path.clone()),
            resume: None,
        },
    )
    .unwrap();
    let ck = Checkpoint::load(&path).unwrap();
    assert_eq!(ck.episodes_done, 4);
    assert_eq!(ck.net, first.net);
    let second = train(
        &cfg,
        &quick_ppo(9),
        3,
        TrainOptions {
            checkpoint_path: Some(path.clone()),
            resume: Some(ck),
        },
    )
    .unwrap();
    let ids: Vec<usize> = second.episodes.iter().map(|e| e.episode).collect();
    assert_eq!(ids, (4..9).collect::<Vec<_>>());
    assert!(second.updates_done >= first.updates_done);
    assert!(second.updates.iter().all(|u| u.update > first.updates_done));
    assert_eq!(Checkpoint::load(&path).unwrap().episodes_done, 9);
}

#[test]
fn resumed_pipeline_curve_is_monotone() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::default();
    cfg.ppo = quick_ppo(3);
    cfg.train.seeds = vec![5];
    run_train(&cfg, dir.path()).unwrap();
    cfg.ppo.total_episodes = 7;
    cfg.train.resume = true;
    let runs = run_train(&cfg, dir.path()).unwrap();
    let rows: Vec<CurveRow> = read_csv(&dir.path().join("train_curves_seed5.csv")).unwrap();
    let ids: Vec<usize> = rows.iter().map(|r| r.episode).collect();
    assert_eq!(ids, (0..7).collect::<Vec<_>>());
    assert_eq!(runs[0].curve, rows);
}

#[test]
fn untrained_policy_is_statistically_like_random_picking() {
    let cfg = EnvConfig::default();
    let net = PolicyNet::new(NetShape::default(), 0);
    let seeds: Vec<u64> = (300..350).collect();
    let rl = evaluate_seeds(&net, &cfg, &seeds).unwrap();
    let random = run_strategy_episodes(&cfg, &PickingStrategy::Random, &seeds).unwrap();
    let rf: Vec<f64> = random.iter().map(|m| m.failures as f64).collect();
    let r = MeanStd::of(&rf);
    let pooled = ((rl.failures.std.powi(2) + r.std.powi(2)) / 2.0).sqrt();
    let diff = (rl.failures.mean - r.mean).abs();
    assert!(diff <= 2.0 * pooled, "untrained {} vs random {} (pooled std {pooled})", rl.failures.mean, r.mean);
}
