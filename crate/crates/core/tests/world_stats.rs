//! Distributional checks of the human-motion model.

use hrc_core::robot::Point2;
use hrc_core::stats::{ks_p_value, ks_statistic, mean, sample_std};
use hrc_core::world::{MotionKind, Scenario, World};
use statrs::distribution::{ContinuousCDF, Normal};

const ALPHA: f64 = 1e-3;

fn uniform_cdf(lo: f64, hi: f64) -> impl Fn(f64) -> f64 {
    move |x| ((x - lo) / (hi - lo)).clamp(0.0, 1.0)
}

#[test]
fn episode_means_are_uniform_over_the_workspace() {
    let sc = Scenario::default();
    let ws = sc.workspace;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for seed in 0..1500 {
        let w = World::reset_episode(&sc, seed).unwrap();
        for m in w.state.episode_means {
            xs.push(m.x);
            ys.push(m.y);
        }
    }
    let px = ks_p_value(ks_statistic(&xs, uniform_cdf(ws.x_min, ws.x_max)), xs.len());
    let py = ks_p_value(ks_statistic(&ys, uniform_cdf(ws.y_min, ws.y_max)), ys.len());
    assert!(px > ALPHA && py > ALPHA, "p = {px}, {py}");
}

/// Standardized gaussian targets collected at every retarget tick.
fn gaussian_offsets(sc: &Scenario, episodes: u64, retargets: u64) -> Vec<f64> {
    let sigma = sc.human.sigma;
    let mut z = Vec::new();
    for seed in 0..episodes {
        let mut w = World::reset_episode(sc, seed).unwrap();
        for _ in 0..retargets * sc.human.retarget_interval {
            let retarget = w.state.tick % sc.human.retarget_interval == 0;
            w.step_human();
            if retarget {
                for arm in 0..2 {
                    let d = w.state.arm_targets[arm] - w.state.episode_means[arm];
                    z.push(d.x / sigma);
                    z.push(d.y / sigma);
                }
            }
        }
    }
    z
}

#[test]
fn gaussian_targets_follow_the_configured_spread() {
    let sc = Scenario::default();
    let z = gaussian_offsets(&sc, 100, 10);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let p = ks_p_value(ks_statistic(&z, |x| normal.cdf(x)), z.len());
    assert!(p > ALPHA, "KS p = {p}");
    let n = z.len() as f64;
    assert!(mean(&z).abs() < 4.0 / n.sqrt(), "mean {}", mean(&z));
    assert!((sample_std(&z) - 1.0).abs() < 0.05, "std {}", sample_std(&z));
}

#[test]
fn uniform_targets_cover_the_workspace() {
    let mut sc = Scenario::default();
    sc.human.kind = MotionKind::Uniform;
    let ws = sc.workspace;
    let mut xs = Vec::new();
    for seed in 0..100 {
        let mut w = World::reset_episode(&sc, seed).unwrap();
        for _ in 0..100 {
            let retarget = w.state.tick % sc.human.retarget_interval == 0;
            w.step_human();
            if retarget {
                xs.extend(w.state.arm_targets.iter().map(|p| p.x));
            }
        }
    }
    let p = ks_p_value(ks_statistic(&xs, uniform_cdf(ws.x_min, ws.x_max)), xs.len());
    assert!(p > ALPHA, "KS p = {p}");
}

#[test]
fn time_average_converges_to_the_episode_mean() {
    let mut sc = Scenario::default();
    sc.human.fixed_means = Some([Point2::new(-0.2, 0.8), Point2::new(0.25, 0.7)]);
    let mut w = World::reset_episode(&sc, 3).unwrap();
    let ticks = 20_000;
    let mut sum = [Point2::default(); 2];
    for _ in 0..ticks {
        w.step_human();
        for arm in 0..2 {
            sum[arm] = sum[arm] + w.state.arm_positions[arm];
        }
    }
    for arm in 0..2 {
        let avg = sum[arm] * (1.0 / ticks as f64);
        // ~2000 independent retargets with sigma 0.15 give a standard error near 0.003
        assert!(avg.distance(sc.human.fixed_means.unwrap()[arm]) < 0.02, "arm {arm}: {avg:?}");
    }
}

#[test]
fn arms_stay_inside_and_obstacles_respect_length() {
    for kind in [MotionKind::Gaussian, MotionKind::Uniform] {
        let mut sc = Scenario::default();
        sc.human.kind = kind;
        for seed in 0..50 {
            let mut w = World::reset_episode(&sc, seed).unwrap();
            for _ in 0..200 {
                w.step_human();
                for p in w.state.arm_positions {
                    assert!(sc.workspace.contains(p));
                }
                for ob in w.obstacles_at() {
                    assert!(ob.axis.a.distance(ob.axis.b) <= sc.human.arm_length + 1e-12);
                }
            }
        }
    }
}
