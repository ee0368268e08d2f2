//! Experiment configuration, loaded from TOML. Every field has a default, so
//! an empty file is a valid configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::baselines::{LogicalMode, StrategyKind};
use crate::env::EnvConfig;
use crate::error::{Error, Result};
use crate::rl::PpoParams;
use crate::robot::Point2;
use crate::world::MotionKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Sweep,
    Train,
    Compare,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepConfig {
    /// Fixed-rate baselines replan every this many ticks.
    pub replan_every: Vec<usize>,
    /// End-effector goal of the moving-arm scenario.
    pub goal: Point2,
    pub seeds: Vec<u64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            replan_every: vec![20, 10, 5, 2, 1],
            goal: Point2::new(-0.35, 0.45),
            seeds: (0..50).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    /// One independent training run per seed.
    pub seeds: Vec<u64>,
    /// Continue from the run's existing checkpoint in the output directory.
    pub resume: bool,
    /// Trailing moving-average window of the emitted curves.
    pub smoothing_window: usize,
    /// World seeds used to pick one policy when several seeds are trained.
    /// Keep them disjoint from the comparison seeds.
    pub validation_seeds: Vec<u64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            seeds: vec![0],
            resume: false,
            smoothing_window: 20,
            validation_seeds: (0..20).map(|s| 20_000 + s).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CompareConfig {
    pub strategies: Vec<StrategyKind>,
    pub scenarios: Vec<MotionKind>,
    /// World seeds shared by every strategy.
    pub seeds: Vec<u64>,
    /// Policy for the `rl` row.
    pub checkpoint: Option<PathBuf>,
    pub logical: LogicalMode,
    pub bootstrap_resamples: usize,
}

impl Default for CompareConfig {
    fn default() -> Self {
        Self {
            strategies: vec![
                StrategyKind::Rl,
                StrategyKind::Random,
                StrategyKind::Logical,
                StrategyKind::Sequential,
            ],
            scenarios: vec![MotionKind::Gaussian, MotionKind::Uniform],
            seeds: (0..20).map(|s| 10_000 + s).collect(),
            checkpoint: None,
            logical: LogicalMode::default(),
            bootstrap_resamples: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    /// Default experiment when none is named on the command line.
    pub experiment: ExperimentKind,
    pub out_dir: PathBuf,
    pub env: EnvConfig,
    pub ppo: PpoParams,
    pub sweep: SweepConfig,
    pub train: TrainConfig,
    pub compare: CompareConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            experiment: ExperimentKind::Sweep,
            out_dir: PathBuf::from("out"),
            env: EnvConfig::default(),
            ppo: PpoParams::default(),
            sweep: SweepConfig::default(),
            train: TrainConfig::default(),
            compare: CompareConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        self.env.validate()?;
        self.ppo.validate()?;
        if self.sweep.seeds.is_empty() || self.train.seeds.is_empty() || self.compare.seeds.is_empty() {
            return bad("seed lists must be non-empty");
        }
        if self.sweep.replan_every.contains(&0) {
            return bad("sweep.replan_every entries must be >= 1");
        }
        if !self.sweep.goal.is_finite() {
            return bad("sweep.goal must be finite");
        }
        if self.train.smoothing_window == 0 {
            return bad("train.smoothing_window must be >= 1");
        }
        if self.compare.strategies.is_empty() || self.compare.scenarios.is_empty() {
            return bad("compare needs at least one strategy and one scenario");
        }
        if self.compare.bootstrap_resamples == 0 {
            return bad("compare.bootstrap_resamples must be >= 1");
        }
        Ok(())
    }
}
