//! Experiment pipelines, baselines and persistence.

pub mod baselines;
pub mod compare;
pub mod config;
pub mod demo;
pub mod output;
pub mod sweep;
pub mod training;

pub use baselines::{baseline_action, pick_pose_free, LogicalMode, PickingStrategy, StrategyKind};
pub use compare::{
    degradation_ratio, env_for, run_compare, run_compare_with, run_strategy_episodes, write_compare, write_eval,
    CompareReport, CompareRun, ComparisonRecord, PairedTest, Robustness,
};
pub use config::{CompareConfig, ExperimentConfig, ExperimentKind, SweepConfig, TrainConfig};
pub use demo::run_demo;
pub use sweep::{run_sweep, sweep_execution, write_sweep, SweepReport, SweepRow, SweepRun, SweepTrend};
pub use training::{moving_average, run_train, select_trained, selected_path, CurveRow, SelectionRow, TrainRun, UpdateRow};
