use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("joint {joint} angle {angle} outside limits [{lo}, {hi}]")]
    JointLimit {
        joint: usize,
        angle: f64,
        lo: f64,
        hi: f64,
    },

    #[error("joint configuration has {got} angles, arm has {expected} links")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("no inverse kinematics solution for target ({x:.4}, {y:.4})")]
    NoSolution { x: f64, y: f64 },

    #[error("planning failed after {iterations} iterations")]
    PlanFailure { iterations: usize },

    #[error("episode already finished")]
    EpisodeFinished,

    #[error("unknown task id {0}")]
    UnknownTask(usize),

    #[error("task {0} already completed")]
    TaskAlreadyDone(usize),

    #[error("no remaining tasks")]
    NoTasksRemaining,

    #[error("non-finite loss in minibatch {batch} of epoch {epoch}")]
    NonFiniteLoss { epoch: usize, batch: usize },

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
