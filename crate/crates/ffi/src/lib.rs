//! C ABI over `hrc_core`.
//!
//! Environments and policies are opaque heap handles created by `*_new` /
//! `*_load` and released by the matching `*_free`. Every fallible call returns
//! an [`HrcStatus`]; the message of the most recent failure on the calling
//! thread is available from [`hrc_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use hrc_core::env::{Action, TaskEnv, OBS_DIM};
use hrc_core::error::Error;
use hrc_core::harness::ExperimentConfig;
use hrc_core::rl::{Checkpoint, PolicyNet};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HrcStatus {
    Ok = 0,
    NullPointer = 1,
    /// A buffer has the wrong length or a string is not UTF-8.
    InvalidArgument = 2,
    InvalidConfig = 3,
    EpisodeFinished = 4,
    Io = 5,
    Checkpoint = 6,
    /// Any other library error.
    Failed = 7,
    /// A Rust panic was caught at the boundary.
    Panic = 8,
}

/// Opaque task-planning environment.
pub struct HrcEnv {
    inner: TaskEnv,
}

/// Opaque trained policy.
pub struct HrcPolicy {
    net: PolicyNet,
}

/// Scalar results of one environment step.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct HrcStepResult {
    pub reward: f64,
    pub done: bool,
    pub task_achieved: bool,
    pub goal_collision: bool,
    /// Replanning requests made while executing this step.
    pub replan_count: u32,
    /// Episode totals so far.
    pub failures: u32,
    pub replans: u32,
    pub completed: u32,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &Error) -> HrcStatus {
    match e {
        Error::InvalidConfig(_) | Error::Toml(_) => HrcStatus::InvalidConfig,
        Error::DimensionMismatch { .. } => HrcStatus::InvalidArgument,
        Error::EpisodeFinished => HrcStatus::EpisodeFinished,
        Error::Io(_) => HrcStatus::Io,
        Error::Checkpoint(_) => HrcStatus::Checkpoint,
        _ => HrcStatus::Failed,
    }
}

struct Fail(HrcStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> HrcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => HrcStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside hrc".into());
            HrcStatus::Panic
        }
    }
}

fn null(what: &str) -> Fail {
    Fail(HrcStatus::NullPointer, format!("{what} is null"))
}

unsafe fn as_str<'a>(s: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if s.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| Fail(HrcStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn obs_slot<'a>(out: *mut f64, len: usize) -> Result<Option<&'a mut [f64]>, Fail> {
    if out.is_null() {
        return Ok(None);
    }
    if len != OBS_DIM {
        return Err(Fail(
            HrcStatus::InvalidArgument,
            format!("observation buffer holds {len} values, need {OBS_DIM}"),
        ));
    }
    Ok(Some(std::slice::from_raw_parts_mut(out, len)))
}

fn write_obs(env: &TaskEnv, slot: Option<&mut [f64]>) {
    if let Some(s) = slot {
        s.copy_from_slice(&env.observe().flatten());
    }
}

/// Length of the flattened observation vector.
#[no_mangle]
pub extern "C" fn hrc_obs_dim() -> usize {
    OBS_DIM
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length without the NUL.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn hrc_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr(), buf as *mut u8, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Creates an environment. `config_toml` is an experiment configuration in
/// TOML (only its `[env]` table is used) or null for the defaults.
///
/// # Safety
/// `config_toml` must be null or a NUL-terminated string; `out` must be a
/// valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hrc_env_new(config_toml: *const c_char, seed: u64, out: *mut *mut HrcEnv) -> HrcStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let cfg = if config_toml.is_null() {
            ExperimentConfig::default()
        } else {
            ExperimentConfig::from_toml_str(as_str(config_toml, "config_toml")?)?
        };
        let env = TaskEnv::new(cfg.env, seed)?;
        *out = Box::into_raw(Box::new(HrcEnv { inner: env }));
        Ok(())
    })
}

/// # Safety
/// `env` must be null or a handle from [`hrc_env_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hrc_env_free(env: *mut HrcEnv) {
    if !env.is_null() {
        drop(Box::from_raw(env));
    }
}

/// Starts a new episode on the world of `seed`. When `obs_out` is non-null it
/// receives the initial observation (`obs_len` must equal [`hrc_obs_dim`]).
///
/// # Safety
/// `env` must be a live handle; `obs_out` null or `obs_len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn hrc_env_reset(env: *mut HrcEnv, seed: u64, obs_out: *mut f64, obs_len: usize) -> HrcStatus {
    guard(|| {
        let env = env.as_mut().ok_or_else(|| null("env"))?;
        let slot = obs_slot(obs_out, obs_len)?;
        env.inner.reset(seed)?;
        write_obs(&env.inner, slot);
        Ok(())
    })
}

/// Applies the normalized action `(u0, u1)`.
///
/// # Safety
/// `env` must be a live handle; `obs_out` null or `obs_len` writable doubles;
/// `result` null or writable.
#[no_mangle]
pub unsafe extern "C" fn hrc_env_step(
    env: *mut HrcEnv,
    u0: f64,
    u1: f64,
    obs_out: *mut f64,
    obs_len: usize,
    result: *mut HrcStepResult,
) -> HrcStatus {
    guard(|| {
        let env = env.as_mut().ok_or_else(|| null("env"))?;
        let slot = obs_slot(obs_out, obs_len)?;
        let step = env.inner.step(Action::new(u0, u1))?;
        if let Some(s) = slot {
            s.copy_from_slice(&step.observation.flatten());
        }
        if let Some(r) = result.as_mut() {
            let m = env.inner.metrics();
            *r = HrcStepResult {
                reward: step.reward,
                done: step.done,
                task_achieved: step.info.task_achieved,
                goal_collision: step.info.goal_collision,
                replan_count: step.info.replan_count as u32,
                failures: m.failures as u32,
                replans: m.replans as u32,
                completed: m.completed as u32,
            };
        }
        Ok(())
    })
}

/// Writes the current observation.
///
/// # Safety
/// `env` must be a live handle and `obs_out` must hold `obs_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn hrc_env_observation(env: *const HrcEnv, obs_out: *mut f64, obs_len: usize) -> HrcStatus {
    guard(|| {
        let env = env.as_ref().ok_or_else(|| null("env"))?;
        let slot = obs_slot(obs_out, obs_len)?.ok_or_else(|| null("obs_out"))?;
        write_obs(&env.inner, Some(slot));
        Ok(())
    })
}

/// Loads a policy checkpoint written by the trainer.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hrc_policy_load(path: *const c_char, out: *mut *mut HrcPolicy) -> HrcStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let path = as_str(path, "path")?;
        let ck = Checkpoint::load(Path::new(path))?;
        *out = Box::into_raw(Box::new(HrcPolicy { net: ck.net }));
        Ok(())
    })
}

/// # Safety
/// `policy` must be null or a handle from [`hrc_policy_load`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hrc_policy_free(policy: *mut HrcPolicy) {
    if !policy.is_null() {
        drop(Box::from_raw(policy));
    }
}

/// Evaluates the policy: `mean_out` receives the two action means (before
/// clamping), `value_out` the state-value estimate. Either output may be null.
///
/// # Safety
/// `policy` must be a live handle, `obs` must hold `obs_len` doubles,
/// `mean_out` null or 2 writable doubles, `value_out` null or writable.
#[no_mangle]
pub unsafe extern "C" fn hrc_policy_forward(
    policy: *const HrcPolicy,
    obs: *const f64,
    obs_len: usize,
    mean_out: *mut f64,
    value_out: *mut f64,
) -> HrcStatus {
    guard(|| {
        let policy = policy.as_ref().ok_or_else(|| null("policy"))?;
        if obs.is_null() {
            return Err(null("obs"));
        }
        let input = std::slice::from_raw_parts(obs, obs_len);
        let out = policy.net.forward(input)?;
        if out.mean.len() != 2 {
            return Err(Fail(HrcStatus::InvalidArgument, "policy action is not two-dimensional".into()));
        }
        if !mean_out.is_null() {
            std::slice::from_raw_parts_mut(mean_out, 2).copy_from_slice(&out.mean[..2]);
        }
        if let Some(v) = value_out.as_mut() {
            *v = out.value;
        }
        Ok(())
    })
}
