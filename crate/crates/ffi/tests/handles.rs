use std::ffi::{c_char, CString};
use std::ptr;

use hrc_core::env::{Action, TaskEnv};
use hrc_core::harness::ExperimentConfig;
use hrc_core::rl::{Checkpoint, NetShape, PolicyNet};
use hrc_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0 as c_char; 256];
    let n = unsafe { hrc_last_error(buf.as_mut_ptr(), buf.len()) };
    let bytes: Vec<u8> = buf[..n.min(255)].iter().map(|&c| c as u8).collect();
    String::from_utf8(bytes).unwrap()
}

#[test]
fn episode_through_the_c_abi_matches_the_rust_api() {
    let dim = hrc_obs_dim();
    let mut env = ptr::null_mut();
    assert_eq!(unsafe { hrc_env_new(ptr::null(), 7, &mut env) }, HrcStatus::Ok);
    let mut obs = vec![0.0; dim];
    assert_eq!(unsafe { hrc_env_reset(env, 7, obs.as_mut_ptr(), dim) }, HrcStatus::Ok);

    let mut reference = TaskEnv::new(ExperimentConfig::default().env, 7).unwrap();
    assert_eq!(obs, reference.reset(7).unwrap().flatten());

    let mut res = HrcStepResult::default();
    let mut steps = 0;
    while !res.done {
        let u = [0.3 - 0.1 * steps as f64, 0.2];
        let st = unsafe { hrc_env_step(env, u[0], u[1], obs.as_mut_ptr(), dim, &mut res) };
        assert_eq!(st, HrcStatus::Ok);
        let r = reference.step(Action::new(u[0], u[1])).unwrap();
        assert_eq!(r.reward, res.reward);
        assert_eq!(r.observation.flatten(), obs);
        steps += 1;
    }
    let m = reference.metrics();
    assert_eq!((res.failures as usize, res.replans as usize), (m.failures, m.replans));

    let st = unsafe { hrc_env_step(env, 0.0, 0.0, ptr::null_mut(), 0, ptr::null_mut()) };
    assert_eq!(st, HrcStatus::EpisodeFinished);
    assert!(last_error().contains("finished"));
    unsafe { hrc_env_free(env) };
}

#[test]
fn bad_arguments_are_reported_not_crashed() {
    let mut env = ptr::null_mut();
    assert_eq!(unsafe { hrc_env_reset(ptr::null_mut(), 0, ptr::null_mut(), 0) }, HrcStatus::NullPointer);
    assert_eq!(unsafe { hrc_env_new(ptr::null(), 0, ptr::null_mut()) }, HrcStatus::NullPointer);

    let bad = CString::new("[env]\nrobot_quota = 0\n").unwrap();
    assert_eq!(unsafe { hrc_env_new(bad.as_ptr(), 0, &mut env) }, HrcStatus::InvalidConfig);
    assert!(env.is_null());

    let ok = CString::new("[env]\nmax_steps = 3\n").unwrap();
    assert_eq!(unsafe { hrc_env_new(ok.as_ptr(), 0, &mut env) }, HrcStatus::Ok);
    let mut short = vec![0.0; 5];
    assert_eq!(
        unsafe { hrc_env_observation(env, short.as_mut_ptr(), short.len()) },
        HrcStatus::InvalidArgument
    );
    unsafe { hrc_env_free(env) };
    unsafe { hrc_env_free(ptr::null_mut()) };
}

#[test]
fn policy_forward_matches_the_network() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p.ckpt");
    let net = PolicyNet::new(NetShape::default(), 4);
    Checkpoint {
        net: net.clone(),
        adam: None,
        seed: 4,
        episodes_done: 0,
        updates_done: 0,
    }
    .save(&path)
    .unwrap();

    let c_path = CString::new(path.to_str().unwrap()).unwrap();
    let mut pol = ptr::null_mut();
    assert_eq!(unsafe { hrc_policy_load(c_path.as_ptr(), &mut pol) }, HrcStatus::Ok);
    let obs: Vec<f64> = (0..hrc_obs_dim()).map(|i| ((i % 3) as f64) - 1.0).collect();
    let mut mean = [0.0; 2];
    let mut value = 0.0;
    let st = unsafe { hrc_policy_forward(pol, obs.as_ptr(), obs.len(), mean.as_mut_ptr(), &mut value) };
    assert_eq!(st, HrcStatus::Ok);
    let expect = net.forward(&obs).unwrap();
    assert_eq!(mean.to_vec(), expect.mean);
    assert_eq!(value, expect.value);
    let st = unsafe { hrc_policy_forward(pol, obs.as_ptr(), 3, mean.as_mut_ptr(), &mut value) };
    assert_eq!(st, HrcStatus::InvalidArgument);
    unsafe { hrc_policy_free(pol) };

    let missing = CString::new(dir.path().join("nope.ckpt").to_str().unwrap()).unwrap();
    assert_eq!(unsafe { hrc_policy_load(missing.as_ptr(), &mut pol) }, HrcStatus::Checkpoint);
}
