/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#ifndef HRC_H
#define HRC_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum HrcStatus {
  HRC_STATUS_OK = 0,
  HRC_STATUS_NULL_POINTER = 1,
  /**
   * A buffer has the wrong length or a string is not UTF-8.
   */
  HRC_STATUS_INVALID_ARGUMENT = 2,
  HRC_STATUS_INVALID_CONFIG = 3,
  HRC_STATUS_EPISODE_FINISHED = 4,
  HRC_STATUS_IO = 5,
  HRC_STATUS_CHECKPOINT = 6,
  /**
   * Any other library error.
   */
  HRC_STATUS_FAILED = 7,
  /**
   * A Rust panic was caught at the boundary.
   */
  HRC_STATUS_PANIC = 8,
} HrcStatus;

/**
 * Opaque task-planning environment.
 */
typedef struct HrcEnv HrcEnv;

/**
 * Opaque trained policy.
 */
typedef struct HrcPolicy HrcPolicy;

/**
 * Scalar results of one environment step.
 */
typedef struct HrcStepResult {
  double reward;
  bool done;
  bool task_achieved;
  bool goal_collision;
  /**
   * Replanning requests made while executing this step.
   */
  uint32_t replan_count;
  /**
   * Episode totals so far.
   */
  uint32_t failures;
  uint32_t replans;
  uint32_t completed;
} HrcStepResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Length of the flattened observation vector.
 */
size_t hrc_obs_dim(void);

/**
 * Copies the last error message of this thread into `buf` (NUL-terminated,
 * truncated to `len`). Returns the full message length without the NUL.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t hrc_last_error(char *buf, size_t len);

/**
 * Creates an environment. `config_toml` is an experiment configuration in
 * TOML (only its `[env]` table is used) or null for the defaults.
 *
 * # Safety
 * `config_toml` must be null or a NUL-terminated string; `out` must be a
 * valid pointer.
 */
enum HrcStatus hrc_env_new(const char *config_toml, uint64_t seed, struct HrcEnv **out);

/**
 * # Safety
 * `env` must be null or a handle from [`hrc_env_new`] not yet freed.
 */
void hrc_env_free(struct HrcEnv *env);

/**
 * Starts a new episode on the world of `seed`. When `obs_out` is non-null it
 * receives the initial observation (`obs_len` must equal [`hrc_obs_dim`]).
 *
 * # Safety
 * `env` must be a live handle; `obs_out` null or `obs_len` writable doubles.
 */
enum HrcStatus hrc_env_reset(struct HrcEnv *env, uint64_t seed, double *obs_out, size_t obs_len);

/**
 * Applies the normalized action `(u0, u1)`.
 *
 * # Safety
 * `env` must be a live handle; `obs_out` null or `obs_len` writable doubles;
 * `result` null or writable.
 */
enum HrcStatus hrc_env_step(struct HrcEnv *env,
                            double u0,
                            double u1,
                            double *obs_out,
                            size_t obs_len,
                            struct HrcStepResult *result);

/**
 * Writes the current observation.
 *
 * # Safety
 * `env` must be a live handle and `obs_out` must hold `obs_len` doubles.
 */
enum HrcStatus hrc_env_observation(const struct HrcEnv *env, double *obs_out, size_t obs_len);

/**
 * Loads a policy checkpoint written by the trainer.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum HrcStatus hrc_policy_load(const char *path, struct HrcPolicy **out);

/**
 * # Safety
 * `policy` must be null or a handle from [`hrc_policy_load`] not yet freed.
 */
void hrc_policy_free(struct HrcPolicy *policy);

/**
 * Evaluates the policy: `mean_out` receives the two action means (before
 * clamping), `value_out` the state-value estimate. Either output may be null.
 *
 * # Safety
 * `policy` must be a live handle, `obs` must hold `obs_len` doubles,
 * `mean_out` null or 2 writable doubles, `value_out` null or writable.
 */
enum HrcStatus hrc_policy_forward(const struct HrcPolicy *policy,
                                  const double *obs,
                                  size_t obs_len,
                                  double *mean_out,
                                  double *value_out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HRC_H */
