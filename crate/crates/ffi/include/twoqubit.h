#ifndef TWOQUBIT_H
#define TWOQUBIT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stddef.h>
#include <stdint.h>

typedef enum TqPropagator {
  TQ_PROPAGATOR_SPECTRAL = 0,
  TQ_PROPAGATOR_RK = 1,
  TQ_PROPAGATOR_EXPM = 2,
} TqPropagator;

// Result code of every fallible call.
typedef enum TqStatus {
  TQ_STATUS_OK = 0,
  TQ_STATUS_NULL_POINTER = 1,
  TQ_STATUS_INVALID_UTF8 = 2,
  TQ_STATUS_INVALID_ARGUMENT = 3,
  TQ_STATUS_CONFIG = 4,
  TQ_STATUS_NUMERICAL = 5,
  TQ_STATUS_IO = 6,
  TQ_STATUS_OUT_OF_RANGE = 7,
  TQ_STATUS_PANIC = 8,
} TqStatus;

// Scenario configuration: a preset, optional config text and overrides.
typedef struct TqScenario TqScenario;

// Observables of a finished propagation.
typedef struct TqTrajectory TqTrajectory;

// One sample of a trajectory. Populations are in the eigenbasis
// `{ee, +, −, gg}`; entropy is in nats.
typedef struct TqRecord {
  double t;
  double p_ee;
  double p_s;
  double p_as;
  double p_gg;
  double entropy;
  double concurrence;
  double trace_err;
  double min_eig;
} TqRecord;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *tq_version(void);

// Message of the last failed call on this thread, or NULL. The pointer stays
// valid until the next failing call on the same thread.
const char *tq_last_error(void);

// Creates a scenario from a preset name (`main`, `one_reservoir`, `dicke`,
// `local`, `detuning_sweep`, `custom`); NULL selects `main`.
//
// # Safety
// `preset` must be NULL or a NUL-terminated string; `out` must be writable.
enum TqStatus tq_scenario_new(const char *preset, struct TqScenario **out);

// Creates a scenario from config-file text.
//
// # Safety
// `text` must be a NUL-terminated string; `out` must be writable.
enum TqStatus tq_scenario_from_config(const char *text, struct TqScenario **out);

// Applies a `key = value` override (e.g. `"params.coupling"`, `"0.2"`).
// On failure the scenario is left unchanged.
//
// # Safety
// `scenario` must come from this library; `key` and `value` must be
// NUL-terminated strings.
enum TqStatus tq_scenario_set(struct TqScenario *scenario, const char *key, const char *value);

// Reads a resolved numeric setting: a physical parameter (`omega1`,
// `omega2`, `coupling`, `gamma_dp1`, `gamma_dp2`, `gamma_rad`, `temp_dp`,
// `temp_rad`) or a grid bound (`t_min`, `t_max`).
//
// # Safety
// `scenario` must come from this library; `key` must be a NUL-terminated
// string; `out` must be writable.
enum TqStatus tq_scenario_get(const struct TqScenario *scenario, const char *key, double *out);

// Closed-form decay rate of the entangled plateau for the scenario's
// parameters.
//
// # Safety
// `scenario` must come from this library; `out` must be writable.
enum TqStatus tq_scenario_plateau_rate(const struct TqScenario *scenario, double *out);

// Propagates the scenario. With `write_files` non-zero the trajectory,
// plot data and manifest are also written to the scenario's output
// directory.
//
// # Safety
// `scenario` must come from this library; `out` must be writable.
enum TqStatus tq_scenario_run(const struct TqScenario *scenario,
                              int32_t write_files,
                              struct TqTrajectory **out);

// Releases a scenario; NULL is ignored.
//
// # Safety
// `scenario` must be NULL or come from this library and not be used again.
void tq_scenario_free(struct TqScenario *scenario);

// Number of samples; 0 for NULL.
//
// # Safety
// `trajectory` must be NULL or come from this library.
size_t tq_trajectory_len(const struct TqTrajectory *trajectory);

// Copies sample `index` into `out`.
//
// # Safety
// `trajectory` must come from this library; `out` must be writable.
enum TqStatus tq_trajectory_record(const struct TqTrajectory *trajectory,
                                   size_t index,
                                   struct TqRecord *out);

// Propagator that actually produced the samples (spectral may fall back to
// expm).
//
// # Safety
// `trajectory` must come from this library; `out` must be writable.
enum TqStatus tq_trajectory_method(const struct TqTrajectory *trajectory, enum TqPropagator *out);

// Fitted decay rate of the antisymmetric population and its R².
// Returns `TQ_STATUS_NUMERICAL` when the grid does not resolve the decay.
//
// # Safety
// `trajectory` must come from this library; `rate` and `r_squared` must be
// writable.
enum TqStatus tq_trajectory_lifetime(const struct TqTrajectory *trajectory,
                                     double *rate,
                                     double *r_squared);

// Releases a trajectory; NULL is ignored.
//
// # Safety
// `trajectory` must be NULL or come from this library and not be used again.
void tq_trajectory_free(struct TqTrajectory *trajectory);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TWOQUBIT_H */
