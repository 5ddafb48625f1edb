/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#ifndef DECOUPLE_SIM_H
#define DECOUPLE_SIM_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

// Drive selector for [`ds_control_field`].
typedef enum DsControlMode {
  DS_CONTROL_MODE_BARE = 0,
  DS_CONTROL_MODE_DEPHASING_PROTECT = 1,
  DS_CONTROL_MODE_FULL_PROTECT = 2,
} DsControlMode;

// Status codes; the non-zero values match the command-line exit codes where they overlap.
typedef enum DsStatus {
  DS_STATUS_OK = 0,
  DS_STATUS_FAILURE = 1,
  DS_STATUS_INVALID_INPUT = 2,
  DS_STATUS_NOT_CONVERGED = 3,
  DS_STATUS_NULL_POINTER = 4,
  DS_STATUS_PANIC = 5,
} DsStatus;

// Parsed and validated scenario.
typedef struct DsScenario DsScenario;

// Fidelity trajectory of one initial state.
typedef struct DsTrajectory DsTrajectory;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message describing the most recent failure on this thread; empty after a success.
//
// The pointer stays valid until the next call into this library on the same thread.
const char *ds_last_error(void);

// Library version as a static NUL-terminated string.
const char *ds_version(void);

// Parses scenario text into a new handle.
//
// # Safety
// `text` must be a NUL-terminated string and `out` a valid pointer.
enum DsStatus ds_scenario_parse(const char *text, struct DsScenario **out);

// Reads a scenario file into a new handle.
//
// # Safety
// `path` must be a NUL-terminated string and `out` a valid pointer.
enum DsStatus ds_scenario_load(const char *path, struct DsScenario **out);

// Releases a scenario handle. Null is ignored.
//
// # Safety
// `scenario` must come from this library and not be used afterwards.
void ds_scenario_free(struct DsScenario *scenario);

// Overrides the integration step count (0 restores the per-drive default).
//
// # Safety
// `scenario` must be a live handle.
enum DsStatus ds_scenario_set_steps(struct DsScenario *scenario, size_t steps);

// Dimensionless inverse temperature used by the scenario.
//
// # Safety
// `scenario` must be a live handle and `out` a valid pointer.
enum DsStatus ds_scenario_beta_omega_c(const struct DsScenario *scenario, double *out);

// Runs the scenario's experiment and writes its CSV to `path`.
//
// The CSV is written even when the step-doubling check fails, in which
// case `NotConverged` is returned.
//
// # Safety
// `scenario` must be a live handle and `path` a NUL-terminated string.
enum DsStatus ds_run_to_csv(const struct DsScenario *scenario, const char *path);

// Control field `(hx, hy, hz)` in units of `1/tau` at time `t` in `[0, tau]`.
//
// # Safety
// `out` must point to three writable doubles.
enum DsStatus ds_control_field(enum DsControlMode mode,
                               uint32_t n,
                               uint32_t m,
                               double tau,
                               double t,
                               double *out);

// Bath autocorrelations `I1(delta)` and `I2(delta)` as `(re, im)` pairs.
//
// # Safety
// `out_i1` and `out_i2` must each point to two writable doubles.
enum DsStatus ds_bath_kernels(double eta,
                              uint32_t s,
                              double omega_c,
                              double beta_omega_c,
                              double delta,
                              double *out_i1,
                              double *out_i2);

// Integrates the scenario's drive and baths from the pure state at Bloch angles `(theta, phi)`.
//
// # Safety
// `scenario` must be a live handle and `out` a valid pointer.
enum DsStatus ds_evolve(const struct DsScenario *scenario,
                        double theta,
                        double phi,
                        struct DsTrajectory **out);

// Releases a trajectory handle. Null is ignored.
//
// # Safety
// `trajectory` must come from this library and not be used afterwards.
void ds_trajectory_free(struct DsTrajectory *trajectory);

// Number of grid points in the trajectory (0 for a null handle).
//
// # Safety
// `trajectory` must be null or a live handle.
size_t ds_trajectory_len(const struct DsTrajectory *trajectory);

// Copies up to `len` times (in units of `tau`) and fidelities into the buffers.
//
// # Safety
// `trajectory` must be a live handle; each non-null buffer must hold `len` doubles.
enum DsStatus ds_trajectory_copy(const struct DsTrajectory *trajectory,
                                 double *times,
                                 double *fidelity,
                                 size_t len);

// `F(tau)`, its doubled-grid value and whether they agree within the scenario tolerance.
//
// # Safety
// `trajectory` must be a live handle; non-null outputs must be writable.
enum DsStatus ds_trajectory_summary(const struct DsTrajectory *trajectory,
                                    double *final_fidelity,
                                    double *refined_fidelity,
                                    bool *converged);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DECOUPLE_SIM_H */
