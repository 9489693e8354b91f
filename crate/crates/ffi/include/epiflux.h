#ifndef EPIFLUX_H
#define EPIFLUX_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum {
  EPIFLUX_STATUS_OK = 0,
  EPIFLUX_STATUS_NULL_POINTER = 1,
  EPIFLUX_STATUS_INVALID_PARAMETER = 2,
  EPIFLUX_STATUS_UNDERFLOW = 3,
  EPIFLUX_STATUS_BUDGET_EXCEEDED = 4,
  EPIFLUX_STATUS_OUT_OF_RANGE = 5,
  EPIFLUX_STATUS_MISSING_EVENT_LOG = 6,
  EPIFLUX_STATUS_STEP_TOO_LARGE = 7,
  EPIFLUX_STATUS_GRID_MISMATCH = 8,
  EPIFLUX_STATUS_DEGENERATE_SAMPLE = 9,
  EPIFLUX_STATUS_INSUFFICIENT_DATA = 10,
  EPIFLUX_STATUS_CONFIG = 11,
  EPIFLUX_STATUS_IO = 12,
  EPIFLUX_STATUS_GATE_FAILED = 13,
  EPIFLUX_STATUS_INVALID_UTF8 = 14,
  EPIFLUX_STATUS_BUFFER_TOO_SMALL = 15,
  EPIFLUX_STATUS_PANIC = 99,
} EpifluxStatus;

/**
 * What a simulation keeps besides the endpoint.
 */
typedef enum {
  /**
   * Every event; needed for event access, W at arbitrary times and stop-time replay.
   */
  EPIFLUX_RECORD_MODE_FULL_EVENT_LOG = 0,
  /**
   * States on the grid `0, dt, 2 dt, ...`.
   */
  EPIFLUX_RECORD_MODE_SAMPLED_GRID = 1,
  /**
   * Final state and drift integral only.
   */
  EPIFLUX_RECORD_MODE_ENDPOINT_ONLY = 2,
} EpifluxRecordMode;

/**
 * Tabulated limit covariance `Σ(t)`.
 */
typedef struct EpifluxLimitCov EpifluxLimitCov;

/**
 * A mean-field ODE solution on a fixed step grid.
 */
typedef struct EpifluxOde EpifluxOde;

/**
 * Model parameters and population scale.
 */
typedef struct EpifluxParams EpifluxParams;

/**
 * One simulated sample path.
 */
typedef struct EpifluxTrajectory EpifluxTrajectory;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread (empty if none).
 */
const char *epiflux_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *epiflux_version(void);

EpifluxStatus epiflux_params_new(double nu,
                                 double gamma,
                                 double beta0,
                                 double beta1,
                                 uint64_t n_scale,
                                 EpifluxParams **params_out);

void epiflux_params_free(EpifluxParams *params);

/**
 * Seasonal contact rate β(t); NaN for a NULL handle.
 */
double epiflux_beta_at(const EpifluxParams *params, double t);

/**
 * Mean-field drift at a fractional state.
 */
EpifluxStatus epiflux_drift(const EpifluxParams *params,
                            const double *state,
                            double t,
                            double *drift_out);

/**
 * Infinitesimal covariance matrix at a fractional state.
 */
EpifluxStatus epiflux_cov_matrix(const EpifluxParams *params,
                                 const double *state,
                                 double t,
                                 double *matrix_out);

/**
 * Simulate one exact path of the original process.
 *
 * `dt` is only read for `EPIFLUX_RECORD_MODE_SAMPLED_GRID`. `epsilon <= 0`
 * disables tracking of the ε-exit time.
 */
EpifluxStatus epiflux_simulate(const EpifluxParams *params,
                               const uint64_t *initial,
                               double t_end,
                               uint64_t seed,
                               uint64_t stream,
                               EpifluxRecordMode mode,
                               double dt,
                               double epsilon,
                               EpifluxTrajectory **trajectory_out);

/**
 * Simulate the original and truncated processes from shared randomness.
 * Both keep full event logs.
 */
EpifluxStatus epiflux_simulate_coupled(const EpifluxParams *params,
                                       const uint64_t *initial,
                                       double t_end,
                                       uint64_t seed,
                                       uint64_t stream,
                                       EpifluxTrajectory **original_out,
                                       EpifluxTrajectory **truncated_out);

void epiflux_trajectory_free(EpifluxTrajectory *trajectory);

EpifluxStatus epiflux_trajectory_final_state(const EpifluxTrajectory *trajectory,
                                             uint64_t *state_out);

/**
 * Number of accepted events; 0 for a NULL handle.
 */
uint64_t epiflux_trajectory_event_count(const EpifluxTrajectory *trajectory);

/**
 * `∫₀^t_end F(ξ_s, s) ds` along the path.
 */
EpifluxStatus epiflux_trajectory_drift_integral(const EpifluxTrajectory *trajectory,
                                                double *drift_out);

/**
 * Event times and kinds (kind codes 0..=5: birth, susceptible death,
 * infection, recovery, infectious death, recovered death).
 */
EpifluxStatus epiflux_trajectory_events(const EpifluxTrajectory *trajectory,
                                        double *times,
                                        uint8_t *kinds,
                                        size_t capacity,
                                        size_t *len_out);

/**
 * Grid times and states (`3 * len` counts, row per time).
 */
EpifluxStatus epiflux_trajectory_grid(const EpifluxTrajectory *trajectory,
                                      double *times,
                                      uint64_t *states,
                                      size_t capacity,
                                      size_t *len_out);

/**
 * First times the total exceeds `2N` and leaves the ε band; NaN when not reached.
 */
EpifluxStatus epiflux_trajectory_stop_times(const EpifluxTrajectory *trajectory,
                                            double *tau_n_out,
                                            double *tau_n_eps_out);

/**
 * Scaled fluctuation `W_N(t)`; needs a full event log.
 */
EpifluxStatus epiflux_trajectory_w(const EpifluxTrajectory *trajectory,
                                   const EpifluxParams *params,
                                   double t,
                                   double *w_out);

EpifluxStatus epiflux_ode_integrate(const EpifluxParams *params,
                                    const double *initial,
                                    double t_end,
                                    double h,
                                    EpifluxOde **ode_out);

void epiflux_ode_free(EpifluxOde *ode);

/**
 * Solution at `t` (linear between grid points).
 */
EpifluxStatus epiflux_ode_at(const EpifluxOde *ode, double t, double *state_out);

/**
 * Grid times and states (`3 * len` values, row per time).
 */
EpifluxStatus epiflux_ode_values(const EpifluxOde *ode,
                                 double *times,
                                 double *states,
                                 size_t capacity,
                                 size_t *len_out);

EpifluxStatus epiflux_limit_covariance(const EpifluxParams *params,
                                       const EpifluxOde *ode,
                                       double t_end,
                                       EpifluxLimitCov **cov_out);

void epiflux_limit_cov_free(EpifluxLimitCov *cov);

/**
 * `Σ(t)` as a row-major 3×3 matrix.
 */
EpifluxStatus epiflux_limit_cov_at(const EpifluxLimitCov *cov, double t, double *matrix_out);

/**
 * Limit characteristic function `exp(-θᵀΣ(t)θ / 2)`.
 */
EpifluxStatus epiflux_limit_char_function(const EpifluxLimitCov *cov,
                                          double t,
                                          const double *theta,
                                          double *value_out);

/**
 * Run a study from JSON config text, exactly as the `epiflux` binary would.
 *
 * `study` is one of `simulate`, `ode`, `ensemble`, `fluctuation`, `scaling`.
 * `out_dir` may be NULL to use the config's directory. With `gate` set, a
 * failed statistical check returns `EPIFLUX_STATUS_GATE_FAILED` (files are
 * still written).
 */
EpifluxStatus epiflux_run_study(const char *study,
                                const char *config_json,
                                const char *out_dir,
                                bool gate);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* EPIFLUX_H */
