#ifndef STRINGASYM_H
#define STRINGASYM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every call.
 */
typedef enum SaStatus {
  SA_STATUS_OK = 0,
  SA_STATUS_NULL_POINTER = 1,
  SA_STATUS_INVALID_UTF8 = 2,
  SA_STATUS_CONFIG_PARSE = 3,
  SA_STATUS_CONFIG_INVALID = 4,
  SA_STATUS_FLUX_SYNTAX = 5,
  SA_STATUS_FLUX_UNKNOWN_SYMBOL = 6,
  SA_STATUS_FLUX_NONZERO_AT_ORIGIN = 7,
  SA_STATUS_INVALID_PARAMS = 8,
  SA_STATUS_SOLVER_FAILURE = 9,
  SA_STATUS_IO = 10,
  SA_STATUS_OUT_OF_RANGE = 11,
  SA_STATUS_BUFFER_TOO_SMALL = 12,
  SA_STATUS_PANIC = 13,
} SaStatus;

/**
 * Closure used for the effective speed and flux coefficient.
 */
typedef enum SaClosure {
  SA_CLOSURE_CONSISTENT = 0,
  SA_CLOSURE_PRINTED = 1,
} SaClosure;

/**
 * KdV branch selector.
 */
typedef enum SaBranch {
  SA_BRANCH_I = 0,
  SA_BRANCH_II = 1,
} SaBranch;

/**
 * Field selector for trajectory access.
 */
typedef enum SaField {
  SA_FIELD_U = 0,
  SA_FIELD_UT = 1,
  SA_FIELD_V = 2,
  SA_FIELD_VT = 3,
  /**
   * KdV profile; only valid on KdV trajectories.
   */
  SA_FIELD_S = 4,
} SaField;

/**
 * Validated run configuration.
 */
typedef struct SaConfig SaConfig;

/**
 * Parsed nonlinearity `f(u, v)`.
 */
typedef struct SaFlux SaFlux;

/**
 * Outcome of a configured run, with its manifest.
 */
typedef struct SaRun SaRun;

/**
 * Snapshots from a full or KdV solve on one grid.
 */
typedef struct SaTrajectory SaTrajectory;

/**
 * Derived constants of the reduced equations.
 */
typedef struct SaDerived {
  double k;
  double cap_k;
  double flux_scale;
  double v_ratio;
  /**
   * 1 when `k1 == k2`.
   */
  int32_t degenerate;
} SaDerived;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread; empty after success.
 * Valid until the next call on this thread.
 */
const char *sa_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *sa_version(void);

/**
 * Parses `source` (an expression or one of the aliases `bilinear`,
 * `quadratic`, `zero`) into a flux handle.
 */
enum SaStatus sa_flux_parse(const char *source, struct SaFlux **out);

enum SaStatus sa_flux_eval(const struct SaFlux *flux, double u, double v, double *out);

/**
 * Canonical printed form of the parsed expression, written NUL-terminated
 * into `buf`. `needed` receives the required size including the NUL.
 */
enum SaStatus sa_flux_to_string(const struct SaFlux *flux, char *buf, size_t len, size_t *needed);

void sa_flux_free(struct SaFlux *flux);

/**
 * Derived constants for the given parameters.
 */
enum SaStatus sa_derived(double eps,
                         double k1,
                         double k2,
                         double a,
                         double b,
                         enum SaClosure closure,
                         struct SaDerived *out);

/**
 * Parses configuration text.
 */
enum SaStatus sa_config_parse(const char *text, struct SaConfig **out);

/**
 * Reads and parses a configuration file.
 */
enum SaStatus sa_config_load(const char *path, struct SaConfig **out);

/**
 * Replaces `eps` in the configuration.
 */
enum SaStatus sa_config_set_eps(struct SaConfig *config, double eps);

void sa_config_free(struct SaConfig *config);

/**
 * Solves the full system at the configured output times.
 */
enum SaStatus sa_full_solve(const struct SaConfig *config, struct SaTrajectory **out);

/**
 * Solves one KdV branch at the configured output times.
 */
enum SaStatus sa_kdv_solve(const struct SaConfig *config,
                           enum SaBranch branch,
                           struct SaTrajectory **out);

/**
 * Number of snapshots.
 */
size_t sa_trajectory_len(const struct SaTrajectory *traj);

/**
 * Number of grid points per snapshot.
 */
size_t sa_trajectory_points(const struct SaTrajectory *traj);

enum SaStatus sa_trajectory_time(const struct SaTrajectory *traj, size_t index, double *out);

/**
 * Copies the grid coordinates (`x` or `zeta`) into `buf` of length `len`.
 */
enum SaStatus sa_trajectory_coordinates(const struct SaTrajectory *traj, double *buf, size_t len);

/**
 * Copies one field of snapshot `index` into `buf` of length `len`.
 */
enum SaStatus sa_trajectory_field(const struct SaTrajectory *traj,
                                  size_t index,
                                  enum SaField field,
                                  double *buf,
                                  size_t len);

void sa_trajectory_free(struct SaTrajectory *traj);

/**
 * Executes the configured mode. With a non-NULL `out_dir` the artifacts
 * are written there; with NULL nothing touches the filesystem. A pipeline
 * failure still yields a run handle whose manifest records the error, and
 * returns `SolverFailure`.
 */
enum SaStatus sa_run_execute(const struct SaConfig *config,
                             const char *out_dir,
                             struct SaRun **out);

/**
 * Manifest JSON, owned by the handle.
 */
const char *sa_run_manifest_json(const struct SaRun *run);

/**
 * 1 when the run finished without error, 0 otherwise.
 */
int32_t sa_run_succeeded(const struct SaRun *run);

void sa_run_free(struct SaRun *run);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* STRINGASYM_H */
