#ifndef DAMPWAVE_H
#define DAMPWAVE_H

#include <stdbool.h>
#include <stddef.h>

typedef enum DwRamp {
  DW_RAMP_SHARP = 0,
  DW_RAMP_SMOOTH = 1,
} DwRamp;

typedef enum DwStatus {
  DW_STATUS_OK = 0,
  DW_STATUS_NULL_POINTER = 1,
  DW_STATUS_INVALID_ARGUMENT = 2,
  DW_STATUS_HYPOTHESIS = 3,
  DW_STATUS_DOMAIN = 4,
  DW_STATUS_CONFIG = 5,
  DW_STATUS_CONVERGENCE = 6,
  DW_STATUS_IO = 7,
  DW_STATUS_PANIC = 8,
} DwStatus;

typedef enum DwTermination {
  DW_TERMINATION_COMPLETED = 0,
  DW_TERMINATION_BLOWUP = 1,
  DW_TERMINATION_INSTABILITY = 2,
} DwTermination;

/*
 Sampled potential and damping on a grid.
 */
typedef struct DwProfile DwProfile;

/*
 Finished simulation.
 */
typedef struct DwRun DwRun;

/*
 Hypothesis check summary of a profile.
 */
typedef struct DwValidation {
  bool all_passed;
  size_t failed_checks;
  double c_star;
  double v_origin;
  double smallness_bound;
} DwValidation;

/*
 One row of the time-series CSV.
 */
typedef struct DwRecord {
  double t;
  double e_u;
  double l2_u;
  double l2_local;
  double dissipation_cum;
  double g_k;
  double identity_residual;
  double lemma25_residual;
  double lemma25_ratio;
  double au2_cum;
} DwRecord;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message of the last failed call on this thread; empty after a success.
 The pointer stays valid until the next `dw_*` call on the same thread.
 */
const char *dw_last_error_message(void);

/*
 Library version as a static NUL-terminated string.
 */
const char *dw_version(void);

double dw_p_star(double beta);

/*
 Discrete Poincare-type constant for inner radius `l` on
 `[-half_width, half_width]` with `n_nodes` nodes.

 # Safety
 `out_c_star` must be null or valid for writes.
 */
enum DwStatus dw_estimate_c_star(double l,
                                 double half_width,
                                 size_t n_nodes,
                                 double tol,
                                 double *out_c_star);

/*
 Power-law potential with plateau damping on `[x_min, x_max]`.

 # Safety
 `out` must be null or valid for writes.
 */
enum DwStatus dw_profile_example1(double x_min,
                                  double x_max,
                                  size_t n_cells,
                                  double v0,
                                  double beta,
                                  double l,
                                  double eps1,
                                  enum DwRamp ramp,
                                  struct DwProfile **out);

/*
 Gaussian potential `v0 exp(-nu x^2)` with plateau damping.

 # Safety
 `out` must be null or valid for writes.
 */
enum DwStatus dw_profile_gaussian(double x_min,
                                  double x_max,
                                  size_t n_cells,
                                  double v0,
                                  double nu,
                                  double l,
                                  double eps1,
                                  enum DwRamp ramp,
                                  struct DwProfile **out);

/*
 # Safety
 `profile` must be null or a handle from a `dw_profile_*` constructor that
 has not been freed.
 */
void dw_profile_free(struct DwProfile *profile);

/*
 Checks the coefficient hypotheses and the smallness condition.

 # Safety
 `profile` must be a live handle; `out` must be null or valid for writes.
 */
enum DwStatus dw_validate(const struct DwProfile *profile, struct DwValidation *out);

/*
 Linear run on `profile` with centered bump data of the given radius.

 # Safety
 `profile` must be a live handle; `out` must be null or valid for writes.
 */
enum DwStatus dw_run_bump(const struct DwProfile *profile,
                          double radius,
                          double u0_amplitude,
                          double u1_amplitude,
                          double t_end,
                          struct DwRun **out);

/*
 Runs the TOML configuration in `text`.

 # Safety
 `text` must be a NUL-terminated string; `out` must be null or valid for writes.
 */
enum DwStatus dw_run_config_str(const char *text, struct DwRun **out);

/*
 Runs the TOML configuration file at `path`.

 # Safety
 `path` must be a NUL-terminated string; `out` must be null or valid for writes.
 */
enum DwStatus dw_run_config_file(const char *path, struct DwRun **out);

/*
 Number of records; zero for a null handle.

 # Safety
 `run` must be null or a live handle.
 */
size_t dw_run_record_count(const struct DwRun *run);

/*
 # Safety
 `run` must be a live handle; `out` must be null or valid for writes.
 */
enum DwStatus dw_run_record(const struct DwRun *run, size_t index, struct DwRecord *out);

/*
 Termination kind, with the stopping time in `out_t` (`t_end` when completed).

 # Safety
 `run` must be a live handle; the outputs must be null or valid for writes.
 */
enum DwStatus dw_run_termination(const struct DwRun *run,
                                 enum DwTermination *out_kind,
                                 double *out_t);

/*
 Writes the time-series CSV of `run` to `path`.

 # Safety
 `run` must be a live handle; `path` a NUL-terminated string.
 */
enum DwStatus dw_run_write_csv(const struct DwRun *run, const char *path);

/*
 # Safety
 `run` must be null or a live handle.
 */
void dw_run_free(struct DwRun *run);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DAMPWAVE_H */
