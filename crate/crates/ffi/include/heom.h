#ifndef HEOM_H
#define HEOM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

/*
 Result of every fallible call.
 */
typedef enum HeomStatus {
  HEOM_STATUS_OK = 0,
  /*
   Invalid configuration or argument.
   */
  HEOM_STATUS_CONFIG = 1,
  /*
   The integration failed (non-finite values, step underflow).
   */
  HEOM_STATUS_NUMERICAL = 2,
  /*
   The hierarchy or expansion exceeded a configured cap.
   */
  HEOM_STATUS_CAPACITY = 3,
  HEOM_STATUS_IO = 4,
  /*
   A required pointer was null.
   */
  HEOM_STATUS_NULL_POINTER = 5,
  /*
   An index was out of range or a buffer too small.
   */
  HEOM_STATUS_OUT_OF_RANGE = 6,
  /*
   Internal panic caught at the boundary.
   */
  HEOM_STATUS_PANIC = 7,
} HeomStatus;

/*
 Pipeline selector for [`heom_run`].
 */
typedef enum HeomMode {
  HEOM_MODE_PROPAGATE = 0,
  HEOM_MODE_WITNESS = 1,
  HEOM_MODE_OPTIMIZE = 2,
  HEOM_MODE_SCAN = 3,
  HEOM_MODE_CORRELATION = 4,
} HeomMode;

/*
 Parsed run configuration.
 */
typedef struct HeomConfig HeomConfig;

/*
 Outcome of [`heom_optimize`].
 */
typedef struct HeomControl HeomControl;

/*
 Reduced trajectory from [`heom_propagate`].
 */
typedef struct HeomTrajectory HeomTrajectory;

/*
 Reduced state at one grid point.
 */
typedef struct HeomSample {
  double t_fs;
  double rho11;
  double rho22;
  double re_rho12;
  double im_rho12;
  double field_au;
} HeomSample;

/*
 Message of the last failed call on this thread, or NULL. The pointer
 stays valid until the next failing call on the same thread.
 */
const char *heom_last_error(void);

/*
 Library version as a static NUL-terminated string.
 */
const char *heom_version(void);

/*
 Parses a TOML configuration held in memory.

 # Safety
 `toml` must be a NUL-terminated string; `out` must be writable.
 */
enum HeomStatus heom_config_from_toml(const char *toml, struct HeomConfig **out);

/*
 Loads a TOML configuration file; relative field-file paths resolve
 against the file's directory.

 # Safety
 `path` must be a NUL-terminated string; `out` must be writable.
 */
enum HeomStatus heom_config_load(const char *path, struct HeomConfig **out);

/*
 # Safety
 `config` must come from this library and not be used afterwards. NULL is ignored.
 */
void heom_config_free(struct HeomConfig *config);

/*
 Propagates the configured initial state under the configured field.

 # Safety
 `config` must be a live handle; `out` must be writable.
 */
enum HeomStatus heom_propagate(const struct HeomConfig *config, struct HeomTrajectory **out);

/*
 Number of samples (grid points) in the trajectory; 0 for NULL.

 # Safety
 `traj` must be NULL or a live handle.
 */
size_t heom_trajectory_len(const struct HeomTrajectory *traj);

/*
 Copies sample `index` into `out`.

 # Safety
 `traj` must be a live handle; `out` must be writable.
 */
enum HeomStatus heom_trajectory_sample(const struct HeomTrajectory *traj,
                                       size_t index,
                                       struct HeomSample *out);

/*
 # Safety
 `traj` must come from this library and not be used afterwards. NULL is ignored.
 */
void heom_trajectory_free(struct HeomTrajectory *traj);

/*
 Runs the control iteration described by the `[oct]` section.

 # Safety
 `config` must be a live handle; `out` must be writable.
 */
enum HeomStatus heom_optimize(const struct HeomConfig *config, struct HeomControl **out);

/*
 Length of the fidelity history (guess included); 0 for NULL.

 # Safety
 `control` must be NULL or a live handle.
 */
size_t heom_control_history_len(const struct HeomControl *control);

/*
 Fidelity after iteration `index` (0 is the guess field).

 # Safety
 `control` must be a live handle; `out` must be writable.
 */
enum HeomStatus heom_control_fidelity(const struct HeomControl *control, size_t index, double *out);

/*
 Number of samples in the optimized field; 0 for NULL.

 # Safety
 `control` must be NULL or a live handle.
 */
size_t heom_control_field_len(const struct HeomControl *control);

/*
 Copies the optimized field (a.u., one value per interval of `dt_au`)
 into `buf`, which must hold at least `heom_control_field_len` values.

 # Safety
 `control` must be a live handle; `buf` must be writable for `capacity`
 doubles; `dt_au` may be NULL.
 */
enum HeomStatus heom_control_field(const struct HeomControl *control,
                                   double *buf,
                                   size_t capacity,
                                   double *dt_au);

/*
 # Safety
 `control` must come from this library and not be used afterwards. NULL is ignored.
 */
void heom_control_free(struct HeomControl *control);

/*
 Runs a full pipeline and writes its data files and manifest to `out_dir`.

 # Safety
 `config` must be a live handle; `out_dir` a NUL-terminated path.
 */
enum HeomStatus heom_run(const struct HeomConfig *config,
                         enum HeomMode mode,
                         const char *out_dir,
                         bool witness);

#endif  /* HEOM_H */
