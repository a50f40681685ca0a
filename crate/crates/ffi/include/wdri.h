#ifndef WDRI_H
#define WDRI_H

/* Generated by cbindgen from the wdri-ffi crate; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status code returned by every fallible function.
 */
typedef enum WdriStatus {
  WDRI_STATUS_OK = 0,
  /**
   * invalid argument, shape mismatch, or malformed input file
   */
  WDRI_STATUS_INVALID_INPUT = 1,
  /**
   * CFL violation or a diverged wavefield
   */
  WDRI_STATUS_NUMERICAL = 2,
  /**
   * file-system error
   */
  WDRI_STATUS_IO = 3,
  /**
   * null pointer or invalid UTF-8 from the caller
   */
  WDRI_STATUS_BAD_POINTER = 4,
} WdriStatus;

/**
 * Opaque velocity model handle.
 */
typedef struct WdriModel WdriModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copy the most recent error message (UTF-8, NUL-terminated, truncated to
 * `cap`) into `buf`. Returns the full message length in bytes.
 * # Safety
 * `buf` must be null or point to at least `cap` writable bytes.
 */
uintptr_t wdri_last_error(char *buf, uintptr_t cap);

/**
 * Load a model grid file (velocity or slowness-squared kind).
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be null or point to
 * writable storage for one pointer. Null pointers are reported as errors,
 * never dereferenced.
 */
enum WdriStatus wdri_model_read(const char *path, struct WdriModel **out);

/**
 * Write a model as a velocity grid file.
 * # Safety
 * `model` must be null or a handle previously returned by this library;
 * `path` must be a NUL-terminated string.
 */
enum WdriStatus wdri_model_write(const struct WdriModel *model, const char *path);

/**
 * Build the default Camembert benchmark model (4.8 x 6 km, 35.5 m spacing,
 * 4000 m/s background with a 4600 m/s circular anomaly).
 * # Safety
 * `out` must be null or point to writable storage for one pointer.
 */
enum WdriStatus wdri_model_camembert(struct WdriModel **out);

/**
 * Build the default checkerboard benchmark model (101 x 101 nodes at 20 m,
 * 1500 m/s background with 4000 m/s tiles of 200 m).
 * # Safety
 * `out` must be null or point to writable storage for one pointer.
 */
enum WdriStatus wdri_model_checkerboard(struct WdriModel **out);

/**
 * Build a homogeneous model on an nx x nz grid.
 * # Safety
 * `out` must be null or point to writable storage for one pointer.
 */
enum WdriStatus wdri_model_homogeneous(uintptr_t nx,
                                       uintptr_t nz,
                                       double dx,
                                       double dz,
                                       double velocity,
                                       struct WdriModel **out);

/**
 * # Safety
 * `model` must be null or a handle previously returned by this library
 * that has not already been freed.
 */
void wdri_model_free(struct WdriModel *model);

/**
 * Grid shape and spacing of a model.
 * # Safety
 * `model` must be null or a live handle; each output pointer must be null
 * or point to writable storage of the corresponding type.
 */
enum WdriStatus wdri_model_shape(const struct WdriModel *model,
                                 uintptr_t *nx,
                                 uintptr_t *nz,
                                 double *dx,
                                 double *dz);

/**
 * Copy the velocity field (m/s) into `buf`, z-fastest, `nx*nz` doubles.
 * # Safety
 * `model` must be null or a live handle; `buf` must be null or point to at
 * least `len` writable doubles.
 */
enum WdriStatus wdri_model_velocity(const struct WdriModel *model, double *buf, uintptr_t len);

/**
 * Root-mean-square velocity difference between two models on the same grid.
 * # Safety
 * `a` and `b` must be null or live handles; `out` must be null or point to
 * a writable double.
 */
enum WdriStatus wdri_model_rmse(const struct WdriModel *a, const struct WdriModel *b, double *out);

/**
 * Simulate one shot with a Ricker source of peak frequency `f_peak` and
 * write the receiver traces into `traces` (nt*nr doubles, receiver-fastest:
 * index t*nr + r). `receivers_xz` holds nr (x, z) pairs.
 * # Safety
 * `model` must be null or a live handle; `receivers_xz` must be null or
 * point to `2 * nr` readable doubles; `traces` must be null or point to
 * `nt * nr` writable doubles.
 */
enum WdriStatus wdri_simulate_shot(const struct WdriModel *model,
                                   uintptr_t nt,
                                   double dt,
                                   double f_peak,
                                   double source_x,
                                   double source_z,
                                   const double *receivers_xz,
                                   uintptr_t nr,
                                   double *traces);

/**
 * Largest stable time step for a model (0.9 CFL safety factor).
 * # Safety
 * `model` must be null or a live handle; `out` must be null or point to a
 * writable double.
 */
enum WdriStatus wdri_stable_dt(const struct WdriModel *model, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* WDRI_H */
