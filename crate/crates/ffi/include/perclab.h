#ifndef PERCLAB_H
#define PERCLAB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stddef.h>
#include <stdint.h>

typedef enum PerclabStatus {
  PERCLAB_STATUS_OK = 0,
  PERCLAB_STATUS_NULL_POINTER = 1,
  PERCLAB_STATUS_INVALID_ARGUMENT = 2,
  PERCLAB_STATUS_INVALID_REGION = 3,
  PERCLAB_STATUS_OUTSIDE_WINDOW = 4,
  PERCLAB_STATUS_DOMAIN = 5,
  PERCLAB_STATUS_CONFIG = 6,
  PERCLAB_STATUS_INTERNAL = 7,
} PerclabStatus;

/**
 * Opaque lattice region.
 */
typedef struct PerclabRegion PerclabRegion;

/**
 * Message of the last failure on this thread; empty if none. The pointer is
 * owned by the library and valid until the next failing call.
 */
const char *perclab_last_error(void);

/**
 * # Safety
 * `out` must be valid for writes.
 */
enum PerclabStatus perclab_region_new(double mesh,
                                      double halfwidth,
                                      double anchor_re,
                                      double anchor_im,
                                      struct PerclabRegion **out);

/**
 * # Safety
 * `region` must come from [`perclab_region_new`] and not be used afterwards.
 */
void perclab_region_free(struct PerclabRegion *region);

/**
 * # Safety
 * `region` must be a live region and `out` valid for writes.
 */
enum PerclabStatus perclab_region_len(const struct PerclabRegion *region, uintptr_t *out);

/**
 * Site whose hexagon contains `re + i·im`.
 *
 * # Safety
 * `region` must be a live region and `out` valid for writes.
 */
enum PerclabStatus perclab_region_site_of_point(const struct PerclabRegion *region,
                                                double re,
                                                double im,
                                                uint32_t *out);

/**
 * # Safety
 * `out` must be valid for writes.
 */
enum PerclabStatus perclab_k_f(double *out);

/**
 * # Safety
 * `out` must be valid for writes.
 */
enum PerclabStatus perclab_hyp2f1(double a, double b, double c, double z, double *out);

/**
 * # Safety
 * `out` must be valid for writes.
 */
enum PerclabStatus perclab_psi_factor(double u1,
                                      double s,
                                      double u2,
                                      double w_re,
                                      double w_im,
                                      double *out);

/**
 * # Safety
 * `out` must be valid for writes.
 */
enum PerclabStatus perclab_cardy_crossing(double x1, double x2, double x3, double x4, double *out);

/**
 * Runs an estimation plan given as JSON (the `simulate` config schema) and
 * returns `estimates.csv` as a string. `workers = 0` picks the default.
 *
 * # Safety
 * `plan_json` must be a nul-terminated string and `out_csv` valid for writes.
 * The returned string must be released with [`perclab_string_free`].
 */
enum PerclabStatus perclab_run_estimates(const char *plan_json, uint32_t workers, char **out_csv);

/**
 * # Safety
 * `s` must come from this library and not be used afterwards.
 */
void perclab_string_free(char *s);

#endif  /* PERCLAB_H */
