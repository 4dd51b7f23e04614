#ifndef CWBENCH_H
#define CWBENCH_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Marks an unused field of [`CwFormulaParams`].
 */
#define CW_UNSET INT64_MIN

typedef enum CwStatus {
  CW_OK = 0,
  CW_NULL_POINTER = 1,
  CW_INVALID_UTF8 = 2,
  /**
   * An index, dimension or parameter out of range.
   */
  CW_DOMAIN = 3,
  /**
   * Malformed JSON or an unknown id.
   */
  CW_PARSE = 4,
  /**
   * The body failed its convexity certificate.
   */
  CW_CONVEXITY = 5,
  /**
   * A check ran and at least one report has verdict `fail`.
   */
  CW_CHECK_FAILED = 6,
  CW_PANIC = 7,
} CwStatus;

/**
 * Opaque convex body.
 */
typedef struct CwBody CwBody;

/**
 * Opaque symbolic formula.
 */
typedef struct CwFormula CwFormula;

/**
 * Formula indices; set the ones the formula reads, the rest to `CW_UNSET`.
 */
typedef struct CwFormulaParams {
  int64_t n;
  int64_t r;
  int64_t l;
  int64_t i;
  int64_t s;
  int64_t q;
  int64_t t;
} CwFormulaParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread; valid until the next call.
 */
const char *cw_last_error_message(void);

/**
 * Library version, a static string.
 */
const char *cw_version(void);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void cw_string_free(char *s);

/**
 * Builds a body from a JSON spec. A ball without `dim` gets `default_dim`.
 *
 * # Safety
 * `json` must be a nul-terminated string; `out` must be writable.
 */
enum CwStatus cw_body_from_json(const char *json, size_t default_dim, struct CwBody **out);

/**
 * # Safety
 * `body` must come from this library and not have been freed. Null is ignored.
 */
void cw_body_free(struct CwBody *body);

/**
 * Ambient dimension, 0 for null.
 *
 * # Safety
 * `body` must be null or a live handle.
 */
size_t cw_body_dim(const struct CwBody *body);

/**
 * Writes the body's JSON spec.
 *
 * # Safety
 * `body` must be a live handle; `out` must be writable.
 */
enum CwStatus cw_body_to_json(const struct CwBody *body, char **out);

/**
 * `i`-th mean curvature integral on the default grid.
 *
 * # Safety
 * `body` must be a live handle; `out` must be writable.
 */
enum CwStatus cw_body_mean_curvature_integral(const struct CwBody *body, size_t i, double *out);

/**
 * # Safety
 * `body` must be a live handle; `out` must be writable.
 */
enum CwStatus cw_body_volume(const struct CwBody *body, double *out);

/**
 * Width in the unit direction `u` of length `len` (the body's dimension).
 *
 * # Safety
 * `body` must be a live handle, `u` must point to `len` doubles and `out` must be writable.
 */
enum CwStatus cw_body_width(const struct CwBody *body, const double *u, size_t len, double *out);

/**
 * Outer parallel body at distance `rho`, as a new handle.
 *
 * # Safety
 * `body` must be a live handle; `out` must be writable.
 */
enum CwStatus cw_body_parallel(const struct CwBody *body, double rho, struct CwBody **out);

/**
 * Builds the formula `id` (e.g. `"thm-1.1"`).
 *
 * # Safety
 * `id` must be a nul-terminated string, `params` readable and `out` writable.
 */
enum CwStatus cw_formula_build(const char *id,
                               const struct CwFormulaParams *params,
                               struct CwFormula **out);

/**
 * Canonical string of the formula.
 *
 * # Safety
 * `formula` must be a live handle; `out` must be writable.
 */
enum CwStatus cw_formula_to_string(const struct CwFormula *formula, char **out);

/**
 * 1 if the formulas are identical polynomials, 0 if not, -1 if either is null.
 *
 * # Safety
 * Both arguments must be null or live handles.
 */
int32_t cw_formula_equal(const struct CwFormula *a, const struct CwFormula *b);

/**
 * # Safety
 * `formula` must come from this library and not have been freed. Null is ignored.
 */
void cw_formula_free(struct CwFormula *formula);

/**
 * Runs one check with a flat JSON config and writes its JSONL report. The
 * report is written even when the status is `CW_CHECK_FAILED`.
 *
 * # Safety
 * `id` and `config_json` must be nul-terminated strings; `out` must be writable.
 */
enum CwStatus cw_run_check(const char *id, const char *config_json, char **out);

/**
 * Runs a named suite on `threads` workers (0: all cores) and writes its JSONL reports.
 *
 * # Safety
 * `suite` must be a nul-terminated string; `out` must be writable.
 */
enum CwStatus cw_run_suite(const char *suite, size_t threads, char **out);

/**
 * Area of the unit sphere `S^m`: canonical exact form and its double value.
 * Either out-pointer may be null.
 *
 * # Safety
 * Non-null out-pointers must be writable.
 */
enum CwStatus cw_sphere_area(int64_t m, char **exact, double *value);

/**
 * Measure of the Grassmannian of `r`-planes in `n`-space, as in [`cw_sphere_area`].
 *
 * # Safety
 * Non-null out-pointers must be writable.
 */
enum CwStatus cw_grassmann_measure(int64_t n, int64_t r, char **exact, double *value);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CWBENCH_H */
