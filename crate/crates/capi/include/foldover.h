#ifndef FOLDOVER_H
#define FOLDOVER_H

/* Generated by cbindgen from foldover-capi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible call.
 */
typedef enum {
  FO_STATUS_OK = 0,
  FO_STATUS_INVALID_ARG = 1,
  FO_STATUS_PARSE = 2,
  FO_STATUS_SINGULAR = 3,
  FO_STATUS_INVALID_DESIGN = 4,
  FO_STATUS_IO = 5,
  FO_STATUS_ANALYSIS = 6,
  FO_STATUS_NULL_POINTER = 7,
  FO_STATUS_UTF8 = 8,
  FO_STATUS_PANIC = 9,
} FoStatus;

/**
 * Opaque design handle (a foldover base plus optional augmented rows).
 */
typedef struct FoDesign FoDesign;

/**
 * Degrees-of-freedom summary.
 */
typedef struct {
  uintptr_t fake_factor;
  uintptr_t pure_error;
  uintptr_t lack_of_fit;
  uintptr_t total;
} FoDofSummary;

/**
 * Expected-confidence-interval evaluation of a design's foldover base.
 */
typedef struct {
  double eci;
  uintptr_t g;
  double c_value;
  double t_value;
  double alias_term;
  double avg_sqrt_half_variance;
} FoEciReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *fo_version(void);

/**
 * Copies the last error message for this thread into `buf` (truncated,
 * always NUL-terminated when `len > 0`). Returns the full message length.
 *
 * # Safety
 * `buf` must point to `len` writable bytes, or be null (to query length).
 */
uintptr_t fo_last_error_message(char *buf, uintptr_t len);

/**
 * Reads a design from `<stem>.csv` + `<stem>.json` (either path accepted).
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be a valid pointer.
 */
FoStatus fo_design_read(const char *path, FoDesign **out);

/**
 * Writes a design as `<stem>.csv` + `<stem>.json`.
 *
 * # Safety
 * `design` must be a live handle; `path` a NUL-terminated string.
 */
FoStatus fo_design_write(const FoDesign *design, const char *path);

/**
 * Releases a design handle. Null is ignored.
 *
 * # Safety
 * `design` must have come from this library and not been freed before.
 */
void fo_design_free(FoDesign *design);

/**
 * Dimensions of a design: total runs, factors, and augmented-run count.
 *
 * # Safety
 * All pointers must be valid; output pointers may be null to skip a field.
 */
FoStatus fo_design_dims(const FoDesign *design,
                        uintptr_t *n_runs,
                        uintptr_t *m,
                        uintptr_t *n_augmented);

/**
 * Reads one design entry (levels -1, 0, +1), 0-based indices.
 *
 * # Safety
 * Pointers must be valid.
 */
FoStatus fo_design_entry(const FoDesign *design, uintptr_t run, uintptr_t factor, int8_t *out);

/**
 * Degrees-of-freedom summary under a model (0=main, 1=2fi, 2=quad).
 *
 * # Safety
 * Pointers must be valid.
 */
FoStatus fo_design_dof(const FoDesign *design, int32_t model, FoDofSummary *out);

/**
 * Expected-confidence-interval criterion of the design's foldover base.
 *
 * # Safety
 * Pointers must be valid.
 */
FoStatus fo_design_eci(const FoDesign *design, double alpha, int32_t model, FoEciReport *out);

/**
 * Searches for a foldover design minimizing the ECI criterion.
 * `quad_all` nonzero marks every factor quadratic-capable.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
FoStatus fo_generate(uintptr_t n,
                     uintptr_t m,
                     uintptr_t n0,
                     uintptr_t forced_replicates,
                     double alpha,
                     int32_t model,
                     int32_t quad_all,
                     uintptr_t starts,
                     uint64_t seed,
                     FoDesign **out);

/**
 * Builds a half design directly from a Hadamard matrix and returns its
 * foldover. Scheme codes 0-3 select the n/2 mod 4 construction.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
FoStatus fo_construct(int32_t scheme, uintptr_t n, uintptr_t m, FoDesign **out);

/**
 * Appends `n_add` Bayesian-A optimal runs to a pure foldover design,
 * returning a new handle. The input handle is untouched.
 *
 * # Safety
 * Pointers must be valid.
 */
FoStatus fo_augment(const FoDesign *design,
                    uintptr_t n_add,
                    double tau2,
                    int32_t model,
                    uintptr_t starts,
                    uint64_t seed,
                    FoDesign **out);

/**
 * Analyzes experimental data with the two-stage procedure and returns the
 * JSON report. The returned string must be freed with `fo_string_free`.
 * `criterion` accepts the same spellings as the CLI (`mbic`, `bic`, ...).
 *
 * # Safety
 * Pointers must be valid; `y` must hold one response per design run.
 */
FoStatus fo_analyze_json(const FoDesign *design,
                         const double *y,
                         uintptr_t y_len,
                         double alpha,
                         int32_t model,
                         const char *criterion,
                         char **out);

/**
 * Frees a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must have been returned by this library and not freed before.
 */
void fo_string_free(char *s);

/**
 * Fills `buf` (row-major, `order`·`order` entries) with a normalized
 * Hadamard matrix.
 *
 * # Safety
 * `buf` must point to at least `buf_len` writable bytes.
 */
FoStatus fo_hadamard(uintptr_t order, int8_t *buf, uintptr_t buf_len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FOLDOVER_H */
