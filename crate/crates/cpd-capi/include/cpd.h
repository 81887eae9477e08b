#ifndef CPD_H
#define CPD_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes mirroring the CLI exit codes.
 */
typedef enum CpdStatus {
  CpdOk = 0,
  /**
   * Parse or validation failure, bad filter syntax, bad arguments.
   */
  CpdErrModel = 1,
  /**
   * Infeasible position constraints.
   */
  CpdErrInfeasible = 2,
  /**
   * Enumeration stopped by a limit or budget.
   */
  CpdErrIncomplete = 3,
  /**
   * Internal invariant violation (a bug, not a usage error).
   */
  CpdErrInternal = 4,
  /**
   * Null pointer or non-UTF-8 input.
   */
  CpdErrArgument = 5,
} CpdStatus;

/**
 * Opaque handle to a compiled model.
 */
typedef struct CpdModel CpdModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the most recent failure on this thread. Borrowed; valid until
 * the next failing call on the same thread. Never null.
 */
const char *cpd_last_error(void);

/**
 * Parse and validate model text. On success `*out` owns a new handle.
 *
 * # Safety
 * `text` must be a valid NUL-terminated string and `out` a valid pointer.
 */
enum CpdStatus cpd_model_parse(const char *text, struct CpdModel **out);

/**
 * Built-in two-car chain benchmark of `n` transitions per car.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum CpdStatus cpd_model_bench(uint32_t n, struct CpdModel **out);

/**
 * Release a model handle. Null is a no-op.
 *
 * # Safety
 * `m` must be a handle from this library, not yet freed.
 */
void cpd_model_free(struct CpdModel *m);

/**
 * Number of cars in the model.
 *
 * # Safety
 * `m` must be a live handle.
 */
uintptr_t cpd_model_num_cars(const struct CpdModel *m);

/**
 * Number of boxes in the model.
 *
 * # Safety
 * `m` must be a live handle.
 */
uintptr_t cpd_model_num_boxes(const struct CpdModel *m);

/**
 * Canonical text form of the model.
 *
 * # Safety
 * `m` must be a live handle; `out` valid. Free the string with
 * `cpd_string_free`.
 */
enum CpdStatus cpd_model_serialize(const struct CpdModel *m, char **out);

/**
 * DOT graph of the model.
 *
 * # Safety
 * `m` must be a live handle; `out` valid. Free the string with
 * `cpd_string_free`.
 */
enum CpdStatus cpd_model_render_dot(const struct CpdModel *m, char **out);

/**
 * Count all scenarios. `filter` may be null (no filter) or the CLI filter
 * mini-syntax. `*out_complete` reports whether the count is exhaustive.
 *
 * # Safety
 * `m` must be a live handle; `out_count` and `out_complete` valid.
 */
enum CpdStatus cpd_count_scenarios(const struct CpdModel *m,
                                   const char *filter,
                                   uint64_t *out_count,
                                   bool *out_complete);

/**
 * Enumerate all scenarios as one newline-delimited string, one scenario
 * per line (scenes joined by ` | `, cars as `name=index,lane,position`).
 *
 * # Safety
 * `m` must be a live handle; `out` valid. Free the string with
 * `cpd_string_free`.
 */
enum CpdStatus cpd_enumerate_lines(const struct CpdModel *m, const char *filter, char **out);

/**
 * Release a string returned by this library. Null is a no-op.
 *
 * # Safety
 * `s` must come from this library and not be freed twice.
 */
void cpd_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CPD_H */
