/* SPDX-License-Identifier: Apache-2.0 */

#ifndef HOFA_H
#define HOFA_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum HofaStatus {
  HOFA_STATUS_OK = 0,
  HOFA_STATUS_INVALID_ARGUMENT = 1,
  HOFA_STATUS_OUT_OF_RANGE = 2,
  HOFA_STATUS_EMPTY_DOMAIN = 3,
  HOFA_STATUS_INSUFFICIENT_RANGE = 4,
  HOFA_STATUS_OVERFLOW = 5,
  HOFA_STATUS_NOT_ELIGIBLE = 6,
  HOFA_STATUS_SIZE_LIMIT = 7,
  HOFA_STATUS_PARSE = 8,
  HOFA_STATUS_INTERNAL = 9,
  HOFA_STATUS_NULL_POINTER = 10,
  HOFA_STATUS_INVALID_UTF8 = 11,
  HOFA_STATUS_BUFFER_TOO_SMALL = 12,
  HOFA_STATUS_PANIC = 13,
} HofaStatus;

/**
 * Parsed multiplicative function.
 */
typedef struct HofaSpec HofaSpec;

/**
 * Values `f(1), ..., f(N)`.
 */
typedef struct HofaTable HofaTable;

/**
 * `x = k l0 (m + l1 n)(m + l2 n)`, `y = sign_y k l0 (m + l3 n)(m + l4 n)`,
 * `lambda = k (lambda[0] m^2 + lambda[1] m n + lambda[2] n^2)`.
 */
typedef struct HofaFamily {
  int64_t ell[5];
  int8_t sign_y;
  int64_t lambda[3];
} HofaFamily;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failing call on this thread, or null after a
 * successful one. Valid until the next call into this library.
 */
const char *hofa_last_error(void);

/**
 * Library version as a static string.
 */
const char *hofa_version(void);

/**
 * Parse a spec string such as `liouville` or `chi:4:1`.
 *
 * # Safety
 * `text` must be a NUL-terminated string and `out` a valid pointer.
 */
enum HofaStatus hofa_spec_parse(const char *text, struct HofaSpec **out);

/**
 * # Safety
 * `spec` must come from [`hofa_spec_parse`] and not be freed twice.
 */
void hofa_spec_free(struct HofaSpec *spec);

/**
 * Tabulate `spec` on `[1, n]`.
 *
 * # Safety
 * `spec` must be a live handle and `out` a valid pointer.
 */
enum HofaStatus hofa_table_new(const struct HofaSpec *spec, size_t n, struct HofaTable **out);

/**
 * Build a table from `n` real and imaginary parts.
 *
 * # Safety
 * `re` and `im` must each point to `n` readable doubles.
 */
enum HofaStatus hofa_table_from_values(const double *re,
                                       const double *im,
                                       size_t n,
                                       struct HofaTable **out);

/**
 * Number of entries, or 0 for a null handle.
 *
 * # Safety
 * `table` must be null or a live handle.
 */
size_t hofa_table_len(const struct HofaTable *table);

/**
 * Copy the values into `re` and `im`, which hold `cap` doubles each.
 *
 * # Safety
 * `table` must be a live handle; `re` and `im` must have room for `cap`
 * doubles.
 */
enum HofaStatus hofa_table_values(const struct HofaTable *table,
                                  double *re,
                                  double *im,
                                  size_t cap);

/**
 * # Safety
 * `table` must come from this library and not be freed twice.
 */
void hofa_table_free(struct HofaTable *table);

/**
 * `||f||_{U^s[N]}` of the table. `nstar` of 0 picks the default modulus.
 *
 * # Safety
 * `table` must be a live handle and `out` a valid pointer.
 */
enum HofaStatus hofa_gowers_norm(const struct HofaTable *table,
                                 uint32_t s,
                                 size_t nstar,
                                 double *out);

/**
 * Whether the form with coefficients `(a, b, c, d, e, f)` is eligible.
 *
 * # Safety
 * `coeffs` must point to 6 readable integers and `out` must be valid.
 */
enum HofaStatus hofa_form_is_eligible(const int64_t *coeffs, bool *out);

/**
 * Parametric family of solutions for an eligible form.
 *
 * # Safety
 * `coeffs` must point to 6 readable integers and `out` must be valid.
 */
enum HofaStatus hofa_form_parametrize(const int64_t *coeffs, struct HofaFamily *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HOFA_H */
