#ifndef POLICYLENS_H
#define POLICYLENS_H

/* Generated by cbindgen; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum PlLanguage {
  PL_LANGUAGE_DE = 0,
  PL_LANGUAGE_EN = 1,
  PL_LANGUAGE_FR = 2,
  PL_LANGUAGE_IT = 3,
  PL_LANGUAGE_UNKNOWN = 4,
} PlLanguage;

/**
 * Result of every fallible call.
 */
typedef enum PlStatus {
  PL_STATUS_OK = 0,
  PL_STATUS_NULL_POINTER = 1,
  PL_STATUS_INVALID_UTF8 = 2,
  PL_STATUS_INVALID_ARGUMENT = 3,
  PL_STATUS_PARSE = 4,
  PL_STATUS_PANIC = 5,
} PlStatus;

/**
 * Compiled generator dictionary.
 */
typedef struct PlGenerators PlGenerators;

/**
 * Units-by-coders table of categorical values.
 */
typedef struct PlReliability PlReliability;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. Owned by the
 * library and valid until the next call on the same thread.
 */
const char *pl_last_error(void);

/**
 * Library version as a static string.
 */
const char *pl_version(void);

/**
 * Releases a string returned by this library. NULL is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void pl_string_free(char *s);

/**
 * # Safety
 * `text` is a NUL-terminated string; the out pointers are writable.
 */
enum PlStatus pl_detect_language(const char *text, enum PlLanguage *language, double *confidence);

/**
 * # Safety
 * `text` is a NUL-terminated string; `count` is writable.
 */
enum PlStatus pl_word_count(const char *text, uint64_t *count);

/**
 * Pooled two-proportion z-test. `z` is NaN when the pooled proportion is
 * 0 or 1, in which case `p_value` is 1.
 *
 * # Safety
 * The out pointers are writable.
 */
enum PlStatus pl_two_prop_z(uint64_t successes1,
                            uint64_t n1,
                            uint64_t successes2,
                            uint64_t n2,
                            double *z,
                            double *p_value);

/**
 * Benjamini-Hochberg over `len` p-values. `reject` and `q_values` receive
 * `len` entries in input order; any of the arrays may be NULL when `len`
 * is 0.
 *
 * # Safety
 * Each non-NULL array holds at least `len` elements.
 */
enum PlStatus pl_bh_fdr(const double *p_values,
                        size_t len,
                        double alpha,
                        bool *reject,
                        double *q_values);

/**
 * # Safety
 * `h` is writable.
 */
enum PlStatus pl_cohens_h(double p1, double p2, double *h);

/**
 * Minimum detectable effect as Cohen's h and as a shift from `baseline`.
 *
 * # Safety
 * The out pointers are writable.
 */
enum PlStatus pl_mde(uint64_t n1,
                     uint64_t n2,
                     double alpha,
                     double power,
                     double baseline,
                     double *mde_h,
                     double *mde_pp);

/**
 * Creates an empty matrix; at least two coders are required.
 *
 * # Safety
 * `units` and `coders` point to arrays of NUL-terminated strings of the
 * given lengths; `handle` is writable.
 */
enum PlStatus pl_reliability_new(const char *const *units,
                                 size_t n_units,
                                 const char *const *coders,
                                 size_t n_coders,
                                 struct PlReliability **handle);

/**
 * Records the value `coder` gave `unit`, replacing any earlier value.
 *
 * # Safety
 * `handle` comes from [`pl_reliability_new`]; the strings are NUL-terminated.
 */
enum PlStatus pl_reliability_set(struct PlReliability *handle,
                                 const char *unit,
                                 const char *coder,
                                 const char *value);

/**
 * Nominal Krippendorff's alpha of the current matrix.
 *
 * # Safety
 * `handle` comes from [`pl_reliability_new`]; `alpha` is writable.
 */
enum PlStatus pl_reliability_alpha(const struct PlReliability *handle, double *alpha);

/**
 * # Safety
 * `handle` comes from [`pl_reliability_new`] and is not used afterwards.
 */
void pl_reliability_free(struct PlReliability *handle);

/**
 * Compiles a generator dictionary from JSON; NULL selects the bundled one.
 *
 * # Safety
 * `json` is NULL or NUL-terminated; `handle` is writable.
 */
enum PlStatus pl_generators_new(const char *json, struct PlGenerators **handle);

/**
 * Generator ids found in `text`, as a sorted JSON array of strings.
 *
 * # Safety
 * `handle` comes from [`pl_generators_new`]; `text` is NUL-terminated;
 * `json_out` is writable and receives a string for [`pl_string_free`].
 */
enum PlStatus pl_generators_detect(const struct PlGenerators *handle,
                                   const char *text,
                                   char **json_out);

/**
 * # Safety
 * `handle` comes from [`pl_generators_new`] and is not used afterwards.
 */
void pl_generators_free(struct PlGenerators *handle);

/**
 * Law mentions in `text` under the bundled term dictionaries, as JSON with
 * `doc_id`, `mentions` and `matched_terms`.
 *
 * # Safety
 * `doc_id` and `text` are NUL-terminated; `json_out` is writable.
 */
enum PlStatus pl_mentions_json(const char *doc_id, const char *text, char **json_out);

/**
 * `text` with e-mail addresses, URLs, IBANs and phone numbers replaced by
 * placeholders.
 *
 * # Safety
 * `text` is NUL-terminated; `text_out` is writable.
 */
enum PlStatus pl_anonymize(const char *text, char **text_out);

/**
 * Applies the screening cascade to one annotation record given as JSON.
 * The result is `{"record": ..., "warnings": [...]}`.
 *
 * # Safety
 * `json` is NUL-terminated; `json_out` is writable.
 */
enum PlStatus pl_normalize_record_json(const char *json, char **json_out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* POLICYLENS_H */
