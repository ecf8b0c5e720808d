#ifndef RETURNSET_H
#define RETURNSET_H

/* Generated by cbindgen from returnset-ffi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes mirroring the CLI exit codes.
 */
typedef enum RsStatus {
  RS_STATUS_OK = 0,
  /**
   * Malformed JSON, schema violations, expression syntax errors.
   */
  RS_STATUS_PARSE_ERROR = 1,
  /**
   * The orbit left the torus or hit a vanishing denominator.
   */
  RS_STATUS_UNDEFINED_ORBIT = 2,
  /**
   * A configured resource bound (factorization, term size, height) hit.
   */
  RS_STATUS_RESOURCE_BOUND = 3,
  /**
   * An internal invariant failed; always a bug.
   */
  RS_STATUS_INTERNAL_ERROR = 4,
  /**
   * Null pointer or invalid argument at the boundary.
   */
  RS_STATUS_INVALID_ARGUMENT = 5,
} RsStatus;

/**
 * An instance document behind an opaque handle.
 */
typedef struct RsInstance RsInstance;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * The most recent error message on this thread, as a fresh allocation
 * (release with `rs_string_free`), or NULL when there is none.
 */
char *rs_last_error_message(void);

/**
 * Frees a string allocated by this library. NULL is accepted.
 *
 * # Safety
 * `s` must be a pointer previously returned by this library's
 * string-producing functions and not yet freed.
 */
void rs_string_free(char *s);

/**
 * Library version as a static string; do not free.
 */
const char *rs_version(void);

/**
 * Parses an instance JSON document into a handle.
 *
 * # Safety
 * `json` must be a valid NUL-terminated string; `out` must be a valid
 * pointer to receive the handle.
 */
enum RsStatus rs_instance_parse(const char *json, struct RsInstance **out);

/**
 * Loads a built-in instance by name: "example1", "example2-p2",
 * "example2-p3".
 *
 * # Safety
 * `name` must be a valid NUL-terminated string; `out` must be a valid
 * pointer to receive the handle.
 */
enum RsStatus rs_instance_builtin(const char *name, struct RsInstance **out);

/**
 * Releases an instance handle. NULL is accepted.
 *
 * # Safety
 * `instance` must come from `rs_instance_parse` or `rs_instance_builtin`
 * and must not be used afterwards.
 */
void rs_instance_free(struct RsInstance *instance);

/**
 * Overrides the scan bound n_max of the instance.
 *
 * # Safety
 * `instance` must be a live handle from this library.
 */
enum RsStatus rs_instance_set_n_max(struct RsInstance *instance, uint64_t n_max);

/**
 * Overrides the reproducibility seed of the instance.
 *
 * # Safety
 * `instance` must be a live handle from this library.
 */
enum RsStatus rs_instance_set_seed(struct RsInstance *instance, uint64_t seed);

/**
 * Runs a command ("analyze", "zeroset", "pipeline", "fgab") against the
 * instance and stores the report JSON in `out_report` (release with
 * `rs_string_free`). A report whose recorded assertions contain a failure
 * yields `InternalError` while still producing the report.
 *
 * # Safety
 * `instance` must be a live handle; `command` a valid NUL-terminated
 * string; `out_report` a valid pointer to receive the string.
 */
enum RsStatus rs_run(const struct RsInstance *instance, const char *command, char **out_report);

/**
 * Runs the built-in paper-example verification; stores the report JSON in
 * `out_report` (release with `rs_string_free`).
 *
 * # Safety
 * `out_report` must be a valid pointer to receive the string.
 */
enum RsStatus rs_verify_paper_examples(char **out_report);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RETURNSET_H */
