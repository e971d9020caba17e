#ifndef SQUERY_H
#define SQUERY_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Machine serialization format.
 */
typedef enum SqFormat {
  SQ_FORMAT_JSON = 0,
  SQ_FORMAT_DOT = 1,
} SqFormat;

typedef enum SqStatus {
  SQ_STATUS_OK = 0,
  /**
   * The query ran and found no match.
   */
  SQ_STATUS_NO_MATCH = 1,
  SQ_STATUS_NULL_ARGUMENT = 2,
  SQ_STATUS_INVALID_UTF8 = 3,
  SQ_STATUS_IO = 4,
  SQ_STATUS_PARSE = 5,
  SQ_STATUS_COMPILE = 6,
  SQ_STATUS_TRACE = 7,
  SQ_STATUS_MAP = 8,
  SQ_STATUS_CONFIG = 9,
  SQ_STATUS_EVAL = 10,
  SQ_STATUS_TIMEOUT = 11,
  SQ_STATUS_PANIC = 12,
} SqStatus;

/**
 * Road map.
 */
typedef struct SqMap SqMap;

/**
 * Compiled scenario program.
 */
typedef struct SqProgram SqProgram;

/**
 * Validated label trace.
 */
typedef struct SqTrace SqTrace;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Parse and compile a program from source text.
 *
 * # Safety
 * `source` must be a NUL-terminated string; `out` must be writable.
 */
enum SqStatus sq_program_from_source(const char *source, struct SqProgram **out);

/**
 * Parse and compile a program file.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum SqStatus sq_program_load(const char *path, struct SqProgram **out);

/**
 * # Safety
 * `program` must be null or a handle from this library, not yet freed.
 */
void sq_program_free(struct SqProgram *program);

/**
 * Parse and validate a trace from JSON text.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum SqStatus sq_trace_from_json(const char *json, struct SqTrace **out);

/**
 * Load and validate a trace file.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum SqStatus sq_trace_load(const char *path, struct SqTrace **out);

/**
 * # Safety
 * `trace` must be null or a handle from this library, not yet freed.
 */
void sq_trace_free(struct SqTrace *trace);

/**
 * Parse and validate a road map from JSON text.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum SqStatus sq_map_from_json(const char *json, struct SqMap **out);

/**
 * Load and validate a road map file.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum SqStatus sq_map_load(const char *path, struct SqMap **out);

/**
 * The default straight two-lane road.
 *
 * # Safety
 * `out` must be writable.
 */
enum SqStatus sq_map_default(struct SqMap **out);

/**
 * # Safety
 * `map` must be null or a handle from this library, not yet freed.
 */
void sq_map_free(struct SqMap *map);

/**
 * Decide whether the trace matches the program for some window of
 * `min_duration` frames. Returns `SQ_STATUS_OK` on a match and
 * `SQ_STATUS_NO_MATCH` otherwise. A null `map` selects the default road;
 * a non-positive `timeout_secs` disables the timeout.
 *
 * # Safety
 * Handles must be valid or null (null `program`/`trace` is an error).
 */
enum SqStatus sq_query(const struct SqProgram *program,
                       const struct SqTrace *trace,
                       const struct SqMap *map,
                       size_t min_duration,
                       double timeout_secs);

/**
 * Like [`sq_query`], writing the full result as JSON to `out_json`.
 * Returns `SQ_STATUS_OK` whenever the query completed.
 *
 * # Safety
 * Handles must be valid or null; `out_json` must be writable.
 */
enum SqStatus sq_query_json(const struct SqProgram *program,
                            const struct SqTrace *trace,
                            const struct SqMap *map,
                            size_t min_duration,
                            double timeout_secs,
                            char **out_json);

/**
 * Serialize the program's state machines.
 *
 * # Safety
 * `program` must be a valid handle; `out` must be writable.
 */
enum SqStatus sq_compile_emit(const struct SqProgram *program, enum SqFormat format, char **out);

/**
 * # Safety
 * `s` must be null or a string returned by this library, not yet freed.
 */
void sq_string_free(char *s);

/**
 * Message of the last failed call on this thread, or null. The pointer
 * stays valid until the next call into this library on the same thread.
 */
const char *sq_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *sq_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SQUERY_H */
