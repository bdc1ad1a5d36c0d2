#ifndef ISOLAB_H
#define ISOLAB_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result codes of every exported function.
typedef enum IsolabStatus {
  ISOLAB_STATUS_OK = 0,
  // A required pointer argument was null.
  ISOLAB_STATUS_NULL_ARGUMENT = 1,
  // A string argument was not valid UTF-8.
  ISOLAB_STATUS_UTF8 = 2,
  // Malformed or inconsistent input.
  ISOLAB_STATUS_INVALID = 3,
  // Numerical abort (conditioning, degeneracy, step underflow, ...).
  ISOLAB_STATUS_NUMERICAL = 4,
  // A caller-provided buffer is too small.
  ISOLAB_STATUS_BUFFER_TOO_SMALL = 5,
  // The library panicked; this is a bug.
  ISOLAB_STATUS_PANIC = 6,
} IsolabStatus;

// Opaque handle to a Garnier system together with a phase point.
typedef struct IsolabGarnier IsolabGarnier;

// Opaque handle to a tuple of monodromy matrices.
typedef struct IsolabTuple IsolabTuple;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failure on this thread; empty if none. The pointer
// stays valid until the next failing call on the same thread.
const char *isolab_last_error(void);

// Releases a string returned by this library. Null is ignored.
//
// # Safety
// `s` must come from this library and not have been freed.
void isolab_string_free(char *s);

// Parses a tuple from its JSON form
// (`{"n":..,"m":..,"product_constraint":..,"matrices":[..]}`).
//
// # Safety
// `json` must be a NUL-terminated string; `out` must be writable.
enum IsolabStatus isolab_tuple_from_json(const char *json, struct IsolabTuple **out);

// Number of matrices and their size.
//
// # Safety
// `tuple` must be a live handle; `n` and `m` must be writable.
enum IsolabStatus isolab_tuple_shape(const struct IsolabTuple *tuple, size_t *n, size_t *m);

// # Safety
// `tuple` must be null or a handle from [`isolab_tuple_from_json`] that
// has not been freed.
void isolab_tuple_free(struct IsolabTuple *tuple);

// Pure-braid orbit of the tuple's class. Writes the verdict as JSON to
// `out_json` and, through `size` (may be null), the orbit size or 0 when
// the cap was exceeded.
//
// # Safety
// `tuple` must be a live handle; `out_json` must be writable.
enum IsolabStatus isolab_orbit(const struct IsolabTuple *tuple,
                               size_t cap,
                               uint64_t seed,
                               size_t *size,
                               char **out_json);

// Parses `{"config": {"N":..,"theta":[..]}, "phase": {"t":..,"lambda":..,"nu":..}}`.
//
// # Safety
// `json` must be a NUL-terminated string; `out` must be writable.
enum IsolabStatus isolab_garnier_from_json(const char *json, struct IsolabGarnier **out);

// # Safety
// `g` must be null or a live handle from [`isolab_garnier_from_json`].
void isolab_garnier_free(struct IsolabGarnier *g);

// Hamiltonians `H_1, …, H_N` at the handle's phase point, written as
// interleaved real and imaginary parts into `out` (length `2N`).
//
// # Safety
// `g` must be a live handle; `out` must point to `len` writable doubles.
enum IsolabStatus isolab_garnier_hamiltonians(const struct IsolabGarnier *g,
                                              double *out,
                                              size_t len);

// Companion-system monodromy at the handle's phase point, as JSON.
//
// # Safety
// `g` must be a live handle; `out_json` must be writable.
enum IsolabStatus isolab_garnier_monodromy(const struct IsolabGarnier *g, char **out_json);

// Runs a command-line subcommand (`"orbit"`, `"mild"`, ...) on a JSON
// input and returns the same report the `isolab` binary prints.
// `options_json` may be null or `{"tolerances":{..},"seed":..,"cap":..,"depth":..}`.
//
// # Safety
// String arguments must be NUL-terminated (or null where allowed);
// `out_json` must be writable.
enum IsolabStatus isolab_run(const char *command,
                             const char *input_json,
                             const char *options_json,
                             char **out_json);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ISOLAB_H */
