#ifndef ARGOS_H
#define ARGOS_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum ArgosDecidedBy {
  ARGOS_DECIDED_BY_SAT = 0,
  ARGOS_DECIDED_BY_SELF_CONSISTENCY = 1,
  ARGOS_DECIDED_BY_FALLBACK = 2,
} ArgosDecidedBy;

typedef enum ArgosStatus {
  ARGOS_STATUS_OK = 0,
  ARGOS_STATUS_NULL_ARGUMENT = 1,
  ARGOS_STATUS_INVALID_UTF8 = 2,
  ARGOS_STATUS_PARSE_ERROR = 3,
  ARGOS_STATUS_BACKEND_ERROR = 4,
  ARGOS_STATUS_ENGINE_ERROR = 5,
  ARGOS_STATUS_IO_ERROR = 6,
  ARGOS_STATUS_PANIC = 7,
} ArgosStatus;

typedef struct ArgosBackend ArgosBackend;

typedef struct ArgosProblem ArgosProblem;

typedef struct ArgosResult ArgosResult;

// Engine knobs. Start from [`argos_config_default`] and override fields.
typedef struct ArgosConfig {
  // Chain-of-thought samples per vote.
  size_t k;
  double gamma0;
  double alpha;
  double tau;
  // Chain-of-thought request cap; negative means no cap.
  int64_t max_cot;
  size_t max_candidates_per_pair;
  uint64_t seed;
  bool self_consistency;
} ArgosConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message describing the most recent failure on this thread, or NULL.
// The pointer stays valid until the next failing call on the same thread;
// do not free it.
const char *argos_last_error(void);

struct ArgosConfig argos_config_default(void);

// Parse a problem document.
//
// # Safety
// `json` must be a NUL-terminated string and `out` a valid pointer to
// writable storage for one pointer.
enum ArgosStatus argos_problem_from_json(const char *json, struct ArgosProblem **out);

// # Safety
// `problem` must be NULL or a pointer from [`argos_problem_from_json`] that
// has not been freed.
void argos_problem_free(struct ArgosProblem *problem);

// Oracle backend over a knowledge base document (the `kb.json` format).
//
// # Safety
// `kb_json` must be a NUL-terminated string and `out` a valid pointer to
// writable storage for one pointer.
enum ArgosStatus argos_oracle_from_json(const char *kb_json,
                                        size_t reasoning_depth,
                                        double noise,
                                        uint64_t seed,
                                        struct ArgosBackend **out);

// Backend talking to an OpenAI-style completions endpoint.
//
// # Safety
// `endpoint` and `model` must be NUL-terminated strings; `api_key` may be
// NULL. `out` must be a valid pointer to writable storage for one pointer.
enum ArgosStatus argos_wire_new(const char *endpoint,
                                const char *model,
                                const char *api_key,
                                struct ArgosBackend **out);

// # Safety
// `backend` must be NULL or a pointer from a backend constructor that has
// not been freed.
void argos_backend_free(struct ArgosBackend *backend);

// Solve one problem. `config` may be NULL for defaults.
//
// # Safety
// `problem` and `backend` must be live handles, `config` NULL or a valid
// pointer, and `out` a valid pointer to writable storage for one pointer.
enum ArgosStatus argos_solve(const struct ArgosProblem *problem,
                             const struct ArgosBackend *backend,
                             const struct ArgosConfig *config,
                             struct ArgosResult **out);

// # Safety
// `result` must be a live handle from [`argos_solve`].
bool argos_result_verdict(const struct ArgosResult *result);

// # Safety
// `result` must be a live handle from [`argos_solve`].
enum ArgosDecidedBy argos_result_decided_by(const struct ArgosResult *result);

// # Safety
// `result` must be a live handle from [`argos_solve`].
double argos_result_confidence(const struct ArgosResult *result);

// # Safety
// `result` must be a live handle from [`argos_solve`].
size_t argos_result_clause_count(const struct ArgosResult *result);

// # Safety
// `result` must be a live handle from [`argos_solve`].
size_t argos_result_cot_calls(const struct ArgosResult *result);

// Text of accepted clause `index`, or NULL when out of range. Free with
// [`argos_string_free`].
//
// # Safety
// `result` must be a live handle from [`argos_solve`].
char *argos_result_clause(const struct ArgosResult *result, size_t index);

// One-line summary, e.g. `False (sat, 3 clauses)`. Free with
// [`argos_string_free`].
//
// # Safety
// `result` must be a live handle from [`argos_solve`].
char *argos_result_summary(const struct ArgosResult *result);

// The run's trace, one JSON event per line. Free with
// [`argos_string_free`].
//
// # Safety
// `result` must be a live handle from [`argos_solve`].
char *argos_result_trace_jsonl(const struct ArgosResult *result);

// # Safety
// `result` must be NULL or a live handle from [`argos_solve`].
void argos_result_free(struct ArgosResult *result);

// # Safety
// `s` must be NULL or a string returned by this library and not yet freed.
void argos_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ARGOS_H */
