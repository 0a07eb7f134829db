#ifndef LSRLONG_H
#define LSRLONG_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum LsrScorerKind {
  LSR_SCORER_KIND_REP_MAX = 0,
  LSR_SCORER_KIND_SCORE_MAX = 1,
  LSR_SCORER_KIND_SUM = 2,
  LSR_SCORER_KIND_MEAN = 3,
  LSR_SCORER_KIND_EXACT_SDM = 4,
  LSR_SCORER_KIND_SOFT_SDM = 5,
} LsrScorerKind;

typedef enum LsrSpanMode {
  LSR_SPAN_MODE_CONSECUTIVE = 0,
  LSR_SPAN_MODE_FULL = 1,
  LSR_SPAN_MODE_BOTH = 2,
} LsrSpanMode;

typedef enum LsrStatus {
  LSR_STATUS_OK = 0,
  LSR_STATUS_NULL_POINTER = 1,
  LSR_STATUS_INVALID_UTF8 = 2,
  LSR_STATUS_IO = 3,
  LSR_STATUS_PARSE = 4,
  LSR_STATUS_INVALID_DATA = 5,
  LSR_STATUS_INVALID_ARGUMENT = 6,
  LSR_STATUS_MISSING_TOKENS = 7,
  LSR_STATUS_FORMAT = 8,
  LSR_STATUS_OUT_OF_RANGE = 9,
  LSR_STATUS_PANIC = 10,
} LsrStatus;

typedef struct LsrIndex LsrIndex;

typedef struct LsrResults LsrResults;

/**
 * Scorer selection. `kind` holds an [`LsrScorerKind`] value and `spans` an
 * [`LsrSpanMode`] value; SDM fields are ignored by the aggregation kinds.
 */
typedef struct LsrScorerConfig {
  uint32_t kind;
  double lambda_t;
  double lambda_o;
  double lambda_u;
  uint32_t ngram_order;
  uint32_t window_size;
  uint32_t spans;
} LsrScorerConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. The pointer
 * stays valid until the next `lsr_*` call on the same thread.
 */
const char *lsr_last_error(void);

/**
 * Library version as a static string.
 */
const char *lsr_version(void);

/**
 * Default configuration for `kind` (weights 0.85/0.10/0.05, bigrams,
 * window 8, consecutive spans).
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum LsrStatus lsr_scorer_config_default(uint32_t kind, struct LsrScorerConfig *out);

/**
 * Loads a saved index directory into `*out`.
 *
 * # Safety
 * `dir` must be a valid C string and `out` a valid pointer.
 */
enum LsrStatus lsr_index_open(const char *dir, struct LsrIndex **out);

/**
 * Builds an in-memory index from an encoded-segments JSONL file.
 *
 * # Safety
 * `segments_path` must be a valid C string and `out` a valid pointer.
 */
enum LsrStatus lsr_index_build(const char *segments_path, struct LsrIndex **out);

/**
 * Writes the index to `dir`.
 *
 * # Safety
 * `index` must come from this library; `dir` must be a valid C string.
 */
enum LsrStatus lsr_index_save(const struct LsrIndex *index, const char *dir);

/**
 * # Safety
 * `index` must be NULL or come from this library and not be used afterwards.
 */
void lsr_index_free(struct LsrIndex *index);

/**
 * Number of documents, 0 for NULL.
 *
 * # Safety
 * `index` must be NULL or come from this library.
 */
size_t lsr_index_num_docs(const struct LsrIndex *index);

/**
 * Whether every segment carries tokens (needed for exact SDM).
 *
 * # Safety
 * `index` must be NULL or come from this library.
 */
bool lsr_index_has_tokens(const struct LsrIndex *index);

/**
 * Top-`k` documents for one query given as parallel arrays of term ids and
 * weights, in query order.
 *
 * # Safety
 * `term_ids` and `weights` must each hold `len` elements; `config` and
 * `out` must be valid pointers.
 */
enum LsrStatus lsr_search(const struct LsrIndex *index,
                          const uint32_t *term_ids,
                          const double *weights,
                          size_t len,
                          size_t k,
                          size_t candidate_pool,
                          const struct LsrScorerConfig *config,
                          struct LsrResults **out);

/**
 * Runs every query of a JSONL file and writes a TREC run file.
 *
 * # Safety
 * Path and tag arguments must be valid C strings; `config` a valid pointer.
 */
enum LsrStatus lsr_search_file(const struct LsrIndex *index,
                               const char *queries_path,
                               size_t k,
                               size_t candidate_pool,
                               const struct LsrScorerConfig *config,
                               const char *run_path,
                               const char *tag);

/**
 * # Safety
 * `results` must be NULL or come from this library.
 */
size_t lsr_results_len(const struct LsrResults *results);

/**
 * Document id at rank `i` (0-based), or NULL when out of range. Valid
 * until the results are freed.
 *
 * # Safety
 * `results` must be NULL or come from this library.
 */
const char *lsr_results_doc_id(const struct LsrResults *results, size_t i);

/**
 * Score at rank `i` (0-based).
 *
 * # Safety
 * `results` must be NULL or come from this library; `out` a valid pointer.
 */
enum LsrStatus lsr_results_score(const struct LsrResults *results, size_t i, double *out);

/**
 * # Safety
 * `results` must be NULL or come from this library and not be used afterwards.
 */
void lsr_results_free(struct LsrResults *results);

/**
 * Mean of `metric` (for example "ndcg@10") for a run file against qrels.
 *
 * # Safety
 * String arguments must be valid C strings; `out_mean` a valid pointer.
 */
enum LsrStatus lsr_eval(const char *run_path,
                        const char *qrels_path,
                        const char *metric,
                        double *out_mean);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LSRLONG_H */
