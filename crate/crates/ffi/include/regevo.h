#ifndef REGEVO_H
#define REGEVO_H

/* Generated by cbindgen from src/lib.rs. Do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum RegevoStatus {
  REGEVO_STATUS_OK = 0,
  REGEVO_STATUS_NULL_ARGUMENT = 1,
  REGEVO_STATUS_INVALID_UTF8 = 2,
  REGEVO_STATUS_INVALID_ARGUMENT = 3,
  REGEVO_STATUS_IO = 4,
  REGEVO_STATUS_FORMAT = 5,
  REGEVO_STATUS_TRACE_INVALID = 6,
  REGEVO_STATUS_OUT_OF_RANGE = 7,
  REGEVO_STATUS_BUFFER_TOO_SMALL = 8,
  REGEVO_STATUS_PANIC = 99,
} RegevoStatus;

typedef enum RegevoPolicyKind {
  REGEVO_POLICY_KIND_STORE_ALL = 0,
  REGEVO_POLICY_KIND_SKIP_BOTTOM = 1,
  REGEVO_POLICY_KIND_PROBABILITY_THRESHOLD = 2,
  REGEVO_POLICY_KIND_TIER_THRESHOLD = 3,
} RegevoPolicyKind;

/*
 Search parameters.
 */
typedef struct RegevoSearchConfig RegevoSearchConfig;

/*
 Search space definition.
 */
typedef struct RegevoSpace RegevoSpace;

/*
 Evaluation trace in completion order.
 */
typedef struct RegevoTrace RegevoTrace;

/*
 Scalar fields of one trace event. Optional fields carry a `has_` flag.
 */
typedef struct RegevoEvent {
  uint64_t candidate_id;
  double begin_ts;
  double end_ts;
  uint32_t worker_id;
  double quality;
  uint8_t stage;
  bool has_donor;
  uint64_t donor_id;
  uint32_t donor_prefix_len;
  size_t sequence_len;
} RegevoEvent;

/*
 Admission policy. `epsilon` applies to the probability threshold,
 `min_donations` and `window` to the tier threshold. A `capacity` of 0
 means unbounded.
 */
typedef struct RegevoPolicy {
  enum RegevoPolicyKind kind;
  double epsilon;
  uint64_t min_donations;
  uint64_t window;
  uint64_t capacity;
} RegevoPolicy;

/*
 Replay counters. `hit_rate` is NaN when there were no donor requests.
 */
typedef struct RegevoCacheReport {
  uint64_t stores_made;
  uint64_t stores_skipped;
  uint64_t donor_hits;
  uint64_t donor_misses;
  uint64_t wasted_stores;
  uint64_t miss_penalty_prefix_slots;
  uint64_t evictions;
  double hit_rate;
} RegevoCacheReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Library version as a static NUL-terminated string.
 */
const char *regevo_version(void);

/*
 Message of the last failed call on this thread, or NULL after a success.
 The pointer stays valid until the next call on the same thread.
 */
const char *regevo_last_error_message(void);

/*
 # Safety
 `out` must be valid for writes.
 */
enum RegevoStatus regevo_space_default(struct RegevoSpace **out);

/*
 Parses a search-space TOML document.

 # Safety
 `toml` must be a NUL-terminated string and `out` valid for writes.
 */
enum RegevoStatus regevo_space_from_toml(const char *toml, struct RegevoSpace **out);

/*
 # Safety
 `space` must come from this library or be NULL.
 */
void regevo_space_free(struct RegevoSpace *space);

/*
 # Safety
 `out` must be valid for writes.
 */
enum RegevoStatus regevo_search_config_default(struct RegevoSearchConfig **out);

/*
 Parses a search TOML document.

 # Safety
 `toml` must be a NUL-terminated string and `out` valid for writes.
 */
enum RegevoStatus regevo_search_config_from_toml(const char *toml, struct RegevoSearchConfig **out);

/*
 # Safety
 `config` must be a live handle.
 */
enum RegevoStatus regevo_search_config_set_seed(struct RegevoSearchConfig *config, uint64_t seed);

/*
 # Safety
 `config` must be a live handle.
 */
enum RegevoStatus regevo_search_config_set_total_candidates(struct RegevoSearchConfig *config,
                                                            size_t total);

/*
 # Safety
 `config` must come from this library or be NULL.
 */
void regevo_search_config_free(struct RegevoSearchConfig *config);

/*
 Runs a search and returns its trace.

 # Safety
 Handles must be live and `out` valid for writes.
 */
enum RegevoStatus regevo_run_search(const struct RegevoSpace *space,
                                    const struct RegevoSearchConfig *config,
                                    struct RegevoTrace **out);

/*
 # Safety
 `path` must be a NUL-terminated string and `out` valid for writes.
 */
enum RegevoStatus regevo_trace_read(const char *path, struct RegevoTrace **out);

/*
 # Safety
 `trace` must be live and `path` a NUL-terminated string.
 */
enum RegevoStatus regevo_trace_write(const struct RegevoTrace *trace, const char *path);

/*
 # Safety
 `trace` must be live and `out` valid for writes.
 */
enum RegevoStatus regevo_trace_len(const struct RegevoTrace *trace, size_t *out);

/*
 # Safety
 `trace` must be live and `out` valid for writes.
 */
enum RegevoStatus regevo_trace_event(const struct RegevoTrace *trace,
                                     size_t index,
                                     struct RegevoEvent *out);

/*
 Copies the event's choices into `buf`. `out_len` always receives the
 sequence length; a short buffer yields `BufferTooSmall`. `buf` may be
 NULL when `capacity` is 0.

 # Safety
 `buf` must be valid for `capacity` writes and `out_len` for one.
 */
enum RegevoStatus regevo_trace_sequence(const struct RegevoTrace *trace,
                                        size_t index,
                                        uint32_t *buf,
                                        size_t capacity,
                                        size_t *out_len);

/*
 # Safety
 `trace` must come from this library or be NULL.
 */
void regevo_trace_free(struct RegevoTrace *trace);

/*
 Replays a trace against one admission policy.

 # Safety
 `trace` must be live, `policy` readable and `out` valid for writes.
 */
enum RegevoStatus regevo_cache_replay(const struct RegevoTrace *trace,
                                      const struct RegevoPolicy *policy,
                                      size_t population_size,
                                      size_t sample_size,
                                      struct RegevoCacheReport *out);

/*
 Probability of exactly `k` marked items in `n` draws without replacement
 from `total` items of which `marked` are marked.

 # Safety
 `out` must be valid for writes.
 */
enum RegevoStatus regevo_hypergeom_pmf(uint64_t total,
                                       uint64_t marked,
                                       uint64_t draws,
                                       uint64_t k,
                                       double *out);

/*
 Bound on the chance that the rank-`rank` member (1 = worst) is the best
 of a sample of `sample` from `population`.

 # Safety
 `out` must be valid for writes.
 */
enum RegevoStatus regevo_transfer_bound(uint64_t population,
                                        uint64_t rank,
                                        uint64_t sample,
                                        double *out);

/*
 # Safety
 `out` must be valid for writes.
 */
enum RegevoStatus regevo_birthday_threshold(double prefixes,
                                            uint32_t repeats,
                                            double probability,
                                            double *out);

/*
 # Safety
 `out` must be valid for writes.
 */
enum RegevoStatus regevo_normal_order_stat(uint64_t rank, uint64_t count, double *out);

/*
 # Safety
 `out` must be valid for writes.
 */
enum RegevoStatus regevo_quanta_delay_bound(uint64_t wait_for,
                                            uint64_t workers,
                                            double mean,
                                            double stddev,
                                            double *out);

/*
 # Safety
 `out` must be valid for writes.
 */
enum RegevoStatus regevo_evals_until_donor(uint64_t population, uint64_t sample, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* REGEVO_H */
