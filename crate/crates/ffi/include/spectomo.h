#ifndef SPECTOMO_H
#define SPECTOMO_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SpectomoStatus {
  SPECTOMO_STATUS_OK = 0,
  SPECTOMO_STATUS_NULL_POINTER = 1,
  SPECTOMO_STATUS_INVALID_PARAMETER = 2,
  SPECTOMO_STATUS_INVALID_TOPOLOGY = 3,
  SPECTOMO_STATUS_PLACEMENT_FAILED = 4,
  SPECTOMO_STATUS_BOUND_EXCEEDED = 5,
  SPECTOMO_STATUS_MISSING_PAIR = 6,
  SPECTOMO_STATUS_SCHEMA = 7,
  SPECTOMO_STATUS_IO = 8,
  SPECTOMO_STATUS_JSON = 9,
  SPECTOMO_STATUS_CSV = 10,
  SPECTOMO_STATUS_UTF8 = 11,
  SPECTOMO_STATUS_BUFFER_TOO_SMALL = 12,
  SPECTOMO_STATUS_PANIC = 13,
} SpectomoStatus;

/**
 * Opaque fitted latent model handle.
 */
typedef struct SpectomoModel SpectomoModel;

/**
 * Opaque topology handle.
 */
typedef struct SpectomoTopology SpectomoTopology;

/**
 * Measurement overhead counts, saturated at `u64::MAX`.
 */
typedef struct SpectomoOverhead {
  uint64_t first_order_sets;
  uint64_t pairwise_sets;
  uint64_t tomography_frames;
  uint64_t oracle_sets;
  uint64_t oracle_frames;
} SpectomoOverhead;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Valid until the next failure.
 */
const char *spectomo_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *spectomo_version(void);

/**
 * Free a string returned by this library. Null is ignored.
 */
void spectomo_string_free(char *s);

/**
 * Generate a topology with default parameters apart from the given counts.
 */
enum SpectomoStatus spectomo_topology_generate(size_t num_clients,
                                               size_t num_channels,
                                               size_t num_hts,
                                               uint64_t seed,
                                               struct SpectomoTopology **out);

enum SpectomoStatus spectomo_topology_from_json(const char *json, struct SpectomoTopology **out);

/**
 * Serialize to JSON; free the result with `spectomo_string_free`.
 */
enum SpectomoStatus spectomo_topology_to_json(const struct SpectomoTopology *t, char **out);

enum SpectomoStatus spectomo_topology_num_clients(const struct SpectomoTopology *t, size_t *out);

void spectomo_topology_free(struct SpectomoTopology *t);

/**
 * Exact joint access distribution of `subset` on `channel`. `probs` receives `2^len`
 * values; bit `k` of the index is set when `subset[k]` accesses.
 */
enum SpectomoStatus spectomo_exact_joint(const struct SpectomoTopology *t,
                                         size_t channel,
                                         const size_t *subset,
                                         size_t len,
                                         double *probs,
                                         size_t probs_len);

/**
 * Measure and fit a latent model for one channel. `alphabet == 0` means `F = N`;
 * `frames_per_sample == 0` keeps the default.
 */
enum SpectomoStatus spectomo_model_estimate(const struct SpectomoTopology *t,
                                            size_t channel,
                                            size_t alphabet,
                                            uint64_t frames_per_sample,
                                            uint64_t seed,
                                            struct SpectomoModel **out);

enum SpectomoStatus spectomo_model_from_json(const char *json, struct SpectomoModel **out);

enum SpectomoStatus spectomo_model_to_json(const struct SpectomoModel *m, char **out);

/**
 * `P(access members accessed, other group members blocked)` under the model.
 */
enum SpectomoStatus spectomo_model_query(const struct SpectomoModel *m,
                                         const size_t *group,
                                         size_t group_len,
                                         const size_t *access,
                                         size_t access_len,
                                         double *out);

enum SpectomoStatus spectomo_model_num_clients(const struct SpectomoModel *m, size_t *out);

void spectomo_model_free(struct SpectomoModel *m);

/**
 * Number of hidden terminals inferred from a fitted model.
 */
enum SpectomoStatus spectomo_blueprint_count(const struct SpectomoModel *m,
                                             uint64_t seed,
                                             size_t *out);

enum SpectomoStatus spectomo_overhead(uint64_t channels,
                                      uint64_t clients,
                                      uint64_t clusters,
                                      uint64_t antennas,
                                      uint64_t frames,
                                      struct SpectomoOverhead *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SPECTOMO_H */
