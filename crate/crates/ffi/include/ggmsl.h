#ifndef GGMSL_H
#define GGMSL_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Version of this interface; bumped on incompatible changes.
 */
#define GGMSL_ABI_VERSION 1

typedef enum GgmslStatus {
  GGMSL_STATUS_OK = 0,
  GGMSL_STATUS_NULL_POINTER = 1,
  GGMSL_STATUS_INVALID_ARGUMENT = 2,
  GGMSL_STATUS_DIMENSION_MISMATCH = 3,
  GGMSL_STATUS_NOT_POSITIVE_DEFINITE = 4,
  GGMSL_STATUS_NUMERICAL = 5,
  GGMSL_STATUS_UNDEFINED_METRIC = 6,
  GGMSL_STATUS_INTERNAL = 7,
} GgmslStatus;

typedef enum GgmslGraphType {
  GGMSL_GRAPH_TYPE_RANDOM = 0,
  GGMSL_GRAPH_TYPE_CLUSTER = 1,
  GGMSL_GRAPH_TYPE_SCALE_FREE = 2,
} GgmslGraphType;

typedef enum GgmslSampler {
  GGMSL_SAMPLER_SS_O = 0,
  GGMSL_SAMPLER_RJ = 1,
  GGMSL_SAMPLER_BD = 2,
  GGMSL_SAMPLER_PLRJ = 3,
  GGMSL_SAMPLER_PLBD = 4,
} GgmslSampler;

/**
 * Opaque `n × p` data matrix.
 */
typedef struct GgmslData GgmslData;

/**
 * Opaque undirected graph.
 */
typedef struct GgmslGraph GgmslGraph;

/**
 * Opaque edge inclusion matrix.
 */
typedef struct GgmslInclusion GgmslInclusion;

/**
 * Chain settings. `max_seconds <= 0` means no wall-clock cap.
 */
typedef struct GgmslRunOptions {
  size_t iterations;
  uint64_t seed;
  size_t burn_in;
  /**
   * Bernoulli edge prior; ignored by `GGMSL_SAMPLER_SS_O`.
   */
  double prior_theta;
  double max_seconds;
} GgmslRunOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

uint32_t ggmsl_abi_version(void);

/**
 * Message of the last failed call on this thread, or null. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *ggmsl_last_error(void);

/**
 * Copies `n * p` row-major values into a new data handle.
 *
 * # Safety
 * `values` must point to `n * p` readable doubles and `out` must be writable.
 */
enum GgmslStatus ggmsl_data_new(const double *values, size_t n, size_t p, struct GgmslData **out);

/**
 * # Safety
 * `data` must be null or a handle from this library, not freed before.
 */
void ggmsl_data_free(struct GgmslData *data);

/**
 * # Safety
 * `data` must be a live handle; `n` and `p` must be writable.
 */
enum GgmslStatus ggmsl_data_shape(const struct GgmslData *data, size_t *n, size_t *p);

/**
 * Empty graph on `p` nodes.
 *
 * # Safety
 * `out` must be writable.
 */
enum GgmslStatus ggmsl_graph_new(size_t p, struct GgmslGraph **out);

/**
 * # Safety
 * `graph` must be null or a handle from this library, not freed before.
 */
void ggmsl_graph_free(struct GgmslGraph *graph);

/**
 * Adds the 0-based edge `{a, b}`; adding a present edge is a no-op.
 *
 * # Safety
 * `graph` must be a live handle.
 */
enum GgmslStatus ggmsl_graph_add_edge(struct GgmslGraph *graph, size_t a, size_t b);

/**
 * # Safety
 * `graph` must be a live handle and `out` writable.
 */
enum GgmslStatus ggmsl_graph_has_edge(const struct GgmslGraph *graph,
                                      size_t a,
                                      size_t b,
                                      bool *out);

/**
 * # Safety
 * `graph` must be a live handle and `out` writable.
 */
enum GgmslStatus ggmsl_graph_edge_count(const struct GgmslGraph *graph, size_t *out);

/**
 * Synthetic benchmark instance: true graph and `n` observations.
 *
 * # Safety
 * `graph_out` and `data_out` must be writable.
 */
enum GgmslStatus ggmsl_generate_instance(enum GgmslGraphType graph_type,
                                         size_t p,
                                         size_t n,
                                         uint64_t master_seed,
                                         size_t replication,
                                         struct GgmslGraph **graph_out,
                                         struct GgmslData **data_out);

/**
 * Runs one chain and returns its edge inclusion matrix.
 *
 * # Safety
 * `data` and `options` must be valid; `out` must be writable.
 */
enum GgmslStatus ggmsl_run_sampler(const struct GgmslData *data,
                                   enum GgmslSampler sampler,
                                   const struct GgmslRunOptions *options,
                                   struct GgmslInclusion **out);

/**
 * # Safety
 * `inclusion` must be null or a handle from this library, not freed before.
 */
void ggmsl_inclusion_free(struct GgmslInclusion *inclusion);

/**
 * Estimated inclusion probability of the 0-based pair `{i, j}`.
 *
 * # Safety
 * `inclusion` must be a live handle and `out` writable.
 */
enum GgmslStatus ggmsl_inclusion_get(const struct GgmslInclusion *inclusion,
                                     size_t i,
                                     size_t j,
                                     double *out);

/**
 * # Safety
 * Handles must be live and `out` writable.
 */
enum GgmslStatus ggmsl_auc(const struct GgmslInclusion *inclusion,
                           const struct GgmslGraph *truth,
                           double *out);

/**
 * MAMSE with weight `alpha` on present edges.
 *
 * # Safety
 * Handles must be live and `out` writable.
 */
enum GgmslStatus ggmsl_mamse(const struct GgmslInclusion *inclusion,
                             const struct GgmslGraph *truth,
                             double alpha,
                             double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GGMSL_H */
