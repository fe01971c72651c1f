#ifndef BIASNET_H
#define BIASNET_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible call.
 */
typedef enum {
  BN_OK = 0,
  BN_INVALID_ARGUMENT = 1,
  BN_PARSE = 2,
  BN_SCHEMA_MISMATCH = 3,
  BN_FORMAT = 4,
  BN_IO = 5,
  BN_NULL_POINTER = 6,
  BN_PANIC = 7,
} BnStatus;

/**
 * Opaque directed graph.
 */
typedef struct BnGraph BnGraph;

/**
 * Opaque trained prevision model.
 */
typedef struct BnModel BnModel;

/**
 * Model parameters in canonical order.
 */
typedef struct {
  double pi;
  double sigma;
  double rho;
  double d;
  double delta;
} BnParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copy the last error message of this thread into `buf` (NUL-terminated,
 * truncated to `len`). Returns the full message length excluding the NUL,
 * or 0 when there is no error.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t bn_last_error(char *buf, size_t len);

/**
 * Empty graph on `n` vertices.
 *
 * # Safety
 * `out` must be a valid pointer to a handle slot.
 */
BnStatus bn_graph_new(size_t n, BnGraph **out);

/**
 * Parse the edge-list text format, thresholding at strength `level`.
 *
 * # Safety
 * `text` must be a NUL-terminated string; `out` a valid handle slot.
 */
BnStatus bn_graph_parse(const char *text, uint32_t level, BnGraph **out);

/**
 * Release a graph. Null is ignored.
 *
 * # Safety
 * `g` must be null or a handle from this library not yet freed.
 */
void bn_graph_free(BnGraph *g);

/**
 * Vertex count, or 0 for a null handle.
 *
 * # Safety
 * `g` must be null or a live handle.
 */
size_t bn_graph_order(const BnGraph *g);

/**
 * Edge count, or 0 for a null handle.
 *
 * # Safety
 * `g` must be null or a live handle.
 */
size_t bn_graph_edge_count(const BnGraph *g);

/**
 * Set the state of edge `(i, j)`.
 *
 * # Safety
 * `g` must be a live handle.
 */
BnStatus bn_graph_set_edge(BnGraph *g, size_t i, size_t j, bool present);

/**
 * Query edge `(i, j)`.
 *
 * # Safety
 * `g` must be a live handle and `out` writable.
 */
BnStatus bn_graph_has_edge(const BnGraph *g, size_t i, size_t j, bool *out);

/**
 * Simulate one network: `burnin` updates from the empty graph using chain
 * stream `index` of `seed`.
 *
 * # Safety
 * `params` must be readable and `out` a valid handle slot.
 */
BnStatus bn_simulate(const BnParams *params,
                     size_t n,
                     bool dichotomized,
                     uint64_t burnin,
                     uint64_t seed,
                     uint64_t index,
                     BnGraph **out);

/**
 * Number of features written by [`bn_featurize`].
 */
size_t bn_feature_count(void);

/**
 * Name of feature `i` as a static NUL-terminated string, or null when out of range.
 */
const char *bn_feature_name(size_t i);

/**
 * Write the feature vector into `out[0..len]`; `len` must be at least [`bn_feature_count`].
 *
 * # Safety
 * `g` must be a live handle and `out` point to `len` writable doubles.
 */
BnStatus bn_featurize(const BnGraph *g, double *out, size_t len);

/**
 * Edge probability for the given event counts.
 *
 * # Safety
 * `params` must be readable and `out` writable.
 */
BnStatus bn_update_probability(uint32_t parent,
                               uint32_t sibling,
                               uint32_t double_role,
                               uint32_t satiation,
                               const BnParams *params,
                               double *out);

/**
 * The two incompatible conditional marginals of the three-vertex example.
 *
 * # Safety
 * `m1` and `m2` must be writable.
 */
BnStatus bn_illposed_marginals(double d, double sigma, double *m1, double *m2);

/**
 * Load a model directory written by the CLI's `train`.
 *
 * # Safety
 * `dir` must be a NUL-terminated path; `out` a valid handle slot.
 */
BnStatus bn_model_load(const char *dir, BnModel **out);

/**
 * Release a model. Null is ignored.
 *
 * # Safety
 * `m` must be null or a live handle.
 */
void bn_model_free(BnModel *m);

/**
 * Posterior summary for `g`. Writes 5 means and 5 standard deviations
 * (canonical parameter order) and `5 * n_levels` quantiles, parameter-major.
 * `undichotomized` receives the class probability, or NaN when the model
 * has no selector; it may be null.
 *
 * # Safety
 * Handles must be live; `levels` must hold `n_levels` doubles; `means`
 * and `sds` 5 doubles each; `quantiles` `5 * n_levels` doubles (may be
 * null when `n_levels` is 0).
 */
BnStatus bn_model_posterior(const BnModel *m,
                            const BnGraph *g,
                            const double *levels,
                            size_t n_levels,
                            double *means,
                            double *sds,
                            double *quantiles,
                            double *undichotomized);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BIASNET_H */
