#ifndef RCURRENT_H
#define RCURRENT_H

/* Generated by cbindgen; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes shared by every entry point.
 */
typedef enum RcStatus {
  RC_STATUS_OK = 0,
  RC_STATUS_NULL_POINTER = 1,
  RC_STATUS_INVALID_ARGUMENT = 2,
  RC_STATUS_CONFIG = 3,
  RC_STATUS_IO = 4,
  /**
   * A verification experiment ran but some check failed.
   */
  RC_STATUS_VERIFICATION_FAILED = 5,
  RC_STATUS_REPLAY_MISMATCH = 6,
  RC_STATUS_PANIC = 7,
  /**
   * An experiment stopped before finishing; partial results were kept.
   */
  RC_STATUS_RUN_FAILED = 8,
} RcStatus;

/**
 * Exact Gibbs measure handle.
 */
typedef struct RcGibbs RcGibbs;

/**
 * Coupling graph handle.
 */
typedef struct RcGraph RcGraph;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failing call on this thread, or NULL. The pointer is
 * valid until the next failing call on the same thread.
 */
const char *rc_last_error_message(void);

/**
 * Clears the last error message of this thread.
 */
void rc_clear_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *rc_version(void);

/**
 * Hypercubic lattice `{0..l-1}^d` with uniform coupling `j`; `periodic`
 * selects torus or free boundary.
 *
 * # Safety
 * `out_graph` must be a valid pointer to writable storage for a handle.
 */
enum RcStatus rc_graph_lattice(size_t d,
                               size_t l,
                               double j,
                               bool periodic,
                               struct RcGraph **out_graph);

/**
 * Graph on `n` vertices from `m` edges `(u[i], v[i], j[i])`.
 *
 * # Safety
 * `u`, `v`, `j` must point to `m` readable elements each.
 */
enum RcStatus rc_graph_from_edges(size_t n,
                                  size_t m,
                                  const size_t *u,
                                  const size_t *v,
                                  const double *j,
                                  struct RcGraph **out_graph);

/**
 * Reads a JSON graph file.
 *
 * # Safety
 * `path` must be a NUL-terminated string.
 */
enum RcStatus rc_graph_load(const char *path, struct RcGraph **out_graph);

/**
 * # Safety
 * `graph` must be NULL or a handle from an `rc_graph_*` constructor, not yet freed.
 */
void rc_graph_free(struct RcGraph *graph);

/**
 * Vertex count, or 0 for NULL.
 *
 * # Safety
 * `graph` must be NULL or a live handle.
 */
size_t rc_graph_vertices(const struct RcGraph *graph);

/**
 * Edge count, or 0 for NULL.
 *
 * # Safety
 * `graph` must be NULL or a live handle.
 */
size_t rc_graph_edges(const struct RcGraph *graph);

/**
 * Exact zero-field Gibbs measure at inverse temperature `beta`.
 *
 * # Safety
 * `graph` must be a live handle and `out_gibbs` writable.
 */
enum RcStatus rc_gibbs_new(const struct RcGraph *graph, double beta, struct RcGibbs **out_gibbs);

/**
 * # Safety
 * `gibbs` must be NULL or a live handle.
 */
void rc_gibbs_free(struct RcGibbs *gibbs);

/**
 * Correlation `<prod_i sigma_{points[i]}>`.
 *
 * # Safety
 * `points` must hold `k` elements; `gibbs` live; `out_value` writable.
 */
enum RcStatus rc_gibbs_correlation(const struct RcGibbs *gibbs,
                                   const size_t *points,
                                   size_t k,
                                   double *out_value);

/**
 * Fourth Ursell function `U4(x1, x2, x3, x4)`.
 *
 * # Safety
 * `points` must hold 4 elements; `gibbs` live; `out_value` writable.
 */
enum RcStatus rc_gibbs_ursell4(const struct RcGibbs *gibbs,
                               const size_t *points,
                               double *out_value);

/**
 * Pfaffian of the `dim x dim` antisymmetric matrix stored row-major in
 * `matrix`; only the strict upper triangle is read.
 *
 * # Safety
 * `matrix` must hold `dim * dim` elements.
 */
enum RcStatus rc_pfaffian(const double *matrix, size_t dim, double *out_value);

/**
 * Sign `(-1)^{crossings}` of a pairing of `size` labels placed at cyclic
 * `positions`; `partner[i]` is the label paired with `i`.
 *
 * # Safety
 * `positions` and `partner` must each hold `size` elements.
 */
enum RcStatus rc_crossing_sign(const int64_t *positions,
                               const size_t *partner,
                               size_t size,
                               int32_t *out_sign);

/**
 * Wolff estimate of `<sigma_x sigma_y>` with its binned standard error.
 *
 * # Safety
 * `graph` live; `out_mean`, `out_err` writable.
 */
enum RcStatus rc_wolff_s2(const struct RcGraph *graph,
                          double beta,
                          uint64_t sweeps,
                          uint64_t seed,
                          size_t x,
                          size_t y,
                          double *out_mean,
                          double *out_err);

/**
 * Runs experiment `kind` from a TOML config string and writes its result
 * directory under `out_root`. Returns `VerificationFailed` when a
 * verification kind ran but some check failed.
 *
 * # Safety
 * `kind`, `config_toml` and `out_root` must be NUL-terminated strings.
 */
enum RcStatus rc_run_experiment(const char *kind, const char *config_toml, const char *out_root);

/**
 * Replays a result directory; `ReplayMismatch` names the first divergent record.
 *
 * # Safety
 * `dir` must be a NUL-terminated string.
 */
enum RcStatus rc_replay(const char *dir);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RCURRENT_H */
