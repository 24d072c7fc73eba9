#ifndef CFTRANSPORT_H
#define CFTRANSPORT_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum CftStatus {
  CFT_STATUS_OK = 0,
  CFT_STATUS_NULL_POINTER = 1,
  CFT_STATUS_INVALID_ARGUMENT = 2,
  CFT_STATUS_DIMENSION_MISMATCH = 3,
  CFT_STATUS_BUFFER_TOO_SMALL = 4,
  CFT_STATUS_NUMERICAL = 5,
  CFT_STATUS_IO = 6,
  CFT_STATUS_VALIDATION = 7,
  CFT_STATUS_PANIC = 8,
} CftStatus;

/**
 * Sparse transport plan between two distributions.
 */
typedef struct CftCoupling CftCoupling;

/**
 * Weighted point cloud.
 */
typedef struct CftDistribution CftDistribution;

/**
 * Counterfactual model over several groups.
 */
typedef struct CftModel CftModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *cft_version(void);

/**
 * Copies the calling thread's last error message into `buf` (truncated,
 * always NUL-terminated when `len > 0`) and returns its full length in
 * bytes, excluding the terminator.
 *
 * # Safety
 * `buf` must be null or valid for `len` bytes.
 */
size_t cft_last_error_message(char *buf, size_t len);

/**
 * `n` points in `R^d` with the given weights, or uniform weights when
 * `weights` is null.
 *
 * # Safety
 * `points` must hold `n*d` values, `weights` null or `n` values, and `out`
 * must be a valid pointer.
 */
enum CftStatus cft_distribution_new(const double *points,
                                    size_t n,
                                    size_t d,
                                    const double *weights,
                                    struct CftDistribution **out);

/**
 * # Safety
 * `p` must be null or a handle not yet freed.
 */
void cft_distribution_free(struct CftDistribution *p);

/**
 * Number of atoms, or 0 for a null handle.
 *
 * # Safety
 * `p` must be null or a live handle.
 */
size_t cft_distribution_len(const struct CftDistribution *p);

/**
 * # Safety
 * `p` must be null or a live handle.
 */
size_t cft_distribution_dim(const struct CftDistribution *p);

/**
 * Optimal coupling under the squared Euclidean cost.
 *
 * # Safety
 * `p` and `q` must be live handles and `out` a valid pointer.
 */
enum CftStatus cft_solve_quadratic(const struct CftDistribution *p,
                                   const struct CftDistribution *q,
                                   struct CftCoupling **out);

/**
 * Optimal coupling for an arbitrary `len(p) × len(q)` cost matrix.
 *
 * # Safety
 * `cost` must hold `len(p)*len(q)` values; see [`cft_solve_quadratic`].
 */
enum CftStatus cft_solve_kantorovich(const struct CftDistribution *p,
                                     const struct CftDistribution *q,
                                     const double *cost,
                                     struct CftCoupling **out);

/**
 * Monotone coupling of two one-dimensional distributions.
 *
 * # Safety
 * See [`cft_solve_quadratic`].
 */
enum CftStatus cft_quantile_1d(const struct CftDistribution *p,
                               const struct CftDistribution *q,
                               struct CftCoupling **out);

/**
 * # Safety
 * `c` must be null or a handle not yet freed.
 */
void cft_coupling_free(struct CftCoupling *c);

/**
 * Number of stored entries, or 0 for a null handle.
 *
 * # Safety
 * `c` must be null or a live handle.
 */
size_t cft_coupling_nnz(const struct CftCoupling *c);

/**
 * # Safety
 * `c` must be a live handle; `n_src` and `n_tgt` valid pointers.
 */
enum CftStatus cft_coupling_shape(const struct CftCoupling *c, size_t *n_src, size_t *n_tgt);

/**
 * Copies the entries, sorted by source then target atom, into three
 * arrays of capacity `cap ≥ nnz`.
 *
 * # Safety
 * Each output must be valid for `cap` elements.
 */
enum CftStatus cft_coupling_entries(const struct CftCoupling *c,
                                    size_t *src,
                                    size_t *tgt,
                                    double *mass,
                                    size_t cap);

/**
 * Writes the dense `n_src × n_tgt` plan into `out`.
 *
 * # Safety
 * `out` must be valid for `len` doubles.
 */
enum CftStatus cft_coupling_dense(const struct CftCoupling *c, double *out, size_t len);

/**
 * `Σ π(i,j) C(i,j)` for a row-major cost matrix of the coupling's shape.
 *
 * # Safety
 * `cost` must hold `n_src*n_tgt` values and `out` be a valid pointer.
 */
enum CftStatus cft_coupling_cost(const struct CftCoupling *c, const double *cost, double *out);

/**
 * Barycentric images of the atoms of `p` under the coupling, written as a
 * `len(p) × dim` matrix.
 *
 * # Safety
 * Handles must be live; `out` valid for `len` doubles.
 */
enum CftStatus cft_barycentric_images(const struct CftCoupling *c,
                                      const struct CftDistribution *p,
                                      const struct CftDistribution *q,
                                      double *out,
                                      size_t len);

/**
 * Optimal transport counterfactual model of `n` rows in `R^d` labelled by
 * `groups`. Each group is the uniform distribution over its rows, in row
 * order.
 *
 * # Safety
 * `points` must hold `n*d` values, `groups` `n` values, `out` be valid.
 */
enum CftStatus cft_model_build_ot(const double *points,
                                  size_t n,
                                  size_t d,
                                  const int64_t *groups,
                                  struct CftModel **out);

/**
 * # Safety
 * `m` must be null or a handle not yet freed.
 */
void cft_model_free(struct CftModel *m);

/**
 * Number of groups, or 0 for a null handle.
 *
 * # Safety
 * `m` must be null or a live handle.
 */
size_t cft_model_num_groups(const struct CftModel *m);

/**
 * Runs the model checks. `passed` receives 1 or 0 and `max_residual` the
 * largest marginal residual.
 *
 * # Safety
 * `m` must be live; outputs valid pointers.
 */
enum CftStatus cft_model_validate(const struct CftModel *m, int *passed, double *max_residual);

/**
 * Copy of the coupling from group `s` to group `s_prime`.
 *
 * # Safety
 * `m` must be live and `out` valid.
 */
enum CftStatus cft_model_coupling(const struct CftModel *m,
                                  int64_t s,
                                  int64_t s_prime,
                                  struct CftCoupling **out);

/**
 * Writes the model directory `path`.
 *
 * # Safety
 * `m` must be live and `path` a NUL-terminated UTF-8 string.
 */
enum CftStatus cft_model_save(const struct CftModel *m, const char *path);

/**
 * Reads a model directory, verifying its checksums.
 *
 * # Safety
 * `path` must be a NUL-terminated UTF-8 string and `out` valid.
 */
enum CftStatus cft_model_load(const char *path, struct CftModel **out);

/**
 * Structural counterfactual map of the linear additive model
 * `x = M x + w s + b + u` from group `s` to `s_prime`, applied to `n` rows
 * of `x`. The result does not depend on `b` or the noise law.
 *
 * # Safety
 * `m` must hold `d*d` values, `w` `d` values, `x` and `out` `n*d` values.
 */
enum CftStatus cft_linear_counterfactual(const double *m,
                                         const double *w,
                                         size_t d,
                                         int64_t s,
                                         int64_t s_prime,
                                         const double *x,
                                         size_t n,
                                         double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CFTRANSPORT_H */
