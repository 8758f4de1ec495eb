#ifndef SCHELLING_H
#define SCHELLING_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum SchellingStatus {
  SCHELLING_STATUS_OK = 0,
  SCHELLING_STATUS_NULL_POINTER = 1,
  SCHELLING_STATUS_INVALID_ARGUMENT = 2,
  SCHELLING_STATUS_DIMENSION_MISMATCH = 3,
  SCHELLING_STATUS_INVALID_SPIN = 4,
  SCHELLING_STATUS_BOUNDARY_CONTACT = 5,
  SCHELLING_STATUS_HYPOTHESIS = 6,
  SCHELLING_STATUS_BUDGET = 7,
  SCHELLING_STATUS_IO = 8,
  SCHELLING_STATUS_PARSE = 9,
  SCHELLING_STATUS_INTERNAL = 10,
  SCHELLING_STATUS_PANIC = 11,
} SchellingStatus;

/**
 * Weight law for first-passage percolation.
 */
typedef enum SchellingWeightKind {
  /**
   * Constant weight `param`.
   */
  SCHELLING_WEIGHT_KIND_DETERMINISTIC = 0,
  /**
   * Exponential with mean `param`.
   */
  SCHELLING_WEIGHT_KIND_EXPONENTIAL = 1,
  /**
   * Sum of `param` exponentials with rates `param, param-1, ..., 1`.
   */
  SCHELLING_WEIGHT_KIND_COUPON_COLLECTOR = 2,
} SchellingWeightKind;

/**
 * First-passage handle.
 */
typedef struct SchellingFpp SchellingFpp;

/**
 * Simulation handle.
 */
typedef struct SchellingSim SchellingSim;

typedef struct SchellingFlip {
  double time;
  size_t row;
  size_t col;
  int8_t new_spin;
} SchellingFlip;

typedef struct SchellingAbsorption {
  double absorption_time;
  uint64_t total_flips;
  /**
   * Nonzero when the event cap stopped the run.
   */
  bool truncated;
} SchellingAbsorption;

typedef struct SchellingNodeBias {
  double p_eps_biased;
  double p_unhappy;
  double p_viral;
  /**
   * NaN when the node can never be biased.
   */
  double p_viral_given_biased;
  double ln_viral_given_biased;
} SchellingNodeBias;

typedef struct SchellingMargin {
  uint64_t min_inside_count;
  double required;
  bool pass;
  uint64_t nodes_checked;
} SchellingMargin;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. Valid until the
 * next call into the library from the same thread.
 */
const char *schelling_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *schelling_version(void);

/**
 * Torus with i.i.d. uniform spins drawn from `seed`.
 */
enum SchellingStatus schelling_sim_new(size_t n,
                                       size_t w,
                                       double tau,
                                       uint64_t seed,
                                       struct SchellingSim **out);

/**
 * Torus from `n * n` row-major spins in `{-1, +1}`.
 */
enum SchellingStatus schelling_sim_from_spins(size_t n,
                                              size_t w,
                                              double tau,
                                              uint64_t seed,
                                              const int8_t *spins,
                                              size_t len,
                                              struct SchellingSim **out);

void schelling_sim_free(struct SchellingSim *sim);

/**
 * One event. `flipped` is set false when the state was already absorbed.
 */
enum SchellingStatus schelling_sim_step(struct SchellingSim *sim,
                                        struct SchellingFlip *flip,
                                        bool *flipped);

enum SchellingStatus schelling_sim_run_until_absorbed(struct SchellingSim *sim,
                                                      uint64_t max_events,
                                                      struct SchellingAbsorption *out);

enum SchellingStatus schelling_sim_run_until_time(struct SchellingSim *sim, double t_stop);

/**
 * Records every flip for [`schelling_sim_write_flip_log`].
 */
enum SchellingStatus schelling_sim_set_logging(struct SchellingSim *sim, bool on);

/**
 * Side length, or 0 for a null handle.
 */
size_t schelling_sim_n(const struct SchellingSim *sim);

double schelling_sim_time(const struct SchellingSim *sim);

uint64_t schelling_sim_flips(const struct SchellingSim *sim);

size_t schelling_sim_unhappy_count(const struct SchellingSim *sim);

bool schelling_sim_is_absorbed(const struct SchellingSim *sim);

/**
 * Copies the `n * n` row-major spins into `buf`.
 */
enum SchellingStatus schelling_sim_copy_spins(const struct SchellingSim *sim,
                                              int8_t *buf,
                                              size_t len);

enum SchellingStatus schelling_sim_bias(const struct SchellingSim *sim,
                                        size_t row,
                                        size_t col,
                                        int64_t *out);

/**
 * Largest `r` with `N_r(row, col)` monochromatic.
 */
enum SchellingStatus schelling_sim_mono_radius(const struct SchellingSim *sim,
                                               size_t row,
                                               size_t col,
                                               size_t *out);

enum SchellingStatus schelling_sim_write_pgm(const struct SchellingSim *sim, const char *path);

enum SchellingStatus schelling_sim_write_flip_log(const struct SchellingSim *sim, const char *path);

/**
 * Passage times from the center of a `size x size` grid of sampled weights.
 */
enum SchellingStatus schelling_fpp_new(enum SchellingWeightKind kind,
                                       double param,
                                       size_t size,
                                       uint64_t seed,
                                       uint64_t run_index,
                                       struct SchellingFpp **out);

void schelling_fpp_free(struct SchellingFpp *fpp);

size_t schelling_fpp_size(const struct SchellingFpp *fpp);

enum SchellingStatus schelling_fpp_passage(const struct SchellingFpp *fpp,
                                           size_t row,
                                           size_t col,
                                           double *out);

/**
 * Inner and outer L-infinity radii of the ball `B(t)`.
 */
enum SchellingStatus schelling_fpp_radii(const struct SchellingFpp *fpp,
                                         double t,
                                         size_t *inner,
                                         size_t *outer);

enum SchellingStatus schelling_node_bias(size_t w, double eps, struct SchellingNodeBias *out);

/**
 * `ln P(X >= k)` for `X ~ Bin(n, 1/2)`. `rel_err` bounds the relative error
 * of `exp(ln_value)` and is 0 for exact evaluation.
 */
enum SchellingStatus schelling_binom_ln_upper_tail(uint64_t n,
                                                   int64_t k,
                                                   double *ln_value,
                                                   double *rel_err);

/**
 * Worst-case inside count over the shell of the radius-`radius` disc.
 */
enum SchellingStatus schelling_persistence_margin(uint64_t radius,
                                                  size_t w,
                                                  double eps,
                                                  struct SchellingMargin *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SCHELLING_H */
