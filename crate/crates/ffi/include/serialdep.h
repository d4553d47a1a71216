#ifndef SERIALDEP_H
#define SERIALDEP_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SdCopulaFamily {
  SD_GAUSSIAN = 0,
  SD_GUMBEL = 1,
  SD_CLAYTON = 2,
  SD_AMH = 3,
} SdCopulaFamily;

typedef enum SdQueueMeasure {
  SD_TAIL_PROBABILITY = 0,
  SD_MEAN_WAITING = 1,
} SdQueueMeasure;

typedef enum SdStatus {
  SD_OK = 0,
  SD_INVALID_ARGUMENT = 1,
  SD_CONFIG_ERROR = 2,
  SD_NUMERIC_ERROR = 3,
  SD_NULL_POINTER = 4,
  SD_PANIC = 5,
} SdStatus;

/**
 * A trajectory cost `h(X_1, …, X_T)`.
 */
typedef struct SdCost SdCost;

/**
 * A baseline marginal law.
 */
typedef struct SdMarginal SdMarginal;

/**
 * Cost callback: `path` holds `len` inputs; must be safe to call from
 * several threads at once.
 */
typedef double (*SdCostFn)(const double *path, size_t len, void *user_data);

/**
 * One replication of the nested ANOVA estimator.
 */
typedef struct SdAnovaSample {
  double value;
  double s_i2;
  double s_e2;
} SdAnovaSample;

/**
 * Delta-method interval for a coefficient `√Var₀(·)`.
 */
typedef struct SdCoefficient {
  double point;
  double ci_low;
  double ci_high;
  double alpha;
  double w_mean;
  double w_sd;
  size_t reps;
} SdCoefficient;

/**
 * One grid point of a worst-case band.
 */
typedef struct SdBandRow {
  double eta1;
  double eta2;
  double lower;
  double upper;
  double lower_outer;
  double upper_outer;
  double lower_conservative;
  double upper_conservative;
} SdBandRow;

typedef struct SdOracle {
  double e0h;
  double var_r;
  double xi1;
  double xi2;
  double var_s;
} SdOracle;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. Valid until the
 * next call into the library from the same thread.
 */
const char *sd_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *sd_version(void);

/**
 * Standard normal quantile.
 *
 * # Safety
 * `result` must be valid for writes.
 */
enum SdStatus sd_norm_quantile(double p, double *result);

/**
 * Student-t quantile with `df` degrees of freedom.
 *
 * # Safety
 * `result` must be valid for writes.
 */
enum SdStatus sd_student_t_quantile(double p, uint64_t df, double *result);

/**
 * φ² of a `rows × cols` joint pmf stored row-major.
 *
 * # Safety
 * `pmf` must point to `rows * cols` readable doubles; `result` must be
 * valid for writes.
 */
enum SdStatus sd_phi2_discrete(size_t rows, size_t cols, const double *pmf, double *result);

/**
 * φ² of a copula by clipped tensor quadrature, with the clipped mass.
 *
 * # Safety
 * `value` and `clipped_mass` must be valid for writes.
 */
enum SdStatus sd_copula_phi2(enum SdCopulaFamily family,
                             double param,
                             size_t grid_size,
                             double *value,
                             double *clipped_mass);

/**
 * Uniform law on `[a, b]`.
 *
 * # Safety
 * `handle` must be valid for writes.
 */
enum SdStatus sd_marginal_uniform(double a, double b, struct SdMarginal **handle);

/**
 * Exponential law with the given rate.
 *
 * # Safety
 * `handle` must be valid for writes.
 */
enum SdStatus sd_marginal_exponential(double rate, struct SdMarginal **handle);

/**
 * Normal law with the given mean and variance.
 *
 * # Safety
 * `handle` must be valid for writes.
 */
enum SdStatus sd_marginal_normal(double mean, double variance, struct SdMarginal **handle);

/**
 * Finite law on `values` with probabilities `probs`, both of length `len`.
 *
 * # Safety
 * `values` and `probs` must point to `len` readable doubles; `handle` must
 * be valid for writes.
 */
enum SdStatus sd_marginal_finite(const double *values,
                                 const double *probs,
                                 size_t len,
                                 struct SdMarginal **handle);

/**
 * Releases a marginal; NULL is ignored.
 *
 * # Safety
 * `handle` must come from an `sd_marginal_*` constructor and not be used
 * afterwards.
 */
void sd_marginal_free(struct SdMarginal *handle);

/**
 * M/M/1 queue cost over the first `customer` interarrival times.
 *
 * # Safety
 * `handle` must be valid for writes.
 */
enum SdStatus sd_cost_queue(double arrival_rate,
                            double service_rate,
                            size_t customer,
                            enum SdQueueMeasure measure,
                            double threshold,
                            struct SdCost **handle);

/**
 * `|H_e|` of discrete delta hedging over the `maturity/dt` log-increments.
 *
 * # Safety
 * `handle` must be valid for writes.
 */
enum SdStatus sd_cost_hedge(double maturity,
                            double dt,
                            double x0,
                            double strike,
                            double mu,
                            double sigma,
                            double rate,
                            struct SdCost **handle);

/**
 * A cost computed by `f` on paths of length `horizon`. `f` may be called
 * concurrently from several threads.
 *
 * # Safety
 * `f` must stay callable, and `user_data` valid, until the handle is freed;
 * `handle` must be valid for writes.
 */
enum SdStatus sd_cost_callback(size_t horizon, SdCostFn f, void *user_data, struct SdCost **handle);

/**
 * The baseline input law of a built-in cost (interarrival times or
 * log-increments). Callback costs have none.
 *
 * # Safety
 * `cost` must be a live cost handle; `handle` must be valid for writes.
 */
enum SdStatus sd_cost_baseline_marginal(const struct SdCost *cost, struct SdMarginal **handle);

/**
 * Input length `T` of a cost.
 *
 * # Safety
 * `cost` must be a live cost handle; `result` must be valid for writes.
 */
enum SdStatus sd_cost_horizon(const struct SdCost *cost, size_t *result);

/**
 * Releases a cost; NULL is ignored.
 *
 * # Safety
 * `handle` must come from an `sd_cost_*` constructor and not be used
 * afterwards.
 */
void sd_cost_free(struct SdCost *handle);

/**
 * Monte Carlo `E₀[h]` under i.i.d. inputs.
 *
 * # Safety
 * Handles must be live; `mean` and `stderr` must be valid for writes.
 */
enum SdStatus sd_baseline_mean(const struct SdCost *cost,
                               const struct SdMarginal *marginal,
                               size_t samples,
                               uint64_t seed,
                               double *mean,
                               double *stderr);

/**
 * One replication of the nested ANOVA estimator of `Var₀(R)` (`lag = 1`)
 * or `Var₀(S)` (`lag = 2`), on substream `replication` of `seed`.
 *
 * # Safety
 * Handles must be live; `result` must be valid for writes.
 */
enum SdStatus sd_anova_sample(const struct SdCost *cost,
                              const struct SdMarginal *marginal,
                              uint32_t lag,
                              size_t outer,
                              size_t inner,
                              uint64_t seed,
                              uint64_t replication,
                              struct SdAnovaSample *result);

/**
 * `reps` replications of [`sd_anova_sample`] (replications `0..reps`),
 * followed by the delta-method interval at level `1 − alpha`.
 *
 * # Safety
 * Handles must be live; `values` must have room for `reps` doubles (or be
 * NULL); `coefficient` must be valid for writes.
 */
enum SdStatus sd_estimate_coefficient(const struct SdCost *cost,
                                      const struct SdMarginal *marginal,
                                      uint32_t lag,
                                      size_t outer,
                                      size_t inner,
                                      size_t reps,
                                      uint64_t seed,
                                      double alpha,
                                      double *values,
                                      struct SdCoefficient *coefficient);

/**
 * Delta-method interval from `len` unbiased variance samples.
 *
 * # Safety
 * `values` must point to `len` readable doubles; `coefficient` must be
 * valid for writes.
 */
enum SdStatus sd_coefficient_ci(const double *values,
                                size_t len,
                                double alpha,
                                struct SdCoefficient *coefficient);

/**
 * First-order band `baseline ± Ξ₁√η` over `len` budgets; `eta2` is 0.
 *
 * # Safety
 * `xi1` must be readable, `etas` must hold `len` doubles and `rows` must
 * have room for `len` rows.
 */
enum SdStatus sd_first_order_band(double baseline,
                                  double baseline_se,
                                  const struct SdCoefficient *xi1,
                                  const double *etas,
                                  size_t len,
                                  struct SdBandRow *rows);

/**
 * Two-lag band `baseline ± (Ξ₁√η₁ + √Var₀(S)·√η₂)` over the product of the
 * grids, `eta1` outermost.
 *
 * # Safety
 * Coefficient pointers must be readable, the grids must hold `len1` and
 * `len2` doubles and `rows` must have room for `len1 * len2` rows.
 */
enum SdStatus sd_two_lag_band(double baseline,
                              double baseline_se,
                              const struct SdCoefficient *xi1,
                              const struct SdCoefficient *coef_s,
                              const double *eta1,
                              size_t len1,
                              const double *eta2,
                              size_t len2,
                              struct SdBandRow *rows);

/**
 * Exact `E₀h`, `Var₀(R)`, `Ξ₁`, `Ξ₂` and `Var₀(S)` by enumerating all
 * `len^horizon` outcomes of an i.i.d. finite input.
 *
 * # Safety
 * `values` and `probs` must hold `len` doubles; `f` is called on this
 * thread only; `result` must be valid for writes.
 */
enum SdStatus sd_enumeration_oracle(const double *values,
                                    const double *probs,
                                    size_t len,
                                    SdCostFn f,
                                    void *user_data,
                                    size_t horizon,
                                    struct SdOracle *result);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SERIALDEP_H */
