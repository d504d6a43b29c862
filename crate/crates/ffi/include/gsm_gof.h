#ifndef GSM_GOF_H
#define GSM_GOF_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum GsmIllPosedness {
  GSM_ILL_POSEDNESS_MILD = 0,
  GSM_ILL_POSEDNESS_SEVERE = 1,
} GsmIllPosedness;

typedef enum GsmRateKind {
  GSM_RATE_KIND_UPPER = 0,
  GSM_RATE_KIND_LOWER = 1,
  GSM_RATE_KIND_KNOWN_OPERATOR = 2,
} GsmRateKind;

typedef enum GsmSmoothness {
  GSM_SMOOTHNESS_ORDINARY = 0,
  GSM_SMOOTHNESS_SUPER = 1,
} GsmSmoothness;

typedef enum GsmStatus {
  GSM_STATUS_OK = 0,
  GSM_STATUS_INVALID_ARGUMENT = 1,
  GSM_STATUS_NULL_POINTER = 2,
  GSM_STATUS_OVERFLOW = 3,
  GSM_STATUS_INFEASIBLE = 4,
  GSM_STATUS_DEGENERATE = 5,
  GSM_STATUS_DOMAIN = 6,
  GSM_STATUS_BRACKETING = 7,
  GSM_STATUS_PANIC = 99,
} GsmStatus;

/**
 * Opaque regime handle.
 */
typedef struct GsmRegime GsmRegime;

typedef struct GsmUpperBound {
  double radius_sq;
  size_t argmin_d;
  size_t m0;
  bool m0_truncated;
  size_t m1;
  bool m1_truncated;
} GsmUpperBound;

typedef struct GsmLowerBound {
  double radius_sq;
  double sigma_component;
  double epsilon_component;
  size_t m2;
  bool m2_truncated;
  double k;
} GsmLowerBound;

/**
 * Test parameters. `d = 0` selects the adaptive dimension.
 */
typedef struct GsmTestParams {
  double epsilon;
  double sigma;
  double alpha;
  double beta;
  double kappa;
  size_t d;
  size_t j_max;
} GsmTestParams;

/**
 * Test outcome. The threshold fields are NaN when `degenerate` is set.
 */
typedef struct GsmTestReport {
  size_t m_hat;
  bool m_truncated;
  size_t d_used;
  double statistic;
  double threshold;
  double noise_term;
  double deviation_term;
  double bias_term;
  bool reject;
  bool degenerate;
} GsmTestReport;

typedef struct GsmErrorEstimate {
  double p_hat;
  double se;
  size_t n_reps;
  size_t count;
  size_t n_degenerate;
} GsmErrorEstimate;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer is
 * valid until the next failing call on the same thread.
 */
const char *gsm_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *gsm_version(void);

enum GsmStatus gsm_regime_new(enum GsmIllPosedness b_kind,
                              enum GsmSmoothness a_kind,
                              double t,
                              double s,
                              double c_b,
                              double c_a,
                              struct GsmRegime **out_handle);

/**
 * Regime from a label such as `"severe-super"`, with unit constants.
 */
enum GsmStatus gsm_regime_parse(const char *label,
                                double t,
                                double s,
                                struct GsmRegime **out_handle);

/**
 * Releases a handle; null is a no-op.
 */
void gsm_regime_free(struct GsmRegime *handle);

/**
 * `b_j`, `j >= 1`.
 */
enum GsmStatus gsm_regime_b(const struct GsmRegime *handle, size_t j, double *out_value);

/**
 * `a_j`, `j >= 1`.
 */
enum GsmStatus gsm_regime_a(const struct GsmRegime *handle, size_t j, double *out_value);

/**
 * `Σ_{j<=d} b_j^{-4}`.
 */
enum GsmStatus gsm_regime_cumulative_b_inv4(const struct GsmRegime *handle,
                                            size_t d,
                                            double *out_value);

enum GsmStatus gsm_upper_bound(const struct GsmRegime *handle,
                               double epsilon,
                               double sigma,
                               double alpha,
                               double beta,
                               double kappa,
                               size_t j_max,
                               struct GsmUpperBound *out_bound);

/**
 * Lower bound with the default prior constants `C₀ = 1/2`, `C₁ = 2`.
 */
enum GsmStatus gsm_lower_bound(const struct GsmRegime *handle,
                               double epsilon,
                               double sigma,
                               double alpha,
                               double beta,
                               size_t j_max,
                               struct GsmLowerBound *out_bound);

enum GsmStatus gsm_rate(const struct GsmRegime *handle,
                        double epsilon,
                        double sigma,
                        enum GsmRateKind kind,
                        double *out_value);

/**
 * Fills `y_out[0..j_max]` and `x_out[0..j_max]` with one draw of the model.
 */
enum GsmStatus gsm_simulate(const struct GsmRegime *handle,
                            const double *theta,
                            size_t theta_len,
                            double epsilon,
                            double sigma,
                            uint64_t seed,
                            size_t j_max,
                            double *y_out,
                            double *x_out);

/**
 * Runs the test on observations of length `len >= params.j_max`.
 */
enum GsmStatus gsm_run_test(const struct GsmRegime *handle,
                            const double *y,
                            const double *x,
                            size_t len,
                            const double *theta0,
                            size_t theta0_len,
                            const struct GsmTestParams *params,
                            struct GsmTestReport *out_report);

/**
 * Monte Carlo first-kind error. `workers = 0` uses all logical CPUs.
 */
enum GsmStatus gsm_estimate_alpha(const struct GsmRegime *handle,
                                  const double *theta0,
                                  size_t theta0_len,
                                  const struct GsmTestParams *params,
                                  size_t n_reps,
                                  uint64_t seed,
                                  size_t workers,
                                  struct GsmErrorEstimate *out_estimate);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GSM_GOF_H */
