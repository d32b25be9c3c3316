#ifndef KURAMOTO_H
#define KURAMOTO_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Number of inequalities in a certificate.
#define KD_INEQUALITIES 8

typedef enum KdStatus {
  KD_STATUS_OK = 0,
  KD_STATUS_INVALID_ARGUMENT = 1,
  KD_STATUS_DIMENSION_MISMATCH = 2,
  KD_STATUS_INDEX_OUT_OF_RANGE = 3,
  KD_STATUS_INFEASIBLE = 4,
  // The state blew up; a partial trajectory may still be returned.
  KD_STATUS_DIVERGED = 5,
  KD_STATUS_STEP_BUDGET = 6,
  KD_STATUS_TOO_COARSE = 7,
  KD_STATUS_NULL_POINTER = 8,
  KD_STATUS_PANIC = 9,
} KdStatus;

// Model parameters and interaction digraph.
typedef struct KdModel KdModel;

// Recorded states of one simulation.
typedef struct KdTrajectory KdTrajectory;

typedef struct KdTheory {
  double gamma;
  double d_inf;
  double epsilon;
  // Convexity parameter, must exceed 2.
  uint32_t c;
} KdTheory;

typedef struct KdCondition {
  bool passed;
  double lhs;
  double rhs;
  // `rhs - lhs`; negative means violated.
  double margin;
} KdCondition;

typedef struct KdConditionReport {
  bool all_pass;
  struct KdCondition gamma_bound;
  struct KdCondition c_lower;
  struct KdCondition c_initial;
  struct KdCondition mk_con1;
  struct KdCondition mk_con2;
  struct KdCondition mk_con3;
  struct KdCondition mk_con3_entrance;
  struct KdCondition mk_con4;
  struct KdCondition quarter_circle;
  uint32_t c;
  double eta;
  double m_n;
  double lambda;
  double lambda_tilde;
  double d_theta0;
  double d_omega0;
  double d_a0;
} KdConditionReport;

typedef struct KdIntegrator {
  double dt;
  double t_end;
  uint64_t record_stride;
  // 0 selects the library default.
  uint64_t max_steps;
  bool force_dt;
} KdIntegrator;

// Per-inequality arrays follow this order: phase_second_order,
// acceleration_first_order, frequency_first_order, phase_energy_gronwall,
// frequency_diameter_bound, frequency_second_order, jerk_first_order,
// frequency_energy_gronwall.
typedef struct KdCertificate {
  bool passed;
  uint64_t samples;
  uint64_t admissible;
  double admissible_fraction;
  uint64_t order_changes;
  bool has_t_star;
  double t_star;
  bool has_fitted_rate;
  double fitted_rate;
  double lambda;
  double lambda_tilde;
  uint64_t evaluated[KD_INEQUALITIES];
  uint64_t satisfied[KD_INEQUALITIES];
  double fraction[KD_INEQUALITIES];
  double worst_residual[KD_INEQUALITIES];
} KdCertificate;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread; empty after a success.
// The pointer stays valid until the next call into this library from the
// same thread.
const char *kd_last_error(void);

// Library version as a static NUL-terminated string.
const char *kd_version(void);

// Creates a model. `adjacency` is `n*n` row-major 0/1 entries where
// `adjacency[i*n + j] = 1` means oscillator `j` influences `i`.
//
// # Safety
// `omega_nat` must point to `n` doubles, `adjacency` to `n*n` bytes, and
// `out` to writable storage for one pointer.
enum KdStatus kd_model_new(size_t n,
                           double m,
                           double kappa,
                           double alpha,
                           const double *omega_nat,
                           const uint8_t *adjacency,
                           struct KdModel **out);

// # Safety
// `model` must come from [`kd_model_new`] and not be used afterwards.
void kd_model_free(struct KdModel *model);

// Number of oscillators, or 0 for a NULL model.
//
// # Safety
// `model` must be NULL or a live handle.
size_t kd_model_n(const struct KdModel *model);

// # Safety
// `model` must be a live handle and `out` writable.
enum KdStatus kd_model_is_strongly_connected(const struct KdModel *model, bool *out);

// Accelerations `a = ω̇` at the state `(theta, omega)`.
//
// # Safety
// `theta`, `omega` and `out` must each hold `kd_model_n(model)` doubles.
enum KdStatus kd_acceleration(const struct KdModel *model,
                              const double *theta,
                              const double *omega,
                              double *out);

// Jerks `b = ȧ` at the state `(theta, omega)`.
//
// # Safety
// `theta`, `omega` and `out` must each hold `kd_model_n(model)` doubles.
enum KdStatus kd_jerk(const struct KdModel *model,
                      const double *theta,
                      const double *omega,
                      double *out);

// `η = 1 − 4/(c+2)`.
//
// # Safety
// `out` must be writable.
enum KdStatus kd_eta(uint32_t c, double *out);

// Gap between the upper and lower order-weighted combinations of `z`.
//
// # Safety
// `z` must hold `n` doubles and `out` be writable.
enum KdStatus kd_spread(const double *z, size_t n, uint32_t c, double *out);

// Smallest admissible convexity parameter for the given bounds and
// initial phase diameter.
//
// # Safety
// `model` must be live, `out` writable.
enum KdStatus kd_auto_select_c(const struct KdModel *model,
                               double gamma,
                               double d_inf,
                               double epsilon,
                               double d_theta0,
                               uint32_t *out);

// Evaluates the sufficient conditions at the initial state.
//
// # Safety
// `theta0`/`omega0` must hold `kd_model_n(model)` doubles; `theory` and
// `out` must be valid.
enum KdStatus kd_check_conditions(const struct KdModel *model,
                                  const double *theta0,
                                  const double *omega0,
                                  const struct KdTheory *theory,
                                  struct KdConditionReport *out);

// Integrates from `t = 0`. On [`KdStatus::Diverged`] `*out` holds the
// finite prefix of the run; on other failures it is NULL.
//
// # Safety
// `theta0`/`omega0` must hold `kd_model_n(model)` doubles; `cfg` valid;
// `out` writable.
enum KdStatus kd_simulate(const struct KdModel *model,
                          const double *theta0,
                          const double *omega0,
                          const struct KdIntegrator *cfg,
                          struct KdTrajectory **out);

// # Safety
// `traj` must come from [`kd_simulate`] and not be used afterwards.
void kd_trajectory_free(struct KdTrajectory *traj);

// Number of recorded samples, or 0 for NULL.
//
// # Safety
// `traj` must be NULL or live.
size_t kd_trajectory_len(const struct KdTrajectory *traj);

// Copies sample `k`. Any of `t`, `theta`, `omega` may be NULL to skip it.
//
// # Safety
// `traj` must be live; non-NULL `theta`/`omega` must hold `n` doubles.
enum KdStatus kd_trajectory_sample(const struct KdTrajectory *traj,
                                   size_t k,
                                   double *t,
                                   double *theta,
                                   double *omega);

// Checks the energy inequalities along `traj` at relative tolerance `tol`;
// `passed` requires every inequality to hold on at least `threshold` of
// its evaluated samples.
//
// # Safety
// `traj`, `theory` and `out` must be valid.
enum KdStatus kd_certify(const struct KdTrajectory *traj,
                         const struct KdTheory *theory,
                         double tol,
                         double threshold,
                         struct KdCertificate *out);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* KURAMOTO_H */
