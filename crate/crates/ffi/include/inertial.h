#ifndef INERTIAL_H
#define INERTIAL_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum InertialStatus {
  INERTIAL_STATUS_OK = 0,
  INERTIAL_STATUS_NULL_POINTER = 1,
  INERTIAL_STATUS_INVALID_ARGUMENT = 2,
  /**
   * Gap or eps condition violated.
   */
  INERTIAL_STATUS_CONDITION = 3,
  /**
   * `eps = 0` where a relaxation time is required.
   */
  INERTIAL_STATUS_PARABOLIC_LIMIT = 4,
  INERTIAL_STATUS_UNSUPPORTED = 5,
  INERTIAL_STATUS_NON_CONVERGENCE = 6,
  INERTIAL_STATUS_NON_FINITE = 7,
  INERTIAL_STATUS_CONFIG = 8,
  INERTIAL_STATUS_IO = 9,
  /**
   * Output buffer shorter than required.
   */
  INERTIAL_STATUS_BUFFER_TOO_SMALL = 10,
  INERTIAL_STATUS_INVALID_UTF8 = 11,
  /**
   * A Rust panic was caught at the boundary.
   */
  INERTIAL_STATUS_PANIC = 12,
} InertialStatus;

/**
 * Nonlinearity `F` acting on modal coefficients.
 */
typedef struct InertialNonlinearity InertialNonlinearity;

/**
 * Perron configuration bound to its sequence.
 */
typedef struct InertialPerron InertialPerron;

/**
 * Eigenvalue sequence `lambda_1 <= lambda_2 <= ...`.
 */
typedef struct InertialSequence InertialSequence;

/**
 * Roots of `eps mu^2 + mu + lambda = 0`.
 */
typedef struct InertialRoots {
  double mu_plus_re;
  double mu_plus_im;
  double mu_minus_re;
  double mu_minus_im;
} InertialRoots;

typedef struct InertialGapReport {
  double lambda_n;
  double lambda_n1;
  double gap;
  /**
   * Meaningful only when `theta_defined` is nonzero.
   */
  double theta;
  int theta_defined;
  /**
   * `2L / gap`.
   */
  double contraction;
  int gap_ok;
  int eps_ok;
  int admissible;
} InertialGapReport;

/**
 * Diagnostics of one Perron solve.
 */
typedef struct InertialPointInfo {
  size_t iterations;
  double contraction_observed;
  double fixed_point_residual;
  double boundary_defect;
} InertialPointInfo;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version, a static NUL-terminated string.
 */
const char *inertial_version(void);

/**
 * Message of the last failure on this thread; empty if none. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *inertial_last_error(void);

/**
 * Human-readable name of a status code (static string).
 */
const char *inertial_status_name(enum InertialStatus status);

/**
 * `lambda_k = (k pi / length)^2`, `k = 1..count`.
 */
enum InertialStatus inertial_sequence_dirichlet(double length,
                                                size_t count,
                                                struct InertialSequence **out_seq);

/**
 * Sequence from explicit values (positive, nondecreasing).
 */
enum InertialStatus inertial_sequence_from_values(const double *values,
                                                  size_t len,
                                                  struct InertialSequence **out_seq);

enum InertialStatus inertial_sequence_count(const struct InertialSequence *seq, size_t *out_count);

/**
 * `lambda_n` with `n` starting at 1.
 */
enum InertialStatus inertial_sequence_lambda(const struct InertialSequence *seq,
                                             size_t n,
                                             double *out_lambda);

void inertial_sequence_free(struct InertialSequence *seq);

enum InertialStatus inertial_characteristic_roots(double lambda,
                                                  double eps,
                                                  struct InertialRoots *out_roots);

/**
 * Gap conditions and weight for `(N, eps, L)`. A failing condition is
 * reported in the struct, not as an error status.
 */
enum InertialStatus inertial_gap_report(const struct InertialSequence *seq,
                                        size_t n,
                                        double eps,
                                        double lipschitz,
                                        struct InertialGapReport *out_report);

enum InertialStatus inertial_nonlinearity_zero(size_t modes, struct InertialNonlinearity **out_f);

/**
 * `F(u)_k = c u_k`.
 */
enum InertialStatus inertial_nonlinearity_diagonal(double c,
                                                   size_t modes,
                                                   struct InertialNonlinearity **out_f);

/**
 * Pointwise `f(u) = amplitude sin(frequency u)` in the sine basis of `seq`.
 */
enum InertialStatus inertial_nonlinearity_sine(const struct InertialSequence *seq,
                                               double amplitude,
                                               double frequency,
                                               size_t modes,
                                               struct InertialNonlinearity **out_f);

enum InertialStatus inertial_nonlinearity_lipschitz(const struct InertialNonlinearity *f,
                                                    double *out_l);

/**
 * `out = F(u)`; both buffers hold `modes` values.
 */
enum InertialStatus inertial_nonlinearity_apply(const struct InertialNonlinearity *f,
                                                const double *u,
                                                double *out_values,
                                                size_t len);

void inertial_nonlinearity_free(struct InertialNonlinearity *f);

/**
 * Perron setup for `(N, eps, L)` with `modes` retained modes. Fails with
 * `Condition` when no weight exists.
 */
enum InertialStatus inertial_perron_new(const struct InertialSequence *seq,
                                        size_t n,
                                        double eps,
                                        double lipschitz,
                                        size_t modes,
                                        struct InertialPerron **out_perron);

/**
 * Overrides the time step; 0 keeps the default.
 */
enum InertialStatus inertial_perron_set_step(struct InertialPerron *perron, double dt);

enum InertialStatus inertial_perron_theta(const struct InertialPerron *perron, double *out_theta);

void inertial_perron_free(struct InertialPerron *perron);

/**
 * `M(p)`: `p` has `n` entries, `out_u` and `out_v` hold `modes` values.
 * `out_info` may be null.
 */
enum InertialStatus inertial_construct_point(const struct InertialPerron *perron,
                                             const struct InertialNonlinearity *f,
                                             const double *p,
                                             size_t n,
                                             double *out_u,
                                             double *out_v,
                                             size_t modes,
                                             struct InertialPointInfo *out_info);

/**
 * Runs the damped-wave pipeline. `config_path` may be null for defaults;
 * with a non-null `out_dir` the report files are written there.
 * `out_all_pass` receives 1 when every check passes.
 */
enum InertialStatus inertial_wave1d_run(const char *config_path,
                                        const char *out_dir,
                                        int *out_all_pass);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* INERTIAL_H */
