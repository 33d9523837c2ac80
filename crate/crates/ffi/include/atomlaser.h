#ifndef ATOMLASER_H
#define ATOMLASER_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum AtomlaserStatus {
  ATOMLASER_STATUS_OK = 0,
  ATOMLASER_STATUS_NULL_POINTER = 1,
  ATOMLASER_STATUS_INVALID_ARGUMENT = 2,
  ATOMLASER_STATUS_DEGENERATE = 3,
  ATOMLASER_STATUS_TRUNCATION = 4,
  ATOMLASER_STATUS_RESIDUAL = 5,
  ATOMLASER_STATUS_NOT_POSITIVE = 6,
  ATOMLASER_STATUS_DOMAIN = 7,
  ATOMLASER_STATUS_SINGULAR = 8,
  ATOMLASER_STATUS_BUFFER_TOO_SMALL = 9,
  ATOMLASER_STATUS_INTERNAL = 10,
} AtomlaserStatus;

// Opaque exact strong-coupling distribution.
typedef struct AtomlaserExactDistribution AtomlaserExactDistribution;

// Opaque steady-state result.
typedef struct AtomlaserSteadyState AtomlaserSteadyState;

// Photon moments, inversion and Mandel Q. `q` is NaN and `q_defined` is 0
// when the mean photon number vanishes.
typedef struct AtomlaserMoments {
  double n1;
  double n2;
  double n3;
  double n4;
  double d;
  double q;
  int32_t q_defined;
} AtomlaserMoments;

typedef struct AtomlaserOdeCoeffs {
  double a02;
  double a03;
  double a10;
  double a11;
  double a12;
  double a20;
  double a21;
  double a22;
} AtomlaserOdeCoeffs;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copies the calling thread's last error message into `buf` (NUL-terminated,
// truncated to `cap - 1` bytes) and returns the full message length in bytes.
//
// # Safety
// `buf` must be null or valid for `cap` writes.
size_t atomlaser_last_error_message(char *buf, size_t cap);

// Solves the steady state at rates `(omega, eta, tau)` starting from a Fock
// cutoff `n_max` (grown automatically while the tail is heavy).
//
// # Safety
// `out` must be valid for a write of one pointer.
enum AtomlaserStatus atomlaser_steady_state(double omega,
                                            double eta,
                                            double tau,
                                            size_t n_max,
                                            double tol,
                                            struct AtomlaserSteadyState **out);

// # Safety
// `handle` must be null or a pointer from [`atomlaser_steady_state`] not yet
// freed.
void atomlaser_steady_state_free(struct AtomlaserSteadyState *handle);

// # Safety
// `handle` must be null or live; `out` null or writable.
enum AtomlaserStatus atomlaser_steady_state_moments(const struct AtomlaserSteadyState *handle,
                                                    struct AtomlaserMoments *out);

// Fock cutoff actually used, residual `max |L(ρ)|` and tail probability.
//
// # Safety
// `handle` must be null or live; each output pointer null or writable.
enum AtomlaserStatus atomlaser_steady_state_info(const struct AtomlaserSteadyState *handle,
                                                 size_t *n_max,
                                                 double *residual_norm,
                                                 double *tail_mass);

// Copies `ρ(0..=n_max)` into `buf`. Pass a null `buf` to query the length.
//
// # Safety
// `handle` must be null or live; `buf` null or valid for `cap` writes;
// `len_out` null or writable.
enum AtomlaserStatus atomlaser_steady_state_distribution(const struct AtomlaserSteadyState *handle,
                                                         double *buf,
                                                         size_t cap,
                                                         size_t *len_out);

// Exact strong-coupling distribution, cut at the first term below `tol`.
//
// # Safety
// `out` must be valid for a write of one pointer.
enum AtomlaserStatus atomlaser_exact_distribution(double tol,
                                                  struct AtomlaserExactDistribution **out);

// # Safety
// `handle` must be null or a pointer from [`atomlaser_exact_distribution`]
// not yet freed.
void atomlaser_exact_distribution_free(struct AtomlaserExactDistribution *handle);

// Copies the probabilities into `buf`. Pass a null `buf` to query the length.
//
// # Safety
// `handle` must be null or live; `buf` null or valid for `cap` writes;
// `len_out` null or writable.
enum AtomlaserStatus atomlaser_exact_distribution_probs(const struct AtomlaserExactDistribution *handle,
                                                        double *buf,
                                                        size_t cap,
                                                        size_t *len_out);

// Moments of the exact distribution; `d` is NaN.
//
// # Safety
// `handle` must be null or live; `out` null or writable.
enum AtomlaserStatus atomlaser_exact_distribution_moments(const struct AtomlaserExactDistribution *handle,
                                                          struct AtomlaserMoments *out);

// Mandel Q of the exact strong-coupling distribution.
//
// # Safety
// `out` must be null or writable.
enum AtomlaserStatus atomlaser_exact_q(double *out);

// Phase-averaged P function on `0 <= intensity < 1/2`.
//
// # Safety
// `out` must be null or writable.
enum AtomlaserStatus atomlaser_p_function(double intensity, double *out);

// Second-order closed form `(<n>, <n^2>)` at `omega = tau`, `eta = 0`.
//
// # Safety
// `n1` and `n2` must be null or writable.
enum AtomlaserStatus atomlaser_second_order(double tau, double *n1, double *n2);

// First-order closed form `(<n>, <n^2>)` at `omega = tau`, `eta = 0`.
//
// # Safety
// `n1` and `n2` must be null or writable.
enum AtomlaserStatus atomlaser_first_order(double tau, double *n1, double *n2);

// Mandel Q from the first two raw moments.
//
// # Safety
// `out` must be null or writable.
enum AtomlaserStatus atomlaser_mandel_q(double n1, double n2, double *out);

// Coefficients of `<n^2> + A <n> - B = 0`.
//
// # Safety
// `a` and `b` must be null or writable.
enum AtomlaserStatus atomlaser_quad_coeffs(double omega,
                                           double eta,
                                           double tau,
                                           double *a,
                                           double *b);

// Coefficients of the second-order equation for the P function.
//
// # Safety
// `out` must be null or writable.
enum AtomlaserStatus atomlaser_ode_coeffs(double omega,
                                          double eta,
                                          double tau,
                                          struct AtomlaserOdeCoeffs *out);

// `P(0)` implied by the mean photon number `n1`.
//
// # Safety
// `out` must be null or writable.
enum AtomlaserStatus atomlaser_boundary_p0(double omega,
                                           double eta,
                                           double tau,
                                           double n1,
                                           double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ATOMLASER_H */
