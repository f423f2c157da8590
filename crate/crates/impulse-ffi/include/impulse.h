#ifndef IMPULSE_H
#define IMPULSE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Status code returned by every fallible entry point.
typedef enum {
  IMPULSE_STATUS_OK = 0,
  IMPULSE_STATUS_NULL_POINTER = 1,
  IMPULSE_STATUS_INVALID_ARGUMENT = 2,
  IMPULSE_STATUS_INVALID_CONFIG = 3,
  IMPULSE_STATUS_DOMAIN_ERROR = 4,
  IMPULSE_STATUS_NOT_CONVERGED = 5,
  IMPULSE_STATUS_CERTIFICATE_NOT_FOUND = 6,
  IMPULSE_STATUS_UNSUPPORTED = 7,
  IMPULSE_STATUS_INTERNAL_PANIC = 8,
} ImpulseStatus;

// Opaque splitting certificate.
typedef struct ImpulseCertificateHandle ImpulseCertificateHandle;

// Opaque impulse system (maps, impulse-time law, domain).
typedef struct ImpulseSystemHandle ImpulseSystemHandle;

// Average-contraction report in C layout.
typedef struct {
  double l0;
  double l1;
  double mean_time;
  double expectation;
  double threshold;
  double stationary_log_mean;
  bool satisfied;
  bool has_max_mean_time;
  double max_mean_time;
} ImpulseContractionReport;

// Synchronization-test report in C layout.
typedef struct {
  double fraction_synchronized;
  bool has_mean_log_lipschitz;
  double mean_log_lipschitz;
} ImpulseSyncReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a NUL-terminated static string.
const char *impulse_version(void);

// Closed-form limit CDF of the bundled worked system.
double impulse_example_cdf(double a);

// Builds a system from a JSON system spec
// (`{"domain": …, "f": …, "g": …, "times": …}`). The handle must be
// released with [`impulse_system_free`].
//
// # Safety
// `json` must be a valid NUL-terminated string and `out` a valid pointer.
ImpulseStatus impulse_system_from_json(const char *json, ImpulseSystemHandle **out);

// Releases a system handle. Null is a no-op.
//
// # Safety
// `handle` must come from [`impulse_system_from_json`] and not be used after.
void impulse_system_free(ImpulseSystemHandle *handle);

// Evaluates the two-constant average-contraction criterion.
//
// # Safety
// `out` must be a valid pointer.
ImpulseStatus impulse_check_contraction(double l0,
                                        double l1,
                                        double mean_time,
                                        ImpulseContractionReport *out);

// Simulates `count` trajectories for `steps` steps from a uniform start and
// writes the final positions (sorted) into `out_values` (caller-allocated,
// length `count`). Deterministic in `(seed, count, steps)`.
//
// # Safety
// `out_values` must point to at least `count` doubles.
ImpulseStatus impulse_simulate_ensemble(const ImpulseSystemHandle *handle,
                                        uint64_t steps,
                                        uint64_t count,
                                        uint64_t seed,
                                        double *out_values);

// Monte-Carlo synchronization test over reversed-chain paths.
//
// # Safety
// `out` must be a valid pointer.
ImpulseStatus impulse_synchronization_test(const ImpulseSystemHandle *handle,
                                           uint64_t paths,
                                           uint64_t path_len,
                                           double tol,
                                           uint64_t seed,
                                           ImpulseSyncReport *out);

// Bounded search for a splitting certificate. On success the handle must be
// released with [`impulse_certificate_free`].
//
// # Safety
// `out` must be a valid pointer.
ImpulseStatus impulse_find_splitting(const ImpulseSystemHandle *handle,
                                     uint64_t max_len,
                                     ImpulseCertificateHandle **out);

// Splitting certificate via the attracting-fixed-point construction.
//
// # Safety
// `out` must be a valid pointer.
ImpulseStatus impulse_fixed_point_splitting(const ImpulseSystemHandle *handle,
                                            ImpulseCertificateHandle **out);

// Gap between the two certificate images.
//
// # Safety
// Pointers must be valid.
ImpulseStatus impulse_certificate_gap(const ImpulseCertificateHandle *cert, double *out);

// Length of certificate word `which` (0 or 1).
//
// # Safety
// Pointers must be valid.
ImpulseStatus impulse_certificate_word_len(const ImpulseCertificateHandle *cert,
                                           uint32_t which,
                                           size_t *out);

// Copies certificate word `which` (chain order) into `buf`.
//
// # Safety
// `buf` must point to at least `len` entries as reported by
// [`impulse_certificate_word_len`].
ImpulseStatus impulse_certificate_word(const ImpulseCertificateHandle *cert,
                                       uint32_t which,
                                       uint64_t *buf,
                                       size_t len);

// Releases a certificate handle. Null is a no-op.
//
// # Safety
// `cert` must come from a certificate-producing call and not be used after.
void impulse_certificate_free(ImpulseCertificateHandle *cert);

// Re-validates a certificate given as two explicit words; writes the
// recomputed image gap on success.
//
// # Safety
// Word pointers must reference `len_a` / `len_b` entries.
ImpulseStatus impulse_validate_certificate(const ImpulseSystemHandle *handle,
                                           const uint64_t *seq_a,
                                           size_t len_a,
                                           const uint64_t *seq_b,
                                           size_t len_b,
                                           double *gap_out);

// Iterates the transfer operator from a uniform seed and writes the CDF of
// the limiting space marginal at the `bins + 1` grid edges.
//
// # Safety
// `out_cdf` must point to `bins + 1` doubles; `converged` must be valid.
ImpulseStatus impulse_evolve_cdf(const ImpulseSystemHandle *handle,
                                 uint64_t bins,
                                 uint64_t states,
                                 uint64_t max_iter,
                                 double tol,
                                 double *out_cdf,
                                 bool *converged);

// Computes the collapsed stationary law, lifts it, and writes the CDF of the
// lifted space marginal at the `bins + 1` grid edges together with the
// fixed-point residual.
//
// # Safety
// `out_cdf` must point to `bins + 1` doubles; `residual_out` must be valid.
ImpulseStatus impulse_stationary_cdf(const ImpulseSystemHandle *handle,
                                     uint64_t bins,
                                     uint64_t states,
                                     double *out_cdf,
                                     double *residual_out);

// Frees a string returned by this library (reserved for future accessors).
//
// # Safety
// `s` must come from this library and not be used after.
void impulse_string_free(char *s);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* IMPULSE_H */
