#ifndef SCSA_H
#define SCSA_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible call.
typedef enum ScsaStatus {
  SCSA_STATUS_OK = 0,
  // A required pointer argument was null.
  SCSA_STATUS_NULL_POINTER = 1,
  // Invalid argument or precondition.
  SCSA_STATUS_DOMAIN = 2,
  // Eigensolver iteration cap hit.
  SCSA_STATUS_NO_CONVERGENCE = 3,
  // An analysis condition does not hold.
  SCSA_STATUS_CONDITION = 4,
  // A caller buffer is too small; the required length was written where
  // the function documents it.
  SCSA_STATUS_BUFFER_TOO_SMALL = 5,
  // Unexpected internal failure (a caught panic).
  SCSA_STATUS_INTERNAL = 6,
} ScsaStatus;

// Second-derivative discretization.
typedef enum ScsaScheme {
  SCSA_SCHEME_FOURIER = 0,
  SCSA_SCHEME_FINITE_DIFFERENCE = 1,
} ScsaScheme;

// Second-derivative matrix.
typedef struct ScsaD2 ScsaD2;

// Sampled signal on a uniform grid.
typedef struct ScsaSignal ScsaSignal;

// Bound states of one Schrödinger matrix.
typedef struct ScsaSpectrum ScsaSpectrum;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null. The pointer stays
// valid until the next failing call on the same thread.
const char *scsa_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *scsa_version(void);

// Wraps `m` samples on the grid from `a` to `b` (both included).
enum ScsaStatus scsa_signal_new(double a,
                                double b,
                                size_t m,
                                const double *values,
                                struct ScsaSignal **out);

// `sech^2(x - center)` sampled on the grid from `a` to `b`.
enum ScsaStatus scsa_signal_sech2(double a,
                                  double b,
                                  size_t m,
                                  double center,
                                  struct ScsaSignal **out);

void scsa_signal_free(struct ScsaSignal *s);

// Number of samples, 0 for a null handle.
size_t scsa_signal_len(const struct ScsaSignal *s);

// Grid spacing, NaN for a null handle.
double scsa_signal_dx(const struct ScsaSignal *s);

// Copies the samples into `out` (capacity `cap`); `len_out` may be null.
enum ScsaStatus scsa_signal_values(const struct ScsaSignal *s,
                                   double *out,
                                   size_t cap,
                                   size_t *len_out);

// Adds seeded Gaussian noise. With `use_snr` nonzero the noise is scaled to
// hit `snr_db` exactly and `variance` is ignored. `sigma_out` (may be null)
// receives the standard deviation actually used.
enum ScsaStatus scsa_signal_add_noise(const struct ScsaSignal *clean,
                                      double mean,
                                      double variance,
                                      uint64_t seed,
                                      int32_t use_snr,
                                      double snr_db,
                                      struct ScsaSignal **out,
                                      double *sigma_out);

// Second-derivative matrix of size `m` for spacing `dx`.
enum ScsaStatus scsa_d2_new(enum ScsaScheme scheme, size_t m, double dx, struct ScsaD2 **out);

// Matrix matching the grid of `s`.
enum ScsaStatus scsa_d2_for_signal(enum ScsaScheme scheme,
                                   const struct ScsaSignal *s,
                                   struct ScsaD2 **out);

void scsa_d2_free(struct ScsaD2 *d);

// Full SCSA at one `h`. Either output pointer may be null when not wanted.
enum ScsaStatus scsa_estimate(const struct ScsaSignal *s,
                              const struct ScsaD2 *d2,
                              double h,
                              struct ScsaSpectrum **spectrum_out,
                              struct ScsaSignal **estimate_out);

// One-shot denoising of a plain array: `values` and `out` both hold `m`
// samples on the grid from `a` to `b`. `n_h_out` may be null.
enum ScsaStatus scsa_denoise(const double *values,
                             size_t m,
                             double a,
                             double b,
                             enum ScsaScheme scheme,
                             double h,
                             double *out,
                             size_t *n_h_out);

void scsa_spectrum_free(struct ScsaSpectrum *s);

// Number of bound states, 0 for a null handle.
size_t scsa_spectrum_count(const struct ScsaSpectrum *s);

// Copies the kappas, largest first.
enum ScsaStatus scsa_spectrum_kappas(const struct ScsaSpectrum *s,
                                     double *out,
                                     size_t cap,
                                     size_t *len_out);

// Copies eigenvector `k` (paired with the k-th kappa), scaled so that
// `dx * sum psi^2 = 1`.
enum ScsaStatus scsa_spectrum_eigenvector(const struct ScsaSpectrum *s,
                                          size_t k,
                                          double *out,
                                          size_t cap,
                                          size_t *len_out);

// A-posteriori bound on `||y^noisy_h - y^clean_h||_2` for noise amplitude
// bound `b`.
enum ScsaStatus scsa_noise_bound(const struct ScsaSpectrum *s, double b, double *bound_out);

// Noise amplitude bound `B` and its probability `p`: three-sigma when
// `gaussian` is nonzero (needs `gamma = 3`), Chebyshev otherwise.
enum ScsaStatus scsa_amplitude_bound(double mean,
                                     double sigma,
                                     double gamma,
                                     int32_t gaussian,
                                     double *b_out,
                                     double *p_out);

// Biquad coefficients of the second-order low-pass with cutoff `wc`
// (rad/sample); `a[0]` is 1.
enum ScsaStatus scsa_butterworth2(double wc, double *b_out, double *a_out);

// Sweeps `h_grid` (`n` ascending values) on `noisy` and writes the
// recommended `h`. `no_interior_out` (may be null) is set to 1 when the
// filtered residual had no interior minimum.
enum ScsaStatus scsa_select_h(const struct ScsaSignal *noisy,
                              const struct ScsaD2 *d2,
                              const double *h_grid,
                              size_t n,
                              double wc,
                              double *h_out,
                              int32_t *no_interior_out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SCSA_H */
