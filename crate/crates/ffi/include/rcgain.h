/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#ifndef RCGAIN_H
#define RCGAIN_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum RcgStatus {
  RCG_STATUS_OK = 0,
  RCG_STATUS_NULL_POINTER = 1,
  RCG_STATUS_INVALID_ARGUMENT = 2,
  RCG_STATUS_DIMENSION = 3,
  RCG_STATUS_UNSTABLE = 4,
  RCG_STATUS_SINGULAR = 5,
  RCG_STATUS_NON_CONVERGENCE = 6,
  RCG_STATUS_PARSE = 7,
  RCG_STATUS_IO = 8,
  RCG_STATUS_BUFFER_TOO_SMALL = 9,
  RCG_STATUS_DEGENERATE_UPDATE = 10,
  RCG_STATUS_INTERNAL = 11,
} RcgStatus;

typedef enum RcgPlantMode {
  RCG_PLANT_MODE_RESET_FREE = 0,
  RCG_PLANT_MODE_RESET_PER_BATCH = 1,
} RcgPlantMode;

// Opaque simulated plant session.
typedef struct RcgSession RcgSession;

// Opaque stable LTI system.
typedef struct RcgSystem RcgSystem;

typedef struct RcgEstimateOptions {
  size_t batch_len;
  size_t n_update;
  size_t max_updates;
  uint64_t seed;
  // 0 selects the shift from a probe experiment.
  double shift;
  // 0 selects the default for the chosen plant.
  double tolerance;
  // Nonzero uses the transient-free plant `y = M u`.
  int32_t ideal_plant;
} RcgEstimateOptions;

typedef struct RcgEstimateResult {
  double estimate;
  // Largest eigenvalue of the time-reversed periodic response matrix.
  double reference;
  double shift;
  size_t updates;
  int32_t converged;
  size_t peak_bin;
  size_t final_input_bin;
} RcgEstimateResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or null. Valid until the
// next `rcg_*` call on the same thread.
const char *rcg_last_error(void);

// Transfer function `z^-delay · Σ num_i z^-i / Σ den_i z^-i`.
//
// # Safety
// `num`/`den` must point to `num_len`/`den_len` readable doubles and `out`
// must be writable.
enum RcgStatus rcg_system_from_tf(const double *num,
                                  size_t num_len,
                                  const double *den,
                                  size_t den_len,
                                  size_t delay,
                                  struct RcgSystem **out);

// State-space system of order `n`; `a` is row-major `n × n`.
//
// # Safety
// `a` must hold `n*n` doubles, `b` and `c` `n` doubles each; `out` writable.
enum RcgStatus rcg_system_from_ss(const double *a,
                                  const double *b,
                                  const double *c,
                                  double d,
                                  size_t n,
                                  struct RcgSystem **out);

// Parses the text system-spec format used by the CLI.
//
// # Safety
// `text` must be a NUL-terminated string and `out` writable.
enum RcgStatus rcg_system_from_spec(const char *text, struct RcgSystem **out);

// # Safety
// `sys` must come from an `rcg_system_from_*` call and not be freed twice.
void rcg_system_free(struct RcgSystem *sys);

// `P(e^{jω})`.
//
// # Safety
// `sys` must be a live handle; `re` and `im` writable.
enum RcgStatus rcg_freq_response(const struct RcgSystem *sys, double omega, double *re, double *im);

// Peak gain on a uniform `[0, π]` grid with local refinement.
//
// # Safety
// `sys` must be a live handle; `value` and `omega` writable.
enum RcgStatus rcg_hinf_oracle(const struct RcgSystem *sys,
                               size_t grid,
                               double *value,
                               double *omega);

// First row of the periodic response matrix for batch length `n`; writes `n`
// values.
//
// # Safety
// `sys` must be a live handle; `out` must hold `out_len` doubles.
enum RcgStatus rcg_circulant_coefficients(const struct RcgSystem *sys,
                                          size_t n,
                                          double *out,
                                          size_t out_len);

// Eigenvalues of the time-reversed periodic response matrix, indexed by DFT
// bin; writes `n` values.
//
// # Safety
// `sys` must be a live handle; `out` must hold `out_len` doubles.
enum RcgStatus rcg_reversed_spectrum(const struct RcgSystem *sys,
                                     size_t n,
                                     double *out,
                                     size_t out_len);

// Largest eigenvalue of the time-reversed periodic response matrix.
//
// # Safety
// `sys` must be a live handle; `out` writable.
enum RcgStatus rcg_reset_free_gain(const struct RcgSystem *sys, size_t n, double *out);

// Largest eigenvalue of the time-reversed finite-horizon Toeplitz matrix.
//
// # Safety
// `sys` must be a live handle; `out` writable.
enum RcgStatus rcg_reset_based_gain(const struct RcgSystem *sys, size_t n, double *out);

// Plant session started at rest.
//
// # Safety
// `sys` must be a live handle; `out` writable. The session keeps its own copy
// of the system.
enum RcgStatus rcg_session_new(const struct RcgSystem *sys,
                               size_t n,
                               enum RcgPlantMode mode,
                               struct RcgSession **out);

// Applies one batch of `n` inputs and writes the `n` outputs.
//
// # Safety
// `session` must be live; `u` must hold `n` doubles; `y` `y_len` doubles.
enum RcgStatus rcg_session_apply(struct RcgSession *session,
                                 const double *u,
                                 size_t n,
                                 double *y,
                                 size_t y_len);

// Number of batches applied so far, or 0 for a null handle.
//
// # Safety
// `session` must be live or null.
size_t rcg_session_batches(const struct RcgSession *session);

// # Safety
// `session` must come from [`rcg_session_new`] and not be freed twice.
void rcg_session_free(struct RcgSession *session);

// Defaults: `n_update = 10`, `max_updates = 1000`, seed 0, automatic shift
// and tolerance, transient plant.
struct RcgEstimateOptions rcg_estimate_options_default(size_t batch_len);

// Reset-free power iteration on a simulated plant started at rest. The result
// is filled even when the run stops without converging, in which case
// `RCG_STATUS_NON_CONVERGENCE` is returned.
//
// # Safety
// `sys` must be live; `options` readable; `result` writable.
enum RcgStatus rcg_estimate(const struct RcgSystem *sys,
                            const struct RcgEstimateOptions *options,
                            struct RcgEstimateResult *result);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RCGAIN_H */
