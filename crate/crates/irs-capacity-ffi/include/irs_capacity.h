#ifndef IRS_CAPACITY_H
#define IRS_CAPACITY_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define IRS_OK 0

// A required pointer argument was null.
#define IRS_ERR_NULL 1

// An argument was outside its domain.
#define IRS_ERR_DOMAIN 2

// The configuration could not be parsed or validated.
#define IRS_ERR_CONFIG 3

#define IRS_ERR_NUMERICAL 4

#define IRS_ERR_QUADRATURE 5

#define IRS_ERR_IO 6

// The optimiser's line search stalled; outputs are still written.
#define IRS_ERR_STALLED 7

// Internal panic; the handle arguments should be considered unusable.
#define IRS_ERR_PANIC 99

// Parsed experiment configuration.
typedef struct IrsConfig IrsConfig;

// Marginal eigenvalue density for fixed gains.
typedef struct IrsPdf IrsPdf;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copies the calling thread's last error message into `buf` as a
// NUL-terminated string, truncating to `len` bytes. Returns the full message
// length excluding the terminator, so a call with `len == 0` sizes the
// buffer.
//
// # Safety
// `buf` must be null or point to `len` writable bytes.
size_t irs_last_error_message(char *buf, size_t len);

// Default configuration.
//
// # Safety
// `out` must be a valid pointer; the handle written there is owned by the
// caller and released with [`irs_config_free`].
int32_t irs_config_new_default(struct IrsConfig **out);

// Parses and validates a JSON configuration.
//
// # Safety
// `json` must be a NUL-terminated string and `out` a valid pointer.
int32_t irs_config_from_json(const char *json, struct IrsConfig **out);

// # Safety
// `cfg` must be null or a handle from this library not yet freed.
void irs_config_free(struct IrsConfig *cfg);

// Number of paired IRS elements `q`, i.e. the phase-vector length.
//
// # Safety
// `cfg` must be a live handle and `out` a valid pointer.
int32_t irs_config_num_phases(const struct IrsConfig *cfg, size_t *out);

// Density for explicit ensemble dimensions `(a, q, p)` and `q` gains.
//
// # Safety
// `gammas` must point to `q` readable doubles and `out` must be valid.
int32_t irs_pdf_new(size_t a, size_t q, size_t p, const double *gammas, struct IrsPdf **out);

// Density at the gains a configuration implies for its configured phases.
//
// # Safety
// `cfg` must be a live handle and `out` a valid pointer.
int32_t irs_pdf_from_config(const struct IrsConfig *cfg, struct IrsPdf **out);

// # Safety
// `pdf` must be null or a handle from this library not yet freed.
void irs_pdf_free(struct IrsPdf *pdf);

// Mean eigenvalue.
//
// # Safety
// `pdf` must be a live handle and `out` a valid pointer.
int32_t irs_pdf_mean(const struct IrsPdf *pdf, double *out);

// Evaluates the density at `n` points; `values` receives `n` doubles.
//
// # Safety
// `lambdas` must point to `n` readable and `values` to `n` writable doubles.
int32_t irs_pdf_density(const struct IrsPdf *pdf, const double *lambdas, size_t n, double *values);

// Ergodic capacity in bit/s/Hz for `m_tx` transmit antennas at linear SNR
// `snr`. A non-positive `tol` selects the library default. `abs_err` may be
// null.
//
// # Safety
// `pdf` must be a live handle, `ec` a valid pointer.
int32_t irs_ergodic_capacity(const struct IrsPdf *pdf,
                             double snr,
                             size_t m_tx,
                             double tol,
                             double *ec,
                             double *abs_err);

// Optimises the IRS phases at the configuration's first SNR. `phases`
// receives `len` values, which must equal [`irs_config_num_phases`];
// `objective` and `iterations` may be null. Returns [`IRS_ERR_STALLED`]
// with all outputs written when the line search stalled.
//
// # Safety
// `cfg` must be a live handle and `phases` must point to `len` writable
// doubles.
int32_t irs_optimize(const struct IrsConfig *cfg,
                     double *phases,
                     size_t len,
                     double *objective,
                     size_t *iterations);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* IRS_CAPACITY_H */
