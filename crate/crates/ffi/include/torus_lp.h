#ifndef TORUS_LP_H
#define TORUS_LP_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum TlpStatus {
  TLP_STATUS_OK = 0,
  TLP_STATUS_NULL_POINTER = 1,
  TLP_STATUS_STRUCTURAL = 2,
  TLP_STATUS_NUMERIC_DOMAIN = 3,
  TLP_STATUS_PRECONDITION = 4,
  TLP_STATUS_CONFIG = 5,
  TLP_STATUS_UNSUPPORTED = 6,
  TLP_STATUS_CONVERGENCE = 7,
  TLP_STATUS_INVALID_UTF8 = 8,
  TLP_STATUS_PANIC = 9,
} TlpStatus;

// Littlewood-Paley family bound to a grid.
typedef struct TlpFamily TlpFamily;

// Sampled field on the periodic grid.
typedef struct TlpField TlpField;

// Bilinear Fourier symbol.
typedef struct TlpSymbol TlpSymbol;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread; empty after a success.
// The pointer stays valid until the next call into the library on the same thread.
const char *tlp_last_error(void);

// Library version as a static NUL-terminated string.
const char *tlp_version(void);

// Field from `len = N^dim` real samples in row-major order.
//
// # Safety
// `values` must point to `len` doubles and `out` to writable storage for one pointer.
enum TlpStatus tlp_field_from_real(uintptr_t dim,
                                   uintptr_t n,
                                   const double *values,
                                   uintptr_t len,
                                   struct TlpField **out);

// Complex Gaussian spectrum on the annulus `lo <= |k| <= hi`, unit L2 norm.
//
// # Safety
// `out` must point to writable storage for one pointer.
enum TlpStatus tlp_field_random(uintptr_t dim,
                                uintptr_t n,
                                double lo,
                                double hi,
                                uint64_t seed,
                                bool mean_zero,
                                struct TlpField **out);

// # Safety
// `field` must come from this library and not be used afterwards; null is ignored.
void tlp_field_free(struct TlpField *field);

// Number of samples, `N^dim`; 0 for a null handle.
//
// # Safety
// `field` must be null or a live handle.
uintptr_t tlp_field_len(const struct TlpField *field);

// Samples per axis; 0 for a null handle.
//
// # Safety
// `field` must be null or a live handle.
uintptr_t tlp_field_n(const struct TlpField *field);

// Copies the spatial samples into `re` and `im`, each of length `len`.
//
// # Safety
// `re` and `im` must point to `len` writable doubles.
enum TlpStatus tlp_field_samples(const struct TlpField *field,
                                 double *re,
                                 double *im,
                                 uintptr_t len);

// `L2` norm with respect to the normalised measure.
//
// # Safety
// `field` must be a live handle and `out` writable.
enum TlpStatus tlp_field_l2_norm(const struct TlpField *field, double *out);

// `D^s f`.
//
// # Safety
// `field` must be a live handle and `out` writable.
enum TlpStatus tlp_d_s(const struct TlpField *field, double s, struct TlpField **out);

// Littlewood-Paley family with the default transition profile.
//
// # Safety
// `out` must be writable.
enum TlpStatus tlp_family_new(uintptr_t dim, uintptr_t n, struct TlpFamily **out);

// # Safety
// `family` must come from this library and not be used afterwards; null is ignored.
void tlp_family_free(struct TlpFamily *family);

// Largest deviation of the dyadic partition from 1 on the in-band frequencies.
//
// # Safety
// `family` must be a live handle and `out` writable.
enum TlpStatus tlp_family_partition_error(const struct TlpFamily *family, double *out);

// Quasi-norm of `field` in the space described by `spec_json`, e.g.
// `{"family":"triebel_lizorkin","p":2,"q":2,"s":1}`.
//
// # Safety
// Handles must be live, `spec_json` NUL-terminated and `out` writable.
enum TlpStatus tlp_norm(const struct TlpField *field,
                        const struct TlpFamily *family,
                        const char *spec_json,
                        double *out);

// Symbol from its textual name, e.g. `one`, `inverse_gamma(2)`.
//
// # Safety
// `name` must be NUL-terminated and `out` writable.
enum TlpStatus tlp_symbol_parse(const char *name, struct TlpSymbol **out);

// # Safety
// `symbol` must come from this library and not be used afterwards; null is ignored.
void tlp_symbol_free(struct TlpSymbol *symbol);

// `T_sigma(f, g)` on the padded grid of twice the resolution.
//
// # Safety
// Handles must be live and `out` writable.
enum TlpStatus tlp_apply_direct(const struct TlpSymbol *symbol,
                                const struct TlpField *f,
                                const struct TlpField *g,
                                struct TlpField **out);

// Smoothness budget; `besov` selects the Besov form, otherwise Triebel-Lizorkin.
//
// # Safety
// `out` must be writable.
enum TlpStatus tlp_derivative_budget(uintptr_t n,
                                     double p1,
                                     double p2,
                                     double p,
                                     double q,
                                     double tau1,
                                     double tau2,
                                     bool besov,
                                     uint64_t *out);

// Scattering limit `T_{1/lambda}(f, g)` of the `D^gamma` (or `J^gamma` when `inhomogeneous`) system.
//
// # Safety
// Handles must be live and `out` writable.
enum TlpStatus tlp_scattering_limit(double gamma,
                                    bool inhomogeneous,
                                    const struct TlpField *f,
                                    const struct TlpField *g,
                                    struct TlpField **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TORUS_LP_H */
