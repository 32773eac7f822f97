#ifndef CME_WAVEPACK_H
#define CME_WAVEPACK_H

/* Generated by cbindgen from crates/ffi. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CmeCommand {
  CME_COMMAND_BANDS = 0,
  CME_COMMAND_COEFFS = 1,
  CME_COMMAND_SOLITON = 2,
  CME_COMMAND_SIMULATE = 3,
  CME_COMMAND_CONVERGE = 4,
} CmeCommand;

typedef enum CmeStatus {
  CME_STATUS_OK = 0,
  CME_STATUS_NULL_POINTER = 1,
  CME_STATUS_INVALID_ARGUMENT = 2,
  CME_STATUS_CONFIG = 3,
  CME_STATUS_NUMERICS = 4,
  CME_STATUS_IO = 5,
  /**
   * The run finished but missed its acceptance window.
   */
  CME_STATUS_ACCEPTANCE = 6,
  CME_STATUS_PANIC = 7,
} CmeStatus;

/**
 * Validated run configuration.
 */
typedef struct CmeConfig CmeConfig;

/**
 * Carriers, coefficients and the explicit soliton for one configuration.
 */
typedef struct CmeSetup CmeSetup;

/**
 * CME coefficients; `cells` is the cell count `N` of the rescaled system
 * (1 when no rescaling applies).
 */
typedef struct CmeCoefficients {
  double omega0;
  double c_g;
  double kappa;
  double kappa_s;
  double alpha;
  double beta_re;
  double beta_im;
  double gamma_re;
  double gamma_im;
  int64_t cells;
} CmeCoefficients;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copy the calling thread's last error message into `buf`.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t cme_last_error(char *buf, size_t len);

/**
 * Parse an INI configuration.
 *
 * # Safety
 * `text` must be a NUL-terminated string; `out` must be writable.
 */
enum CmeStatus cme_config_from_str(const char *text, struct CmeConfig **out);

/**
 * One of the named setups `sec611`, `sec612`, `sec62`.
 *
 * # Safety
 * `name` must be a NUL-terminated string; `out` must be writable.
 */
enum CmeStatus cme_config_named(const char *name, struct CmeConfig **out);

/**
 * # Safety
 * `cfg` must come from this library and not be used afterwards.
 */
void cme_config_free(struct CmeConfig *cfg);

/**
 * Canonical INI text of the configuration. Returns the full length.
 *
 * # Safety
 * `cfg` must be valid; `buf` null or `len` writable bytes.
 */
size_t cme_config_serialize(const struct CmeConfig *cfg, char *buf, size_t len);

/**
 * Hex SHA-256 of the configuration (64 characters).
 *
 * # Safety
 * `cfg` must be valid; `buf` null or `len` writable bytes.
 */
size_t cme_config_hash(const struct CmeConfig *cfg, char *buf, size_t len);

/**
 * Replace the epsilon list.
 *
 * # Safety
 * `cfg` must be valid; `eps` must point to `n` doubles.
 */
enum CmeStatus cme_config_set_epsilons(struct CmeConfig *cfg, const double *eps, size_t n);

/**
 * Band energy `ω_band(k)` of the configured `V`, with `k` in units of the
 * reciprocal lattice vector (so the zone is `[-1/2, 1/2]`).
 *
 * # Safety
 * `cfg` must be valid; `out` writable.
 */
enum CmeStatus cme_band_energy(const struct CmeConfig *cfg, double k, size_t band, double *out);

/**
 * Select carriers and compute coefficients.
 *
 * # Safety
 * `cfg` must be valid; `out` writable.
 */
enum CmeStatus cme_setup_new(const struct CmeConfig *cfg, struct CmeSetup **out);

/**
 * # Safety
 * `setup` must come from this library and not be used afterwards.
 */
void cme_setup_free(struct CmeSetup *setup);

/**
 * # Safety
 * `setup` must be valid; `out` writable.
 */
enum CmeStatus cme_setup_coefficients(const struct CmeSetup *setup, struct CmeCoefficients *out);

/**
 * Soliton envelopes `A_±(X_j, T)` for `n` points, written as `2n`
 * interleaved doubles each.
 *
 * # Safety
 * `setup` valid; `x` has `n` doubles; `a_plus`, `a_minus` have `2n`.
 */
enum CmeStatus cme_soliton_eval(const struct CmeSetup *setup,
                                const double *x,
                                size_t n,
                                double t,
                                double *a_plus,
                                double *a_minus);

/**
 * Approximate solution `u_app(x_j, t)` at amplitude `epsilon`, `2n` doubles.
 *
 * # Safety
 * `setup` valid; `x` has `n` doubles; `out` has `2n`.
 */
enum CmeStatus cme_uapp_eval(const struct CmeSetup *setup,
                             double epsilon,
                             const double *x,
                             size_t n,
                             double t,
                             double *out);

/**
 * Number of grid points the simulation would use at `epsilon`.
 *
 * # Safety
 * `setup` valid; `out` writable.
 */
enum CmeStatus cme_grid_size(const struct CmeSetup *setup, double epsilon, size_t *out);

/**
 * Run a subcommand, writing files under `out_dir` (or the configured
 * directory when null). Returns `CME_STATUS_ACCEPTANCE` when a convergence
 * run misses its window.
 *
 * # Safety
 * `cfg` valid; `out_dir` null or NUL-terminated.
 */
enum CmeStatus cme_run(const struct CmeConfig *cfg, enum CmeCommand command, const char *out_dir);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CME_WAVEPACK_H */
