#ifndef SCMA_OFDM_H
#define SCMA_OFDM_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Result code of every fallible call.
 */
typedef enum ScmaStatus {
  SCMA_STATUS_OK = 0,
  SCMA_STATUS_NULL_POINTER = 1,
  SCMA_STATUS_INVALID_INPUT = 2,
  SCMA_STATUS_INVALID_CONFIG = 3,
  SCMA_STATUS_DOMAIN = 4,
  SCMA_STATUS_IO = 5,
  SCMA_STATUS_PANIC = 6,
} ScmaStatus;

/*
 A link built from a scenario, ready to simulate frames.
 */
typedef struct ScmaLink ScmaLink;

/*
 A simulation scenario.
 */
typedef struct ScmaScenario ScmaScenario;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message of the last failed call on this thread; empty if none. The
 pointer stays valid until the next failing call on the same thread.
 */
const char *scma_last_error(void);

/*
 Library version as a static NUL-terminated string.
 */
const char *scma_version(void);

/*
 Gamma function.

 # Safety
 `out` must be null or point to writable memory for one `double`.
 */
enum ScmaStatus scma_gamma(double x, double *out);

/*
 Natural logarithm of the absolute value of the gamma function.

 # Safety
 `out` must be null or point to writable memory for one `double`.
 */
enum ScmaStatus scma_ln_gamma(double x, double *out);

/*
 Confluent hypergeometric function of the second kind U(a, b, x), x > 0.

 # Safety
 `out` must be null or point to writable memory for one `double`.
 */
enum ScmaStatus scma_kummer_u(double a, double b, double x, double *out);

/*
 Whittaker function W_{kappa, mu}(z), z > 0.

 # Safety
 `out` must be null or point to writable memory for one `double`.
 */
enum ScmaStatus scma_whittaker_w(double kappa, double mu, double z, double *out);

/*
 Gaussian tail probability Q(x).
 */
double scma_q_function(double x);

/*
 ICI power on one subcarrier of an AWGN link with `subcarriers` carriers,
 normalized CFO `eps` and per-subcarrier transmit power `overloading`.

 # Safety
 `out` must be null or point to writable memory for one `double`.
 */
enum ScmaStatus scma_awgn_ici_variance(double eps,
                                       size_t subcarriers,
                                       double overloading,
                                       double *out);

/*
 Creates one of the built-in scenarios ("fig3", "fig4" or "fig5").

 # Safety
 `name` must be null or a NUL-terminated string; `out` must be null or
 writable.
 */
enum ScmaStatus scma_scenario_preset(const char *name, struct ScmaScenario **out);

/*
 Parses a scenario from TOML text. Relative codebook paths are resolved
 against the working directory.

 # Safety
 `toml` must be null or a NUL-terminated string; `out` must be null or
 writable.
 */
enum ScmaStatus scma_scenario_from_toml(const char *toml, struct ScmaScenario **out);

/*
 Releases a scenario. Null is ignored.

 # Safety
 `scenario` must be null or a handle from this library not yet freed.
 */
void scma_scenario_free(struct ScmaScenario *scenario);

/*
 Overrides the master seed.

 # Safety
 `scenario` must be null or a live handle.
 */
enum ScmaStatus scma_scenario_set_seed(struct ScmaScenario *scenario, uint64_t seed);

/*
 Overrides the per-point frame limit of simulated curves.

 # Safety
 `scenario` must be null or a live handle.
 */
enum ScmaStatus scma_scenario_set_max_frames(struct ScmaScenario *scenario, uint64_t frames);

/*
 Enables or disables the wall-clock column of the output CSV.

 # Safety
 `scenario` must be null or a live handle.
 */
enum ScmaStatus scma_scenario_set_record_timing(struct ScmaScenario *scenario, bool on);

/*
 Runs the full sweep and writes the CSV to `csv_path`. `workers == 0`
 selects the default thread count.

 # Safety
 `scenario` must be null or a live handle; `csv_path` must be null or a
 NUL-terminated string.
 */
enum ScmaStatus scma_scenario_run(const struct ScmaScenario *scenario,
                                  size_t workers,
                                  const char *csv_path);

/*
 Builds the transmit/receive chain described by a scenario.

 # Safety
 `scenario` must be null or a live handle; `out` must be null or writable.
 */
enum ScmaStatus scma_link_new(const struct ScmaScenario *scenario, struct ScmaLink **out);

/*
 Releases a link. Null is ignored.

 # Safety
 `link` must be null or a handle from this library not yet freed.
 */
void scma_link_free(struct ScmaLink *link);

/*
 Simulates `frames` OFDM symbols at normalized CFO `eps` and `snr_db`,
 using the frame streams `0..frames` of `seed`, and reports the total bit
 errors and bits.

 # Safety
 `link` must be null or a live handle; `bit_errors` and `bits` must be
 null or writable.
 */
enum ScmaStatus scma_link_simulate(const struct ScmaLink *link,
                                   double eps,
                                   double snr_db,
                                   uint64_t seed,
                                   uint64_t frames,
                                   uint64_t *bit_errors,
                                   uint64_t *bits);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SCMA_OFDM_H */
