/* C interface to the ticklab tick-data toolkit. */

#ifndef TICKLAB_H
#define TICKLAB_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes mirrored across the C boundary.
 */
typedef enum TlStatus {
  TL_STATUS_OK = 0,
  TL_STATUS_NULL_ARG = 1,
  TL_STATUS_UTF8 = 2,
  TL_STATUS_IO = 3,
  TL_STATUS_PARSE_FAILED = 4,
  TL_STATUS_INVALID = 5,
  TL_STATUS_NOT_ENOUGH_DATA = 6,
  TL_STATUS_DEGENERATE = 7,
  TL_STATUS_SOLVER = 8,
  TL_STATUS_BAD_CONFIG = 9,
  TL_STATUS_PANIC = 10,
} TlStatus;

/**
 * Opaque seasonal-profile handle.
 */
typedef struct TlProfile TlProfile;

/**
 * Opaque simulation handle.
 */
typedef struct TlSimulation TlSimulation;

/**
 * Opaque tick-series handle.
 */
typedef struct TlTickSeries TlTickSeries;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread, or null; owned by
 * the library, valid until the next failing call on the same thread.
 */
const char *tl_last_error_message(void);

/**
 * Frees a string returned by this library.
 *
 * # Safety
 * `s` must have been returned by a ticklab function and not freed yet.
 */
void tl_string_free(char *s);

/**
 * Loads one instrument-session of ticks from a CSV file.
 *
 * `config_toml` deserializes into the ingestion format configuration
 * (column selectors, epoch format, session bounds); pass null for the
 * defaults. On success `*out` owns the series.
 *
 * # Safety
 * `path`, `instrument` and `day` must be valid NUL-terminated strings;
 * `out` must be a valid pointer.
 */
enum TlStatus tl_ticks_load_csv(const char *path,
                                const char *config_toml,
                                const char *instrument,
                                const char *day,
                                struct TlTickSeries **out);

/**
 * # Safety
 * `handle` must come from this library and not be freed twice.
 */
void tl_ticks_free(struct TlTickSeries *handle);

/**
 * Number of ticks; 0 for a null handle.
 *
 * # Safety
 * `handle` must be a live tick-series handle or null.
 */
uintptr_t tl_ticks_len(const struct TlTickSeries *handle);

/**
 * Applies the cleaning rules (duplicate-epoch collapse, waiting-time cap)
 * and returns a new series in `*out`.
 *
 * # Safety
 * `handle` must be live; `out` valid.
 */
enum TlStatus tl_ticks_clean(const struct TlTickSeries *handle,
                             double max_wait,
                             struct TlTickSeries **out);

/**
 * Writes the series as `epoch,price,volume` CSV.
 *
 * # Safety
 * `handle` live, `path` a valid string.
 */
enum TlStatus tl_ticks_write_csv(const struct TlTickSeries *handle, const char *path);

/**
 * Intertrade durations. Null `buf` queries the length via `out_len`.
 *
 * # Safety
 * `handle` live; `buf` either null or valid for `cap` doubles; `out_len`
 * valid.
 */
enum TlStatus tl_ticks_waiting_times(const struct TlTickSeries *handle,
                                     double *buf,
                                     uintptr_t cap,
                                     uintptr_t *out_len);

/**
 * Trade-by-trade log-returns; same buffer protocol as waiting times.
 *
 * # Safety
 * As for [`tl_ticks_waiting_times`].
 */
enum TlStatus tl_ticks_log_returns(const struct TlTickSeries *handle,
                                   double *buf,
                                   uintptr_t cap,
                                   uintptr_t *out_len);

/**
 * Weibull survival-law fit by the method of moments over raw durations.
 *
 * # Safety
 * `durations` valid for `len` doubles; output pointers valid.
 */
enum TlStatus tl_weibull_fit(const double *durations,
                             uintptr_t len,
                             double *out_alpha,
                             double *out_beta);

/**
 * Anderson-Darling statistic of z = alpha tau^beta against exp(1);
 * `out_reject` is 1 when the statistic exceeds the 5% critical value 1.34.
 *
 * # Safety
 * `durations` valid for `len` doubles; output pointers valid.
 */
enum TlStatus tl_ad_statistic(const double *durations,
                              uintptr_t len,
                              double alpha,
                              double beta,
                              double *out_statistic,
                              int32_t *out_reject);

/**
 * Fits a seasonal profile on the width-`w` grid from an array of
 * tick-series handles (one per session).
 *
 * # Safety
 * `days` valid for `n_days` live handles; `out` valid.
 */
enum TlStatus tl_profile_fit(const struct TlTickSeries *const *days,
                             uintptr_t n_days,
                             double w,
                             struct TlProfile **out);

/**
 * # Safety
 * `handle` must come from this library and not be freed twice.
 */
void tl_profile_free(struct TlProfile *handle);

/**
 * Number of day intervals; 0 for null.
 *
 * # Safety
 * `handle` must be a live profile handle or null.
 */
uintptr_t tl_profile_intervals(const struct TlProfile *handle);

/**
 * Serializes the profile to JSON; free with [`tl_string_free`].
 *
 * # Safety
 * `handle` live; `out` valid.
 */
enum TlStatus tl_profile_to_json(const struct TlProfile *handle, char **out);

/**
 * Parses a profile from JSON (as produced by [`tl_profile_to_json`] or
 * the CLI) and validates it.
 *
 * # Safety
 * `json` a valid string; `out` valid.
 */
enum TlStatus tl_profile_from_json(const char *json, struct TlProfile **out);

/**
 * Exponential-mixture waiting-time CDF of the profile at `u` seconds.
 * Returns NaN for a null handle.
 *
 * # Safety
 * `handle` must be a live profile handle or null.
 */
double tl_mixture_wt_cdf(const struct TlProfile *handle, double u);

/**
 * Truncated-series CDF of the homogeneous process at log-return level
 * `u` after `t` seconds; the truncation keeps the neglected Poisson mass
 * below 1e-12.
 *
 * # Safety
 * `out_value` must be valid.
 */
enum TlStatus tl_ncpp_cdf(double lambda,
                          double t,
                          double mu,
                          double sigma2,
                          double u,
                          double *out_value);

/**
 * Seeded Monte Carlo simulation of `n_days` trading days.
 *
 * # Safety
 * `handle` live; `out` valid.
 */
enum TlStatus tl_simulate(const struct TlProfile *handle,
                          uint64_t seed,
                          uintptr_t n_days,
                          struct TlSimulation **out);

/**
 * # Safety
 * `handle` must come from this library and not be freed twice.
 */
void tl_sim_free(struct TlSimulation *handle);

/**
 * Simulated day count; 0 for null.
 *
 * # Safety
 * `handle` must be a live simulation handle or null.
 */
uintptr_t tl_sim_day_count(const struct TlSimulation *handle);

/**
 * Extracts one simulated day as a new tick-series handle.
 *
 * # Safety
 * `handle` live; `out` valid.
 */
enum TlStatus tl_sim_day(const struct TlSimulation *handle,
                         uintptr_t day,
                         struct TlTickSeries **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TICKLAB_H */
