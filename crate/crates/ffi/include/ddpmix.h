#ifndef DDPMIX_H
#define DDPMIX_H

#include <stddef.h>
#include <stdint.h>

// Result of every call.
typedef enum DdpStatus {
  DDP_STATUS_OK = 0,
  DDP_STATUS_INVALID_ARGUMENT = 1,
  DDP_STATUS_DATA_ERROR = 2,
  DDP_STATUS_NUMERICAL_ERROR = 3,
  DDP_STATUS_IO_ERROR = 4,
  DDP_STATUS_NULL_POINTER = 5,
  DDP_STATUS_PANIC = 6,
} DdpStatus;

// Which pointwise density summary to copy.
typedef enum DdpDensityStat {
  DDP_DENSITY_STAT_Q025 = 0,
  DDP_DENSITY_STAT_MEDIAN = 1,
  DDP_DENSITY_STAT_Q975 = 2,
  DDP_DENSITY_STAT_MEAN = 3,
} DdpDensityStat;

// Sampler configuration.
typedef struct DdpConfig DdpConfig;

// Observations on a time grid.
typedef struct DdpDataset DdpDataset;

// Posterior draws of one or more chains.
typedef struct DdpDraws DdpDraws;

// Pointwise posterior summaries on a `(time, y)` grid.
typedef struct DdpSurface DdpSurface;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *ddp_version(void);

// Copies the calling thread's last error message into `buf` and returns the
// size needed (including the NUL); 0 if the last call succeeded.
//
// # Safety
// `buf` must be null or valid for `cap` bytes.
size_t ddp_last_error_message(char *buf, size_t cap);

// Negative-Binomial weight `r_t(m)` of the transition series.
//
// # Safety
// `out` must be valid for writes.
enum DdpStatus ddp_wf_nb_weight(double a, double b, double c, uint64_t m, double t, double *out);

// Transition density `p_t(v1 | v0)` with series tolerance `tol`.
//
// # Safety
// `out` must be valid for writes.
enum DdpStatus ddp_wf_transition_density(double a,
                                         double b,
                                         double c,
                                         double v0,
                                         double v1,
                                         double t,
                                         double tol,
                                         double *out);

// `n` independent exact transition draws from `v0` over `t`.
//
// # Safety
// `out` must be valid for `n` writes.
enum DdpStatus ddp_wf_sample_transition(double a,
                                        double b,
                                        double c,
                                        double v0,
                                        double t,
                                        uint64_t seed,
                                        size_t n,
                                        double *out);

// Dataset from `n_times` sorted times; `counts[i]` observations for time `i`
// are read consecutively from `values`.
//
// # Safety
// `times` and `counts` must hold `n_times` values, `values` the sum of
// `counts`; `out` must be valid for writes.
enum DdpStatus ddp_dataset_new(const double *times,
                               const size_t *counts,
                               size_t n_times,
                               const double *values,
                               struct DdpDataset **out);

// Reads a `time,value` CSV. `date_column` may be null.
//
// # Safety
// `path` must be a NUL-terminated string, `date_column` null or one;
// `out` must be valid for writes.
enum DdpStatus ddp_dataset_read_csv(const char *path,
                                    const char *date_column,
                                    struct DdpDataset **out);

// Toy dataset `N(cos(2t) + t/2, 1/10)` on `n_times` points of `[0, t_max]`.
//
// # Safety
// `out` must be valid for writes.
enum DdpStatus ddp_dataset_simulate_toy(size_t n_times,
                                        size_t per_time,
                                        double t_max,
                                        uint64_t seed,
                                        struct DdpDataset **out);

// # Safety
// `ds` must be a live dataset handle; out pointers valid for writes.
enum DdpStatus ddp_dataset_size(const struct DdpDataset *ds,
                                size_t *n_times,
                                size_t *n_observations);

// Copies the time grid into `out` (capacity `cap`, at least `n_times`).
//
// # Safety
// `ds` must be a live dataset handle; `out` valid for `cap` writes.
enum DdpStatus ddp_dataset_times(const struct DdpDataset *ds, double *out, size_t cap);

// # Safety
// `ds` must be a live dataset handle; `path` a NUL-terminated string.
enum DdpStatus ddp_dataset_write_csv(const struct DdpDataset *ds, const char *path);

// # Safety
// `ds` must be null or a handle not yet freed.
void ddp_dataset_free(struct DdpDataset *ds);

// Default sampler configuration.
//
// # Safety
// `out` must be valid for writes.
enum DdpStatus ddp_config_new(struct DdpConfig **out);

// Configuration from its JSON form (as produced by [`ddp_config_to_json`]).
//
// # Safety
// `json` must be a NUL-terminated string; `out` valid for writes.
enum DdpStatus ddp_config_from_json(const char *json, struct DdpConfig **out);

// Writes the configuration as JSON into `buf` and stores the size needed
// (including the NUL) in `needed`.
//
// # Safety
// `cfg` must be a live handle; `buf` null or valid for `cap` bytes;
// `needed` valid for writes.
enum DdpStatus ddp_config_to_json(const struct DdpConfig *cfg,
                                  char *buf,
                                  size_t cap,
                                  size_t *needed);

// Sets `burn_in`, `iters` (post-burn-in sweeps) and `thin`.
//
// # Safety
// `cfg` must be a live handle.
enum DdpStatus ddp_config_set_schedule(struct DdpConfig *cfg,
                                       size_t burn_in,
                                       size_t iters,
                                       size_t thin);

// # Safety
// `cfg` must be a live handle.
enum DdpStatus ddp_config_set_seed(struct DdpConfig *cfg, uint64_t seed);

// Fixes the concentration (a non-positive value frees it again).
//
// # Safety
// `cfg` must be a live handle.
enum DdpStatus ddp_config_fix_theta(struct DdpConfig *cfg, double theta);

// Fixes the shared rate (a non-positive value frees it again).
//
// # Safety
// `cfg` must be a live handle.
enum DdpStatus ddp_config_fix_c(struct DdpConfig *cfg, double c);

// # Safety
// `cfg` must be null or a handle not yet freed.
void ddp_config_free(struct DdpConfig *cfg);

// Runs `n_chains` independent chains (in parallel) and returns their draws.
//
// # Safety
// `ds` and `cfg` must be live handles; `out` valid for writes.
enum DdpStatus ddp_fit(const struct DdpDataset *ds,
                       const struct DdpConfig *cfg,
                       size_t n_chains,
                       struct DdpDraws **out);

// # Safety
// `path` must be a NUL-terminated string; `out` valid for writes.
enum DdpStatus ddp_draws_read(const char *path, struct DdpDraws **out);

// # Safety
// `draws` must be a live handle; `path` a NUL-terminated string.
enum DdpStatus ddp_draws_write(const struct DdpDraws *draws, const char *path);

// # Safety
// `draws` must be a live handle; out pointers valid for writes.
enum DdpStatus ddp_draws_size(const struct DdpDraws *draws,
                              size_t *n_chains,
                              size_t *n_draws_per_chain,
                              size_t *n_times);

// Mean functional of one draw at one time.
//
// # Safety
// `draws` must be a live handle; `out` valid for writes.
enum DdpStatus ddp_draws_mean_functional(const struct DdpDraws *draws,
                                         size_t chain,
                                         size_t draw,
                                         size_t time_index,
                                         double *out);

// Density of one draw at one time, renormalized by the represented mass.
//
// # Safety
// `draws` must be a live handle; `out` valid for writes.
enum DdpStatus ddp_draws_density(const struct DdpDraws *draws,
                                 size_t chain,
                                 size_t draw,
                                 size_t time_index,
                                 double y,
                                 double *out);

// # Safety
// `draws` must be null or a handle not yet freed.
void ddp_draws_free(struct DdpDraws *draws);

// Pointwise summaries of all chains pooled, on the density grid `y_grid`.
//
// # Safety
// `draws` must be a live handle; `y_grid` must hold `n_y` values; `out`
// valid for writes.
enum DdpStatus ddp_surface_new(const struct DdpDraws *draws,
                               const double *y_grid,
                               size_t n_y,
                               struct DdpSurface **out);

// Mean-functional summaries per time. Each output buffer (any may be null)
// must hold `cap >= n_times` values.
//
// # Safety
// `surface` must be a live handle; non-null buffers valid for `cap` writes.
enum DdpStatus ddp_surface_mean_functional(const struct DdpSurface *surface,
                                           double *mode,
                                           double *mean,
                                           double *median,
                                           double *lo,
                                           double *hi,
                                           size_t cap);

// Copies one density summary (a [`DdpDensityStat`] value), row-major
// `[time][y]`, into `out` (capacity `cap >= n_times * n_y`).
//
// # Safety
// `surface` must be a live handle; `out` valid for `cap` writes.
enum DdpStatus ddp_surface_density(const struct DdpSurface *surface,
                                   uint32_t stat,
                                   double *out,
                                   size_t cap);

// # Safety
// `surface` must be null or a handle not yet freed.
void ddp_surface_free(struct DdpSurface *surface);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DDPMIX_H */
