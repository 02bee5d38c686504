//! C ABI for `ddpmix`.
//!
//! Every function returns a [`DdpStatus`]; results come back through out
//! pointers. On failure the message is kept per thread and can be read with
//! [`ddp_last_error_message`]. Objects are opaque handles created by `*_new`,
//! `*_read` or `ddp_fit` and released with the matching `*_free`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use ddpmix::estimation::{summarize, DensitySurface};
use ddpmix::gibbs::{read_archive_path, run_chains, write_archive_path, PosteriorDraws, RunOptions, SamplerConfig};
use ddpmix::mixture::{density_eval, mean_functional, simulate_toy};
use ddpmix::wf::{self, SeriesOptions, WFParams};
use ddpmix::{Error, TimeGridDataset};

/// Result of every call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DdpStatus {
    Ok = 0,
    InvalidArgument = 1,
    DataError = 2,
    NumericalError = 3,
    IoError = 4,
    NullPointer = 5,
    Panic = 6,
}

/// Observations on a time grid.
pub struct DdpDataset {
    inner: TimeGridDataset,
}

/// Sampler configuration.
pub struct DdpConfig {
    inner: SamplerConfig,
}

/// Posterior draws of one or more chains.
pub struct DdpDraws {
    inner: Vec<PosteriorDraws>,
}

/// Pointwise posterior summaries on a `(time, y)` grid.
pub struct DdpSurface {
    inner: DensitySurface,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<String>> = const { RefCell::new(None) };
}

struct Failure {
    status: DdpStatus,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::InvalidParameter(_) | Error::Domain { .. } => DdpStatus::InvalidArgument,
            Error::Data(_) | Error::Json(_) | Error::Checkpoint(_) => DdpStatus::DataError,
            Error::Io(_) => DdpStatus::IoError,
            Error::SeriesOverflow { .. } | Error::TruncationCap { .. } | Error::Degenerate(_) | Error::Numerical(_) => {
                DdpStatus::NumericalError
            }
        };
        Failure { status, message: e.to_string() }
    }
}

fn fail(status: DdpStatus, message: impl Into<String>) -> Failure {
    Failure { status, message: message.into() }
}

type Outcome = Result<(), Failure>;

fn guard<F: FnOnce() -> Outcome>(f: F) -> DdpStatus {
    let (status, message) = match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => (DdpStatus::Ok, None),
        Ok(Err(e)) => (e.status, Some(e.message)),
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            (DdpStatus::Panic, Some(format!("panic: {msg}")))
        }
    };
    LAST_ERROR.with(|e| *e.borrow_mut() = message);
    status
}

fn nonnull<T>(p: *const T, name: &str) -> Result<(), Failure> {
    if p.is_null() {
        Err(fail(DdpStatus::NullPointer, format!("`{name}` is null")))
    } else {
        Ok(())
    }
}

/// # Safety
/// `p` must be null or a valid NUL-terminated string.
unsafe fn string_arg(p: *const c_char, name: &str) -> Result<String, Failure> {
    nonnull(p, name)?;
    CStr::from_ptr(p)
        .to_str()
        .map(str::to_owned)
        .map_err(|_| fail(DdpStatus::InvalidArgument, format!("`{name}` is not valid UTF-8")))
}

/// # Safety
/// `p` must be null or point to `n` readable values.
unsafe fn slice_arg<'a, T>(p: *const T, n: usize, name: &str) -> Result<&'a [T], Failure> {
    if n == 0 {
        return Ok(&[]);
    }
    nonnull(p, name)?;
    Ok(std::slice::from_raw_parts(p, n))
}

/// # Safety
/// `out` must be null or valid for writes.
unsafe fn put<T>(out: *mut T, value: T, name: &str) -> Outcome {
    nonnull(out, name)?;
    out.write(value);
    Ok(())
}

/// # Safety
/// `h` must be null or a live handle from this library.
unsafe fn handle<'a, T>(h: *const T, name: &str) -> Result<&'a T, Failure> {
    nonnull(h, name)?;
    Ok(&*h)
}

/// # Safety
/// `h` must be null or a live handle from this library.
unsafe fn handle_mut<'a, T>(h: *mut T, name: &str) -> Result<&'a mut T, Failure> {
    nonnull(h, name)?;
    Ok(&mut *h)
}

/// Copies `s` with a terminating NUL into `buf` (capacity `cap`), truncating
/// if needed. Returns the size needed for the full string including the NUL.
unsafe fn copy_out(s: &str, buf: *mut c_char, cap: usize) -> usize {
    if !buf.is_null() && cap > 0 {
        let n = s.len().min(cap - 1);
        ptr::copy_nonoverlapping(s.as_ptr().cast::<c_char>(), buf, n);
        *buf.add(n) = 0;
    }
    s.len() + 1
}

fn wf_params(a: f64, b: f64, c: f64) -> Result<WFParams, Failure> {
    Ok(WFParams::new(a, b, c)?)
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ddp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the calling thread's last error message into `buf` and returns the
/// size needed (including the NUL); 0 if the last call succeeded.
///
/// # Safety
/// `buf` must be null or valid for `cap` bytes.
#[no_mangle]
pub unsafe extern "C" fn ddp_last_error_message(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|e| match e.borrow().as_deref() {
        Some(msg) => copy_out(msg, buf, cap),
        None => {
            if !buf.is_null() && cap > 0 {
                *buf = 0;
            }
            0
        }
    })
}

/// Negative-Binomial weight `r_t(m)` of the transition series.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ddp_wf_nb_weight(a: f64, b: f64, c: f64, m: u64, t: f64, out: *mut f64) -> DdpStatus {
    guard(|| {
        let p = wf_params(a, b, c)?;
        if !(t > 0.0) {
            return Err(fail(DdpStatus::InvalidArgument, format!("t = {t} must be positive")));
        }
        put(out, wf::nb_weight(m, t, &p), "out")
    })
}

/// Transition density `p_t(v1 | v0)` with series tolerance `tol`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ddp_wf_transition_density(
    a: f64,
    b: f64,
    c: f64,
    v0: f64,
    v1: f64,
    t: f64,
    tol: f64,
    out: *mut f64,
) -> DdpStatus {
    guard(|| {
        let p = wf_params(a, b, c)?;
        if !(tol > 0.0 && tol < 1.0) {
            return Err(fail(DdpStatus::InvalidArgument, format!("tol = {tol} must lie in (0, 1)")));
        }
        let d = wf::transition_density(v1, v0, t, &p, SeriesOptions::with_tol(tol))?;
        put(out, d, "out")
    })
}

/// `n` independent exact transition draws from `v0` over `t`.
///
/// # Safety
/// `out` must be valid for `n` writes.
#[no_mangle]
pub unsafe extern "C" fn ddp_wf_sample_transition(
    a: f64,
    b: f64,
    c: f64,
    v0: f64,
    t: f64,
    seed: u64,
    n: usize,
    out: *mut f64,
) -> DdpStatus {
    guard(|| {
        let p = wf_params(a, b, c)?;
        if !(0.0..=1.0).contains(&v0) || !(t > 0.0) {
            return Err(fail(DdpStatus::InvalidArgument, format!("need v0 in [0, 1] and t > 0, got ({v0}, {t})")));
        }
        if n == 0 {
            return Ok(());
        }
        nonnull(out, "out")?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dst = std::slice::from_raw_parts_mut(out, n);
        for x in dst {
            *x = wf::sample_transition(v0, t, &p, &mut rng);
        }
        Ok(())
    })
}

/// Dataset from `n_times` sorted times; `counts[i]` observations for time `i`
/// are read consecutively from `values`.
///
/// # Safety
/// `times` and `counts` must hold `n_times` values, `values` the sum of
/// `counts`; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ddp_dataset_new(
    times: *const f64,
    counts: *const usize,
    n_times: usize,
    values: *const f64,
    out: *mut *mut DdpDataset,
) -> DdpStatus {
    guard(|| {
        nonnull(out, "out")?;
        let times = slice_arg(times, n_times, "times")?;
        let counts = slice_arg(counts, n_times, "counts")?;
        let total: usize = counts.iter().sum();
        let values = slice_arg(values, total, "values")?;
        let mut obs = Vec::with_capacity(n_times);
        let mut at = 0;
        for &k in counts {
            obs.push(values[at..at + k].to_vec());
            at += k;
        }
        let ds = TimeGridDataset::new(times.to_vec(), obs)?;
        put(out, Box::into_raw(Box::new(DdpDataset { inner: ds })), "out")
    })
}

/// Reads a `time,value` CSV. `date_column` may be null.
///
/// # Safety
/// `path` must be a NUL-terminated string, `date_column` null or one;
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ddp_dataset_read_csv(
    path: *const c_char,
    date_column: *const c_char,
    out: *mut *mut DdpDataset,
) -> DdpStatus {
    guard(|| {
        nonnull(out, "out")?;
        let path = string_arg(path, "path")?;
        let col = if date_column.is_null() { None } else { Some(string_arg(date_column, "date_column")?) };
        let ds = TimeGridDataset::read_csv_path(&PathBuf::from(path), col.as_deref())?;
        put(out, Box::into_raw(Box::new(DdpDataset { inner: ds })), "out")
    })
}

/// Toy dataset `N(cos(2t) + t/2, 1/10)` on `n_times` points of `[0, t_max]`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ddp_dataset_simulate_toy(
    n_times: usize,
    per_time: usize,
    t_max: f64,
    seed: u64,
    out: *mut *mut DdpDataset,
) -> DdpStatus {
    guard(|| {
        nonnull(out, "out")?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ds = simulate_toy(n_times, per_time, t_max, &mut rng)?;
        put(out, Box::into_raw(Box::new(DdpDataset { inner: ds })), "out")
    })
}

/// # Safety
/// `ds` must be a live dataset handle; out pointers valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ddp_dataset_size(
    ds: *const DdpDataset,
    n_times: *mut usize,
    n_observations: *mut usize,
) -> DdpStatus {
    guard(|| {
        let ds = &handle(ds, "dataset")?.inner;
        put(n_times, ds.n_times(), "n_times")?;
        put(n_observations, ds.n_observations(), "n_observations")
    })
}

/// Copies the time grid into `out` (capacity `cap`, at least `n_times`).
///
/// # Safety
/// `ds` must be a live dataset handle; `out` valid for `cap` writes.
#[no_mangle]
pub unsafe extern "C" fn ddp_dataset_times(ds: *const DdpDataset, out: *mut f64, cap: usize) -> DdpStatus {
    guard(|| {
        let times = handle(ds, "dataset")?.inner.times();
        if cap < times.len() {
            return Err(fail(DdpStatus::InvalidArgument, format!("buffer holds {cap} values, need {}", times.len())));
        }
        nonnull(out, "out")?;
        ptr::copy_nonoverlapping(times.as_ptr(), out, times.len());
        Ok(())
    })
}

/// # Safety
/// `ds` must be a live dataset handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn ddp_dataset_write_csv(ds: *const DdpDataset, path: *const c_char) -> DdpStatus {
    guard(|| {
        let ds = handle(ds, "dataset")?;
        let path = string_arg(path, "path")?;
        Ok(ds.inner.write_csv_path(&PathBuf::from(path))?)
    })
}

/// # Safety
/// `ds` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ddp_dataset_free(ds: *mut DdpDataset) {
    if !ds.is_null() {
        drop(Box::from_raw(ds));
    }
}

/// Default sampler configuration.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ddp_config_new(out: *mut *mut DdpConfig) -> DdpStatus {
    guard(|| put(out, Box::into_raw(Box::new(DdpConfig { inner: SamplerConfig::default() })), "out"))
}

/// Configuration from its JSON form (as produced by [`ddp_config_to_json`]).
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ddp_config_from_json(json: *const c_char, out: *mut *mut DdpConfig) -> DdpStatus {
    guard(|| {
        nonnull(out, "out")?;
        let text = string_arg(json, "json")?;
        let cfg: SamplerConfig = serde_json::from_str(&text).map_err(Error::from)?;
        cfg.validate()?;
        put(out, Box::into_raw(Box::new(DdpConfig { inner: cfg })), "out")
    })
}

/// Writes the configuration as JSON into `buf` and stores the size needed
/// (including the NUL) in `needed`.
///
/// # Safety
/// `cfg` must be a live handle; `buf` null or valid for `cap` bytes;
/// `needed` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ddp_config_to_json(
    cfg: *const DdpConfig,
    buf: *mut c_char,
    cap: usize,
    needed: *mut usize,
) -> DdpStatus {
    guard(|| {
        let cfg = handle(cfg, "config")?;
        let text = serde_json::to_string(&cfg.inner).map_err(Error::from)?;
        put(needed, copy_out(&text, buf, cap), "needed")
    })
}

/// Sets `burn_in`, `iters` (post-burn-in sweeps) and `thin`.
///
/// # Safety
/// `cfg` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn ddp_config_set_schedule(
    cfg: *mut DdpConfig,
    burn_in: usize,
    iters: usize,
    thin: usize,
) -> DdpStatus {
    guard(|| {
        let cfg = handle_mut(cfg, "config")?;
        let next = SamplerConfig { burn_in, iters, thin, ..cfg.inner.clone() };
        next.validate()?;
        cfg.inner = next;
        Ok(())
    })
}

/// # Safety
/// `cfg` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn ddp_config_set_seed(cfg: *mut DdpConfig, seed: u64) -> DdpStatus {
    guard(|| {
        handle_mut(cfg, "config")?.inner.rng_seed = seed;
        Ok(())
    })
}

/// Fixes the concentration (a non-positive value frees it again).
///
/// # Safety
/// `cfg` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn ddp_config_fix_theta(cfg: *mut DdpConfig, theta: f64) -> DdpStatus {
    guard(|| {
        let cfg = handle_mut(cfg, "config")?;
        let next = SamplerConfig { fix_theta: (theta > 0.0).then_some(theta), ..cfg.inner.clone() };
        next.validate()?;
        cfg.inner = next;
        Ok(())
    })
}

/// Fixes the shared rate (a non-positive value frees it again).
///
/// # Safety
/// `cfg` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn ddp_config_fix_c(cfg: *mut DdpConfig, c: f64) -> DdpStatus {
    guard(|| {
        let cfg = handle_mut(cfg, "config")?;
        let next = SamplerConfig { fix_c: (c > 0.0).then_some(c), ..cfg.inner.clone() };
        next.validate()?;
        cfg.inner = next;
        Ok(())
    })
}

/// # Safety
/// `cfg` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ddp_config_free(cfg: *mut DdpConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Runs `n_chains` independent chains (in parallel) and returns their draws.
///
/// # Safety
/// `ds` and `cfg` must be live handles; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ddp_fit(
    ds: *const DdpDataset,
    cfg: *const DdpConfig,
    n_chains: usize,
    out: *mut *mut DdpDraws,
) -> DdpStatus {
    guard(|| {
        nonnull(out, "out")?;
        let ds = handle(ds, "dataset")?;
        let cfg = handle(cfg, "config")?;
        let chains = run_chains(&ds.inner, &cfg.inner, n_chains, &RunOptions::default())?;
        put(out, Box::into_raw(Box::new(DdpDraws { inner: chains })), "out")
    })
}

/// # Safety
/// `path` must be a NUL-terminated string; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ddp_draws_read(path: *const c_char, out: *mut *mut DdpDraws) -> DdpStatus {
    guard(|| {
        nonnull(out, "out")?;
        let path = string_arg(path, "path")?;
        let chains = read_archive_path(&PathBuf::from(path))?;
        put(out, Box::into_raw(Box::new(DdpDraws { inner: chains })), "out")
    })
}

/// # Safety
/// `draws` must be a live handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn ddp_draws_write(draws: *const DdpDraws, path: *const c_char) -> DdpStatus {
    guard(|| {
        let d = handle(draws, "draws")?;
        let path = string_arg(path, "path")?;
        Ok(write_archive_path(&PathBuf::from(path), &d.inner)?)
    })
}

/// # Safety
/// `draws` must be a live handle; out pointers valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ddp_draws_size(
    draws: *const DdpDraws,
    n_chains: *mut usize,
    n_draws_per_chain: *mut usize,
    n_times: *mut usize,
) -> DdpStatus {
    guard(|| {
        let d = &handle(draws, "draws")?.inner;
        put(n_chains, d.len(), "n_chains")?;
        put(n_draws_per_chain, d.first().map_or(0, |c| c.draws.len()), "n_draws_per_chain")?;
        let nt = d.iter().flat_map(|c| c.draws.first()).map(|x| x.measure.n_times()).next().unwrap_or(0);
        put(n_times, nt, "n_times")
    })
}

fn pick(d: &DdpDraws, chain: usize, draw: usize, time_index: usize) -> Result<&ddpmix::gibbs::Draw, Failure> {
    let c = d.inner.get(chain).ok_or_else(|| fail(DdpStatus::InvalidArgument, format!("no chain {chain}")))?;
    let x = c
        .draws
        .get(draw)
        .ok_or_else(|| fail(DdpStatus::InvalidArgument, format!("chain {chain} has no draw {draw}")))?;
    if time_index >= x.measure.n_times() {
        return Err(fail(DdpStatus::InvalidArgument, format!("time index {time_index} out of range")));
    }
    Ok(x)
}

/// Mean functional of one draw at one time.
///
/// # Safety
/// `draws` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ddp_draws_mean_functional(
    draws: *const DdpDraws,
    chain: usize,
    draw: usize,
    time_index: usize,
    out: *mut f64,
) -> DdpStatus {
    guard(|| {
        let x = pick(handle(draws, "draws")?, chain, draw, time_index)?;
        put(out, mean_functional(&x.measure, time_index), "out")
    })
}

/// Density of one draw at one time, renormalized by the represented mass.
///
/// # Safety
/// `draws` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ddp_draws_density(
    draws: *const DdpDraws,
    chain: usize,
    draw: usize,
    time_index: usize,
    y: f64,
    out: *mut f64,
) -> DdpStatus {
    guard(|| {
        let x = pick(handle(draws, "draws")?, chain, draw, time_index)?;
        put(out, density_eval(&x.measure, time_index, y).normalized, "out")
    })
}

/// # Safety
/// `draws` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ddp_draws_free(draws: *mut DdpDraws) {
    if !draws.is_null() {
        drop(Box::from_raw(draws));
    }
}

/// Pointwise summaries of all chains pooled, on the density grid `y_grid`.
///
/// # Safety
/// `draws` must be a live handle; `y_grid` must hold `n_y` values; `out`
/// valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ddp_surface_new(
    draws: *const DdpDraws,
    y_grid: *const f64,
    n_y: usize,
    out: *mut *mut DdpSurface,
) -> DdpStatus {
    guard(|| {
        nonnull(out, "out")?;
        let d = handle(draws, "draws")?;
        let grid = slice_arg(y_grid, n_y, "y_grid")?;
        if grid.is_empty() {
            return Err(fail(DdpStatus::InvalidArgument, "empty y grid"));
        }
        let pooled: Vec<_> = d.inner.iter().flat_map(|c| c.draws.iter().cloned()).collect();
        let s = summarize(&pooled, grid)?;
        put(out, Box::into_raw(Box::new(DdpSurface { inner: s })), "out")
    })
}

/// Mean-functional summaries per time. Each output buffer (any may be null)
/// must hold `cap >= n_times` values.
///
/// # Safety
/// `surface` must be a live handle; non-null buffers valid for `cap` writes.
#[no_mangle]
pub unsafe extern "C" fn ddp_surface_mean_functional(
    surface: *const DdpSurface,
    mode: *mut f64,
    mean: *mut f64,
    median: *mut f64,
    lo: *mut f64,
    hi: *mut f64,
    cap: usize,
) -> DdpStatus {
    guard(|| {
        let s = &handle(surface, "surface")?.inner;
        let n = s.mean_functional.len();
        if cap < n {
            return Err(fail(DdpStatus::InvalidArgument, format!("buffers hold {cap} values, need {n}")));
        }
        for (i, m) in s.mean_functional.iter().enumerate() {
            for (buf, v) in [(mode, m.mode), (mean, m.mean), (median, m.median), (lo, m.lo), (hi, m.hi)] {
                if !buf.is_null() {
                    *buf.add(i) = v;
                }
            }
        }
        Ok(())
    })
}

/// Which pointwise density summary to copy.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DdpDensityStat {
    Q025 = 0,
    Median = 1,
    Q975 = 2,
    Mean = 3,
}

/// Copies one density summary (a [`DdpDensityStat`] value), row-major
/// `[time][y]`, into `out` (capacity `cap >= n_times * n_y`).
///
/// # Safety
/// `surface` must be a live handle; `out` valid for `cap` writes.
#[no_mangle]
pub unsafe extern "C" fn ddp_surface_density(
    surface: *const DdpSurface,
    stat: u32,
    out: *mut f64,
    cap: usize,
) -> DdpStatus {
    guard(|| {
        let s = &handle(surface, "surface")?.inner;
        let m = match stat {
            x if x == DdpDensityStat::Q025 as u32 => &s.q025,
            x if x == DdpDensityStat::Median as u32 => &s.q50,
            x if x == DdpDensityStat::Q975 as u32 => &s.q975,
            x if x == DdpDensityStat::Mean as u32 => &s.mean,
            x => return Err(fail(DdpStatus::InvalidArgument, format!("unknown density summary {x}"))),
        };
        let need = s.times.len() * s.y_grid.len();
        if cap < need {
            return Err(fail(DdpStatus::InvalidArgument, format!("buffer holds {cap} values, need {need}")));
        }
        nonnull(out, "out")?;
        for (i, row) in m.iter().enumerate() {
            ptr::copy_nonoverlapping(row.as_ptr(), out.add(i * s.y_grid.len()), row.len());
        }
        Ok(())
    })
}

/// # Safety
/// `surface` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ddp_surface_free(surface: *mut DdpSurface) {
    if !surface.is_null() {
        drop(Box::from_raw(surface));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn panics_are_contained() {
        let st = guard(|| panic!("boom"));
        assert_eq!(st, DdpStatus::Panic);
        let mut buf = [0 as c_char; 64];
        let n = unsafe { ddp_last_error_message(buf.as_mut_ptr(), buf.len()) };
        assert!(n > 0);
        let msg = unsafe { CStr::from_ptr(buf.as_ptr()) }.to_str().unwrap();
        assert_eq!(msg, "panic: boom");
    }

    #[test]
    fn success_clears_error() {
        let mut x = 0.0;
        assert_eq!(unsafe { ddp_wf_nb_weight(1.0, 4.0, 2.0, 0, -1.0, &mut x) }, DdpStatus::InvalidArgument);
        assert_eq!(unsafe { ddp_wf_nb_weight(1.0, 4.0, 2.0, 0, 1.0, &mut x) }, DdpStatus::Ok);
        assert_eq!(unsafe { ddp_last_error_message(ptr::null_mut(), 0) }, 0);
    }

    #[test]
    fn copy_out_truncates() {
        let mut buf = [1 as c_char; 4];
        let need = unsafe { copy_out("hello", buf.as_mut_ptr(), buf.len()) };
        assert_eq!(need, 6);
        assert_eq!(unsafe { CStr::from_ptr(buf.as_ptr()) }.to_str().unwrap(), "hel");
    }
}
