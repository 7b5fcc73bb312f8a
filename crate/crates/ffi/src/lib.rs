//! C ABI over the ticklab toolkit.
//!
//! Conventions: every function returns a [`TlStatus`] (0 is success) or a
//! plain value documented as infallible; objects are opaque handles freed
//! by their matching `*_free`; strings returned by the library are freed
//! with [`tl_string_free`]; the last failure message is retrievable via
//! [`tl_last_error_message`] (thread-local). Array getters use the
//! two-call pattern: query the length with a null buffer, then fill.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::fs::File;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

use ticklab::ncpp::{self, NcppParams, NcppSimulation, SeasonalProfile};
use ticklab::tickdata::{
    clean_ticks, log_returns, parse_ticks, waiting_times, write_ticks_csv, FormatConfig,
    TickSeries,
};
use ticklab::waitstats::{ad_exponentiality, fit_weibull_moments, WeibullFit};
use ticklab::Error;

/// Result codes mirrored across the C boundary.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TlStatus {
    Ok = 0,
    NullArg = 1,
    Utf8 = 2,
    Io = 3,
    ParseFailed = 4,
    Invalid = 5,
    NotEnoughData = 6,
    Degenerate = 7,
    Solver = 8,
    BadConfig = 9,
    Panic = 10,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg).unwrap_or_else(|_| CString::new("invalid error text").unwrap());
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn fail(status: TlStatus, msg: String) -> TlStatus {
    set_error(msg);
    status
}

fn status_of(err: &Error) -> TlStatus {
    match err {
        Error::EmptyInput(_) | Error::NotEnoughData(_) => TlStatus::NotEnoughData,
        Error::InvalidParameter(_) => TlStatus::Invalid,
        Error::DegenerateSample(_) => TlStatus::Degenerate,
        Error::Solver(_) => TlStatus::Solver,
        Error::Parse(_) | Error::Json(_) => TlStatus::ParseFailed,
        Error::Config(_) => TlStatus::BadConfig,
        Error::Io(_) => TlStatus::Io,
    }
}

fn from_err(err: Error) -> TlStatus {
    let status = status_of(&err);
    set_error(err.to_string());
    status
}

/// Message for the most recent failure on this thread, or null; owned by
/// the library, valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn tl_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| {
        slot.borrow()
            .as_ref()
            .map_or(std::ptr::null(), |c| c.as_ptr())
    })
}

/// Frees a string returned by this library.
///
/// # Safety
/// `s` must have been returned by a ticklab function and not freed yet.
#[no_mangle]
pub unsafe extern "C" fn tl_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

unsafe fn cstr<'a>(ptr: *const c_char) -> Result<&'a str, TlStatus> {
    if ptr.is_null() {
        return Err(fail(TlStatus::NullArg, "null string argument".into()));
    }
    CStr::from_ptr(ptr)
        .to_str()
        .map_err(|_| fail(TlStatus::Utf8, "argument is not valid UTF-8".into()))
}

fn guarded(body: impl FnOnce() -> TlStatus) -> TlStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(_) => fail(TlStatus::Panic, "internal panic".into()),
    }
}

/// Opaque tick-series handle.
pub struct TlTickSeries(TickSeries);

/// Opaque seasonal-profile handle.
pub struct TlProfile(SeasonalProfile);

/// Opaque simulation handle.
pub struct TlSimulation(NcppSimulation);

/// Loads one instrument-session of ticks from a CSV file.
///
/// `config_toml` deserializes into the ingestion format configuration
/// (column selectors, epoch format, session bounds); pass null for the
/// defaults. On success `*out` owns the series.
///
/// # Safety
/// `path`, `instrument` and `day` must be valid NUL-terminated strings;
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tl_ticks_load_csv(
    path: *const c_char,
    config_toml: *const c_char,
    instrument: *const c_char,
    day: *const c_char,
    out: *mut *mut TlTickSeries,
) -> TlStatus {
    guarded(|| {
        if out.is_null() {
            return fail(TlStatus::NullArg, "null output pointer".into());
        }
        let path = match cstr(path) {
            Ok(s) => PathBuf::from(s),
            Err(e) => return e,
        };
        let instrument = match cstr(instrument) {
            Ok(s) => s,
            Err(e) => return e,
        };
        let day = match cstr(day) {
            Ok(s) => s,
            Err(e) => return e,
        };
        let config = if config_toml.is_null() {
            FormatConfig::default()
        } else {
            let text = match cstr(config_toml) {
                Ok(s) => s,
                Err(e) => return e,
            };
            match toml::from_str::<FormatConfig>(text) {
                Ok(c) => c,
                Err(e) => return fail(TlStatus::BadConfig, format!("bad format config: {e}")),
            }
        };
        let file = match File::open(&path) {
            Ok(f) => f,
            Err(e) => return fail(TlStatus::Io, format!("{}: {e}", path.display())),
        };
        match parse_ticks(file, &config, instrument, day) {
            Ok(outcome) => {
                *out = Box::into_raw(Box::new(TlTickSeries(outcome.series)));
                TlStatus::Ok
            }
            Err(e) => from_err(e),
        }
    })
}

/// # Safety
/// `handle` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn tl_ticks_free(handle: *mut TlTickSeries) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// Number of ticks; 0 for a null handle.
///
/// # Safety
/// `handle` must be a live tick-series handle or null.
#[no_mangle]
pub unsafe extern "C" fn tl_ticks_len(handle: *const TlTickSeries) -> usize {
    handle.as_ref().map_or(0, |h| h.0.len())
}

/// Applies the cleaning rules (duplicate-epoch collapse, waiting-time cap)
/// and returns a new series in `*out`.
///
/// # Safety
/// `handle` must be live; `out` valid.
#[no_mangle]
pub unsafe extern "C" fn tl_ticks_clean(
    handle: *const TlTickSeries,
    max_wait: f64,
    out: *mut *mut TlTickSeries,
) -> TlStatus {
    guarded(|| {
        let (Some(h), false) = (handle.as_ref(), out.is_null()) else {
            return fail(TlStatus::NullArg, "null handle or output".into());
        };
        match clean_ticks(&h.0, max_wait) {
            Ok(series) => {
                *out = Box::into_raw(Box::new(TlTickSeries(series)));
                TlStatus::Ok
            }
            Err(e) => from_err(e),
        }
    })
}

/// Writes the series as `epoch,price,volume` CSV.
///
/// # Safety
/// `handle` live, `path` a valid string.
#[no_mangle]
pub unsafe extern "C" fn tl_ticks_write_csv(
    handle: *const TlTickSeries,
    path: *const c_char,
) -> TlStatus {
    guarded(|| {
        let Some(h) = handle.as_ref() else {
            return fail(TlStatus::NullArg, "null handle".into());
        };
        let path = match cstr(path) {
            Ok(s) => PathBuf::from(s),
            Err(e) => return e,
        };
        let file = match File::create(&path) {
            Ok(f) => f,
            Err(e) => return fail(TlStatus::Io, format!("{}: {e}", path.display())),
        };
        match write_ticks_csv(&h.0, file) {
            Ok(()) => TlStatus::Ok,
            Err(e) => from_err(e),
        }
    })
}

unsafe fn fill_slice(values: &[f64], buf: *mut f64, cap: usize, out_len: *mut usize) -> TlStatus {
    if out_len.is_null() {
        return fail(TlStatus::NullArg, "null length pointer".into());
    }
    *out_len = values.len();
    if buf.is_null() {
        return TlStatus::Ok; // length query
    }
    if cap < values.len() {
        return fail(
            TlStatus::Invalid,
            format!("buffer of {cap} too small for {} values", values.len()),
        );
    }
    std::ptr::copy_nonoverlapping(values.as_ptr(), buf, values.len());
    TlStatus::Ok
}

/// Intertrade durations. Null `buf` queries the length via `out_len`.
///
/// # Safety
/// `handle` live; `buf` either null or valid for `cap` doubles; `out_len`
/// valid.
#[no_mangle]
pub unsafe extern "C" fn tl_ticks_waiting_times(
    handle: *const TlTickSeries,
    buf: *mut f64,
    cap: usize,
    out_len: *mut usize,
) -> TlStatus {
    guarded(|| {
        let Some(h) = handle.as_ref() else {
            return fail(TlStatus::NullArg, "null handle".into());
        };
        match waiting_times(&h.0) {
            Ok(sample) => fill_slice(&sample.durations, buf, cap, out_len),
            Err(e) => from_err(e),
        }
    })
}

/// Trade-by-trade log-returns; same buffer protocol as waiting times.
///
/// # Safety
/// As for [`tl_ticks_waiting_times`].
#[no_mangle]
pub unsafe extern "C" fn tl_ticks_log_returns(
    handle: *const TlTickSeries,
    buf: *mut f64,
    cap: usize,
    out_len: *mut usize,
) -> TlStatus {
    guarded(|| {
        let Some(h) = handle.as_ref() else {
            return fail(TlStatus::NullArg, "null handle".into());
        };
        match log_returns(&h.0) {
            Ok(sample) => fill_slice(&sample.returns, buf, cap, out_len),
            Err(e) => from_err(e),
        }
    })
}

/// Weibull survival-law fit by the method of moments over raw durations.
///
/// # Safety
/// `durations` valid for `len` doubles; output pointers valid.
#[no_mangle]
pub unsafe extern "C" fn tl_weibull_fit(
    durations: *const f64,
    len: usize,
    out_alpha: *mut f64,
    out_beta: *mut f64,
) -> TlStatus {
    guarded(|| {
        if durations.is_null() || out_alpha.is_null() || out_beta.is_null() {
            return fail(TlStatus::NullArg, "null argument".into());
        }
        let slice = std::slice::from_raw_parts(durations, len);
        let sample = ticklab::tickdata::WaitingTimeSample {
            durations: slice.to_vec(),
            source: "ffi".into(),
            capped_at: None,
        };
        match fit_weibull_moments(&sample) {
            Ok(fit) => {
                *out_alpha = fit.alpha;
                *out_beta = fit.beta;
                TlStatus::Ok
            }
            Err(e) => from_err(e),
        }
    })
}

/// Anderson-Darling statistic of z = alpha tau^beta against exp(1);
/// `out_reject` is 1 when the statistic exceeds the 5% critical value 1.34.
///
/// # Safety
/// `durations` valid for `len` doubles; output pointers valid.
#[no_mangle]
pub unsafe extern "C" fn tl_ad_statistic(
    durations: *const f64,
    len: usize,
    alpha: f64,
    beta: f64,
    out_statistic: *mut f64,
    out_reject: *mut i32,
) -> TlStatus {
    guarded(|| {
        if durations.is_null() || out_statistic.is_null() || out_reject.is_null() {
            return fail(TlStatus::NullArg, "null argument".into());
        }
        let slice = std::slice::from_raw_parts(durations, len);
        let sample = ticklab::tickdata::WaitingTimeSample {
            durations: slice.to_vec(),
            source: "ffi".into(),
            capped_at: None,
        };
        let fit = WeibullFit {
            alpha,
            beta,
            mean_tau: 0.0,
            std_tau: 0.0,
        };
        match ad_exponentiality(&sample, &fit) {
            Ok(ad) => {
                *out_statistic = ad.statistic;
                *out_reject = ad.reject as i32;
                TlStatus::Ok
            }
            Err(e) => from_err(e),
        }
    })
}

/// Fits a seasonal profile on the width-`w` grid from an array of
/// tick-series handles (one per session).
///
/// # Safety
/// `days` valid for `n_days` live handles; `out` valid.
#[no_mangle]
pub unsafe extern "C" fn tl_profile_fit(
    days: *const *const TlTickSeries,
    n_days: usize,
    w: f64,
    out: *mut *mut TlProfile,
) -> TlStatus {
    guarded(|| {
        if days.is_null() || out.is_null() {
            return fail(TlStatus::NullArg, "null argument".into());
        }
        let handles = std::slice::from_raw_parts(days, n_days);
        let mut sessions = Vec::with_capacity(n_days);
        for &h in handles {
            match h.as_ref() {
                Some(s) => sessions.push(s.0.clone()),
                None => return fail(TlStatus::NullArg, "null series in day array".into()),
            }
        }
        match ncpp::fit_profile(&sessions, w) {
            Ok(profile) => {
                *out = Box::into_raw(Box::new(TlProfile(profile)));
                TlStatus::Ok
            }
            Err(e) => from_err(e),
        }
    })
}

/// # Safety
/// `handle` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn tl_profile_free(handle: *mut TlProfile) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// Number of day intervals; 0 for null.
///
/// # Safety
/// `handle` must be a live profile handle or null.
#[no_mangle]
pub unsafe extern "C" fn tl_profile_intervals(handle: *const TlProfile) -> usize {
    handle.as_ref().map_or(0, |h| h.0.intervals)
}

/// Serializes the profile to JSON; free with [`tl_string_free`].
///
/// # Safety
/// `handle` live; `out` valid.
#[no_mangle]
pub unsafe extern "C" fn tl_profile_to_json(
    handle: *const TlProfile,
    out: *mut *mut c_char,
) -> TlStatus {
    guarded(|| {
        let (Some(h), false) = (handle.as_ref(), out.is_null()) else {
            return fail(TlStatus::NullArg, "null handle or output".into());
        };
        match serde_json::to_string_pretty(&h.0) {
            Ok(json) => match CString::new(json) {
                Ok(c) => {
                    *out = c.into_raw();
                    TlStatus::Ok
                }
                Err(_) => fail(TlStatus::Invalid, "JSON contained NUL".into()),
            },
            Err(e) => fail(TlStatus::ParseFailed, e.to_string()),
        }
    })
}

/// Parses a profile from JSON (as produced by [`tl_profile_to_json`] or
/// the CLI) and validates it.
///
/// # Safety
/// `json` a valid string; `out` valid.
#[no_mangle]
pub unsafe extern "C" fn tl_profile_from_json(
    json: *const c_char,
    out: *mut *mut TlProfile,
) -> TlStatus {
    guarded(|| {
        if out.is_null() {
            return fail(TlStatus::NullArg, "null output pointer".into());
        }
        let text = match cstr(json) {
            Ok(s) => s,
            Err(e) => return e,
        };
        let profile: SeasonalProfile = match serde_json::from_str(text) {
            Ok(p) => p,
            Err(e) => return fail(TlStatus::ParseFailed, format!("bad profile JSON: {e}")),
        };
        if let Err(e) = profile.validate() {
            return from_err(e);
        }
        *out = Box::into_raw(Box::new(TlProfile(profile)));
        TlStatus::Ok
    })
}

/// Exponential-mixture waiting-time CDF of the profile at `u` seconds.
/// Returns NaN for a null handle.
///
/// # Safety
/// `handle` must be a live profile handle or null.
#[no_mangle]
pub unsafe extern "C" fn tl_mixture_wt_cdf(handle: *const TlProfile, u: f64) -> f64 {
    handle.as_ref().map_or(f64::NAN, |h| h.0.mixture_wt_cdf(u))
}

/// Truncated-series CDF of the homogeneous process at log-return level
/// `u` after `t` seconds; the truncation keeps the neglected Poisson mass
/// below 1e-12.
///
/// # Safety
/// `out_value` must be valid.
#[no_mangle]
pub unsafe extern "C" fn tl_ncpp_cdf(
    lambda: f64,
    t: f64,
    mu: f64,
    sigma2: f64,
    u: f64,
    out_value: *mut f64,
) -> TlStatus {
    guarded(|| {
        if out_value.is_null() {
            return fail(TlStatus::NullArg, "null output pointer".into());
        }
        let params = match NcppParams::new(lambda, mu, sigma2) {
            Ok(p) => p,
            Err(e) => return from_err(e),
        };
        match ncpp::ncpp_cdf(&params, t, u, None) {
            Ok(cdf) => {
                *out_value = cdf.value;
                TlStatus::Ok
            }
            Err(e) => from_err(e),
        }
    })
}

/// Seeded Monte Carlo simulation of `n_days` trading days.
///
/// # Safety
/// `handle` live; `out` valid.
#[no_mangle]
pub unsafe extern "C" fn tl_simulate(
    handle: *const TlProfile,
    seed: u64,
    n_days: usize,
    out: *mut *mut TlSimulation,
) -> TlStatus {
    guarded(|| {
        let (Some(h), false) = (handle.as_ref(), out.is_null()) else {
            return fail(TlStatus::NullArg, "null handle or output".into());
        };
        match ncpp::simulate(&h.0, seed, n_days) {
            Ok(sim) => {
                *out = Box::into_raw(Box::new(TlSimulation(sim)));
                TlStatus::Ok
            }
            Err(e) => from_err(e),
        }
    })
}

/// # Safety
/// `handle` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn tl_sim_free(handle: *mut TlSimulation) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// Simulated day count; 0 for null.
///
/// # Safety
/// `handle` must be a live simulation handle or null.
#[no_mangle]
pub unsafe extern "C" fn tl_sim_day_count(handle: *const TlSimulation) -> usize {
    handle.as_ref().map_or(0, |h| h.0.days.len())
}

/// Extracts one simulated day as a new tick-series handle.
///
/// # Safety
/// `handle` live; `out` valid.
#[no_mangle]
pub unsafe extern "C" fn tl_sim_day(
    handle: *const TlSimulation,
    day: usize,
    out: *mut *mut TlTickSeries,
) -> TlStatus {
    guarded(|| {
        let (Some(h), false) = (handle.as_ref(), out.is_null()) else {
            return fail(TlStatus::NullArg, "null handle or output".into());
        };
        match h.0.days.get(day) {
            Some(series) => {
                *out = Box::into_raw(Box::new(TlTickSeries(series.clone())));
                TlStatus::Ok
            }
            None => fail(
                TlStatus::Invalid,
                format!("day {day} out of range ({} days)", h.0.days.len()),
            ),
        }
    })
}
