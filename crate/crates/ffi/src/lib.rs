//! C ABI over the `regevo` simulator.
//!
//! Every function returns a [`RegevoStatus`]. On failure the message is kept
//! per thread and read with [`regevo_last_error_message`]. Objects cross the
//! boundary as opaque handles that the caller releases with the matching
//! `*_free` function. Panics are caught and reported as
//! [`RegevoStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use regevo::config;
use regevo::prob::{self, HypergeomParams};
use regevo::{CachePolicy, Error, PolicyKind, ReplayContext, SearchConfig, SpaceSpec, TraceEvent};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegevoStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    Io = 4,
    Format = 5,
    TraceInvalid = 6,
    OutOfRange = 7,
    BufferTooSmall = 8,
    Panic = 99,
}

/// Search space definition.
pub struct RegevoSpace(SpaceSpec);

/// Search parameters.
pub struct RegevoSearchConfig(SearchConfig);

/// Evaluation trace in completion order.
pub struct RegevoTrace(Vec<TraceEvent>);

/// Scalar fields of one trace event. Optional fields carry a `has_` flag.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct RegevoEvent {
    pub candidate_id: u64,
    pub begin_ts: f64,
    pub end_ts: f64,
    pub worker_id: u32,
    pub quality: f64,
    pub stage: u8,
    pub has_donor: bool,
    pub donor_id: u64,
    pub donor_prefix_len: u32,
    pub sequence_len: usize,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegevoPolicyKind {
    StoreAll = 0,
    SkipBottom = 1,
    ProbabilityThreshold = 2,
    TierThreshold = 3,
}

/// Admission policy. `epsilon` applies to the probability threshold,
/// `min_donations` and `window` to the tier threshold. A `capacity` of 0
/// means unbounded.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct RegevoPolicy {
    pub kind: RegevoPolicyKind,
    pub epsilon: f64,
    pub min_donations: u64,
    pub window: u64,
    pub capacity: u64,
}

/// Replay counters. `hit_rate` is NaN when there were no donor requests.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct RegevoCacheReport {
    pub stores_made: u64,
    pub stores_skipped: u64,
    pub donor_hits: u64,
    pub donor_misses: u64,
    pub wasted_stores: u64,
    pub miss_penalty_prefix_slots: u64,
    pub evictions: u64,
    pub hit_rate: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Fail(RegevoStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::Io { .. } => RegevoStatus::Io,
            Error::TraceFormat { .. } | Error::ConfigFile { .. } => RegevoStatus::Format,
            Error::TraceInvariant(_) | Error::MissingContext(_) => RegevoStatus::TraceInvalid,
            _ => RegevoStatus::InvalidArgument,
        };
        Fail(status, e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(RegevoStatus::NullArgument, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> RegevoStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            RegevoStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            RegevoStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        Fail(
            RegevoStatus::InvalidUtf8,
            format!("{what} is not valid UTF-8"),
        )
    })
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

fn boxed<T>(value: T) -> *mut T {
    Box::into_raw(Box::new(value))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn regevo_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or NULL after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn regevo_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn regevo_space_default(out: *mut *mut RegevoSpace) -> RegevoStatus {
    guard(|| {
        *out_arg(out, "out")? = boxed(RegevoSpace(SpaceSpec::default()));
        Ok(())
    })
}

/// Parses a search-space TOML document.
///
/// # Safety
/// `toml` must be a NUL-terminated string and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn regevo_space_from_toml(
    toml: *const c_char,
    out: *mut *mut RegevoSpace,
) -> RegevoStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let text = str_arg(toml, "toml")?;
        let spec = config::space_from_str(text, Path::new("<space>"))?;
        *out = boxed(RegevoSpace(spec));
        Ok(())
    })
}

/// # Safety
/// `space` must come from this library or be NULL.
#[no_mangle]
pub unsafe extern "C" fn regevo_space_free(space: *mut RegevoSpace) {
    if !space.is_null() {
        drop(Box::from_raw(space));
    }
}

/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn regevo_search_config_default(
    out: *mut *mut RegevoSearchConfig,
) -> RegevoStatus {
    guard(|| {
        *out_arg(out, "out")? = boxed(RegevoSearchConfig(SearchConfig::default()));
        Ok(())
    })
}

/// Parses a search TOML document.
///
/// # Safety
/// `toml` must be a NUL-terminated string and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn regevo_search_config_from_toml(
    toml: *const c_char,
    out: *mut *mut RegevoSearchConfig,
) -> RegevoStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let text = str_arg(toml, "toml")?;
        let cfg = config::search_from_str(text, Path::new("<search>"))?;
        *out = boxed(RegevoSearchConfig(cfg));
        Ok(())
    })
}

/// # Safety
/// `config` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn regevo_search_config_set_seed(
    config: *mut RegevoSearchConfig,
    seed: u64,
) -> RegevoStatus {
    guard(|| {
        out_arg(config, "config")?.0.rng_seed = seed;
        Ok(())
    })
}

/// # Safety
/// `config` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn regevo_search_config_set_total_candidates(
    config: *mut RegevoSearchConfig,
    total: usize,
) -> RegevoStatus {
    guard(|| {
        out_arg(config, "config")?.0.total_candidates = total;
        Ok(())
    })
}

/// # Safety
/// `config` must come from this library or be NULL.
#[no_mangle]
pub unsafe extern "C" fn regevo_search_config_free(config: *mut RegevoSearchConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// Runs a search and returns its trace.
///
/// # Safety
/// Handles must be live and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn regevo_run_search(
    space: *const RegevoSpace,
    config: *const RegevoSearchConfig,
    out: *mut *mut RegevoTrace,
) -> RegevoStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let space = handle(space, "space")?;
        let config = handle(config, "config")?;
        let outcome = regevo::run_search(&config.0, &space.0)?;
        *out = boxed(RegevoTrace(outcome.trace));
        Ok(())
    })
}

/// # Safety
/// `path` must be a NUL-terminated string and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn regevo_trace_read(
    path: *const c_char,
    out: *mut *mut RegevoTrace,
) -> RegevoStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let path = str_arg(path, "path")?;
        *out = boxed(RegevoTrace(regevo::read_trace(path)?));
        Ok(())
    })
}

/// # Safety
/// `trace` must be live and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn regevo_trace_write(
    trace: *const RegevoTrace,
    path: *const c_char,
) -> RegevoStatus {
    guard(|| {
        let trace = handle(trace, "trace")?;
        let path = str_arg(path, "path")?;
        regevo::write_trace(&trace.0, path)?;
        Ok(())
    })
}

/// # Safety
/// `trace` must be live and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn regevo_trace_len(
    trace: *const RegevoTrace,
    out: *mut usize,
) -> RegevoStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = handle(trace, "trace")?.0.len();
        Ok(())
    })
}

fn event_at(trace: &RegevoTrace, index: usize) -> Result<&TraceEvent, Fail> {
    trace.0.get(index).ok_or_else(|| {
        Fail(
            RegevoStatus::OutOfRange,
            format!("event {index} out of range (len {})", trace.0.len()),
        )
    })
}

/// # Safety
/// `trace` must be live and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn regevo_trace_event(
    trace: *const RegevoTrace,
    index: usize,
    out: *mut RegevoEvent,
) -> RegevoStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let e = event_at(handle(trace, "trace")?, index)?;
        *out = RegevoEvent {
            candidate_id: e.candidate_id,
            begin_ts: e.begin_ts,
            end_ts: e.end_ts,
            worker_id: e.worker_id,
            quality: e.quality,
            stage: e.stage,
            has_donor: e.donor_id.is_some(),
            donor_id: e.donor_id.unwrap_or(0),
            donor_prefix_len: e.donor_prefix_len.unwrap_or(0),
            sequence_len: e.sequence.len(),
        };
        Ok(())
    })
}

/// Copies the event's choices into `buf`. `out_len` always receives the
/// sequence length; a short buffer yields `BufferTooSmall`. `buf` may be
/// NULL when `capacity` is 0.
///
/// # Safety
/// `buf` must be valid for `capacity` writes and `out_len` for one.
#[no_mangle]
pub unsafe extern "C" fn regevo_trace_sequence(
    trace: *const RegevoTrace,
    index: usize,
    buf: *mut u32,
    capacity: usize,
    out_len: *mut usize,
) -> RegevoStatus {
    guard(|| {
        let out_len = out_arg(out_len, "out_len")?;
        let choices = event_at(handle(trace, "trace")?, index)?.sequence.choices();
        *out_len = choices.len();
        if capacity < choices.len() {
            return Err(Fail(
                RegevoStatus::BufferTooSmall,
                format!("need {} slots, got {capacity}", choices.len()),
            ));
        }
        if !choices.is_empty() {
            if buf.is_null() {
                return Err(null("buf"));
            }
            ptr::copy_nonoverlapping(choices.as_ptr(), buf, choices.len());
        }
        Ok(())
    })
}

/// # Safety
/// `trace` must come from this library or be NULL.
#[no_mangle]
pub unsafe extern "C" fn regevo_trace_free(trace: *mut RegevoTrace) {
    if !trace.is_null() {
        drop(Box::from_raw(trace));
    }
}

fn to_policy(p: &RegevoPolicy) -> Result<CachePolicy, Fail> {
    let kind = match p.kind {
        RegevoPolicyKind::StoreAll => PolicyKind::StoreAll,
        RegevoPolicyKind::SkipBottom => PolicyKind::SkipBottom,
        RegevoPolicyKind::ProbabilityThreshold => {
            PolicyKind::ProbabilityThreshold { epsilon: p.epsilon }
        }
        RegevoPolicyKind::TierThreshold => PolicyKind::TierThreshold {
            min_donations: p.min_donations,
            window: p.window,
        },
    };
    let capacity = match p.capacity {
        0 => None,
        c => Some(usize::try_from(c).map_err(|_| {
            Fail(
                RegevoStatus::InvalidArgument,
                format!("capacity {c} too large"),
            )
        })?),
    };
    let policy = CachePolicy { kind, capacity };
    policy.validate()?;
    Ok(policy)
}

/// Replays a trace against one admission policy.
///
/// # Safety
/// `trace` must be live, `policy` readable and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn regevo_cache_replay(
    trace: *const RegevoTrace,
    policy: *const RegevoPolicy,
    population_size: usize,
    sample_size: usize,
    out: *mut RegevoCacheReport,
) -> RegevoStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let trace = handle(trace, "trace")?;
        let policy = to_policy(handle(policy, "policy")?)?;
        let ctx = ReplayContext {
            population_size,
            sample_size,
        };
        let r = regevo::replay(&trace.0, &policy, &ctx)?;
        *out = RegevoCacheReport {
            stores_made: r.stores_made,
            stores_skipped: r.stores_skipped,
            donor_hits: r.donor_hits,
            donor_misses: r.donor_misses,
            wasted_stores: r.wasted_stores,
            miss_penalty_prefix_slots: r.miss_penalty_prefix_slots,
            evictions: r.evictions,
            hit_rate: r.hit_rate().unwrap_or(f64::NAN),
        };
        Ok(())
    })
}

fn write_f64(out: *mut f64, value: impl FnOnce() -> Result<f64, Fail>) -> RegevoStatus {
    guard(|| {
        // SAFETY: the caller guarantees `out` is NULL or valid for writes.
        let out = unsafe { out_arg(out, "out")? };
        *out = value()?;
        Ok(())
    })
}

/// Probability of exactly `k` marked items in `n` draws without replacement
/// from `total` items of which `marked` are marked.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn regevo_hypergeom_pmf(
    total: u64,
    marked: u64,
    draws: u64,
    k: u64,
    out: *mut f64,
) -> RegevoStatus {
    write_f64(out, || {
        Ok(prob::hypergeom_pmf(
            HypergeomParams::new(total, marked, draws)?,
            k,
        ))
    })
}

/// Bound on the chance that the rank-`rank` member (1 = worst) is the best
/// of a sample of `sample` from `population`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn regevo_transfer_bound(
    population: u64,
    rank: u64,
    sample: u64,
    out: *mut f64,
) -> RegevoStatus {
    write_f64(out, || {
        Ok(prob::transfer_prob_bound(population, rank, sample)?)
    })
}

/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn regevo_birthday_threshold(
    prefixes: f64,
    repeats: u32,
    probability: f64,
    out: *mut f64,
) -> RegevoStatus {
    write_f64(out, || {
        Ok(prob::birthday_threshold(prefixes, repeats, probability)?)
    })
}

/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn regevo_normal_order_stat(
    rank: u64,
    count: u64,
    out: *mut f64,
) -> RegevoStatus {
    write_f64(out, || Ok(prob::normal_order_stat(rank, count)?))
}

/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn regevo_quanta_delay_bound(
    wait_for: u64,
    workers: u64,
    mean: f64,
    stddev: f64,
    out: *mut f64,
) -> RegevoStatus {
    write_f64(out, || {
        Ok(prob::quanta_delay_bound(wait_for, workers, mean, stddev)?)
    })
}

/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn regevo_evals_until_donor(
    population: u64,
    sample: u64,
    out: *mut f64,
) -> RegevoStatus {
    write_f64(out, || {
        Ok(prob::expected_evals_until_donor(population, sample)?)
    })
}
