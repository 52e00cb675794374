//! C ABI over the spectomo library.
//!
//! Objects cross the boundary as opaque handles that the caller frees with the matching
//! `*_free` function. Every fallible call returns a [`SpectomoStatus`]; on failure the
//! message is available from [`spectomo_last_error`] on the same thread.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use spectomo::airsim::exact_joint;
use spectomo::harness::{overhead_report, OverheadParams};
use spectomo::hod::{LatentModel, MarginalQuery};
use spectomo::model::{generate_topology, Topology, TopologyParams};
use spectomo::pipeline::{self, PipelineParams};
use spectomo::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpectomoStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidParameter = 2,
    InvalidTopology = 3,
    PlacementFailed = 4,
    BoundExceeded = 5,
    MissingPair = 6,
    Schema = 7,
    Io = 8,
    Json = 9,
    Csv = 10,
    Utf8 = 11,
    BufferTooSmall = 12,
    Panic = 13,
}

impl From<&Error> for SpectomoStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::InvalidParameter(_) => Self::InvalidParameter,
            Error::InvalidTopology(_) => Self::InvalidTopology,
            Error::PlacementFailed { .. } => Self::PlacementFailed,
            Error::BoundExceeded(_) => Self::BoundExceeded,
            Error::MissingPair(..) => Self::MissingPair,
            Error::Schema { .. } => Self::Schema,
            Error::Io(_) => Self::Io,
            Error::Json(_) => Self::Json,
            Error::Csv(_) => Self::Csv,
        }
    }
}

/// Opaque topology handle.
pub struct SpectomoTopology(Topology);

/// Opaque fitted latent model handle.
pub struct SpectomoModel(LatentModel);

/// Measurement overhead counts, saturated at `u64::MAX`.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SpectomoOverhead {
    pub first_order_sets: u64,
    pub pairwise_sets: u64,
    pub tomography_frames: u64,
    pub oracle_sets: u64,
    pub oracle_frames: u64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(SpectomoStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure((&e).into(), e.to_string())
    }
}

fn fail<T>(status: SpectomoStatus, msg: &str) -> Result<T, Failure> {
    Err(Failure(status, msg.to_string()))
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> SpectomoStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SpectomoStatus::Ok,
        Ok(Err(Failure(s, m))) => {
            set_error(&m);
            s
        }
        Err(_) => {
            set_error("internal panic");
            SpectomoStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(s: *const c_char) -> Result<&'a str, Failure> {
    if s.is_null() {
        return fail(SpectomoStatus::NullPointer, "null string argument");
    }
    CStr::from_ptr(s)
        .to_str()
        .or_else(|_| fail(SpectomoStatus::Utf8, "string argument is not UTF-8"))
}

unsafe fn slice_arg<'a, T>(p: *const T, len: usize) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return fail(SpectomoStatus::NullPointer, "null array argument");
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn ref_arg<'a, T>(p: *const T) -> Result<&'a T, Failure> {
    p.as_ref().map_or_else(|| fail(SpectomoStatus::NullPointer, "null handle"), Ok)
}

unsafe fn write_out<T>(out: *mut T, v: T) -> Result<(), Failure> {
    if out.is_null() {
        return fail(SpectomoStatus::NullPointer, "null output pointer");
    }
    out.write(v);
    Ok(())
}

fn into_c_string(s: String) -> Result<*mut c_char, Failure> {
    CString::new(s)
        .map(CString::into_raw)
        .or_else(|_| fail(SpectomoStatus::Utf8, "string contains an interior NUL"))
}

/// Message of the last failed call on this thread, or null. Valid until the next failure.
#[no_mangle]
pub extern "C" fn spectomo_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn spectomo_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Free a string returned by this library. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn spectomo_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Generate a topology with default parameters apart from the given counts.
#[no_mangle]
pub unsafe extern "C" fn spectomo_topology_generate(
    num_clients: usize,
    num_channels: usize,
    num_hts: usize,
    seed: u64,
    out: *mut *mut SpectomoTopology,
) -> SpectomoStatus {
    guard(|| {
        let p = TopologyParams { num_clients, num_channels, num_hts, ..Default::default() };
        let t = generate_topology(&p, seed)?;
        write_out(out, Box::into_raw(Box::new(SpectomoTopology(t))))
    })
}

#[no_mangle]
pub unsafe extern "C" fn spectomo_topology_from_json(json: *const c_char, out: *mut *mut SpectomoTopology) -> SpectomoStatus {
    guard(|| {
        let t = Topology::from_json(str_arg(json)?)?;
        write_out(out, Box::into_raw(Box::new(SpectomoTopology(t))))
    })
}

/// Serialize to JSON; free the result with `spectomo_string_free`.
#[no_mangle]
pub unsafe extern "C" fn spectomo_topology_to_json(t: *const SpectomoTopology, out: *mut *mut c_char) -> SpectomoStatus {
    guard(|| {
        let s = ref_arg(t)?.0.to_json()?;
        write_out(out, into_c_string(s)?)
    })
}

#[no_mangle]
pub unsafe extern "C" fn spectomo_topology_num_clients(t: *const SpectomoTopology, out: *mut usize) -> SpectomoStatus {
    guard(|| write_out(out, ref_arg(t)?.0.num_clients()))
}

#[no_mangle]
pub unsafe extern "C" fn spectomo_topology_free(t: *mut SpectomoTopology) {
    if !t.is_null() {
        drop(Box::from_raw(t));
    }
}

/// Exact joint access distribution of `subset` on `channel`. `probs` receives `2^len`
/// values; bit `k` of the index is set when `subset[k]` accesses.
#[no_mangle]
pub unsafe extern "C" fn spectomo_exact_joint(
    t: *const SpectomoTopology,
    channel: usize,
    subset: *const usize,
    len: usize,
    probs: *mut f64,
    probs_len: usize,
) -> SpectomoStatus {
    guard(|| {
        let t = &ref_arg(t)?.0;
        let subset = slice_arg(subset, len)?;
        let d = exact_joint(t, channel, subset)?;
        if probs_len < d.probabilities.len() {
            return fail(SpectomoStatus::BufferTooSmall, &format!("need {} slots", d.probabilities.len()));
        }
        if probs.is_null() {
            return fail(SpectomoStatus::NullPointer, "null output buffer");
        }
        std::slice::from_raw_parts_mut(probs, d.probabilities.len()).copy_from_slice(&d.probabilities);
        Ok(())
    })
}

/// Measure and fit a latent model for one channel. `alphabet == 0` means `F = N`;
/// `frames_per_sample == 0` keeps the default.
#[no_mangle]
pub unsafe extern "C" fn spectomo_model_estimate(
    t: *const SpectomoTopology,
    channel: usize,
    alphabet: usize,
    frames_per_sample: u64,
    seed: u64,
    out: *mut *mut SpectomoModel,
) -> SpectomoStatus {
    guard(|| {
        let t = &ref_arg(t)?.0;
        if channel >= t.num_channels {
            return fail(SpectomoStatus::InvalidParameter, "channel out of range");
        }
        let mut p = PipelineParams::default();
        if alphabet > 0 {
            p.alphabet = Some(alphabet);
        }
        if frames_per_sample > 0 {
            p.tomography.frames_per_sample = frames_per_sample;
        }
        let mut e = pipeline::estimate(t, &p, seed)?;
        let m = e.models.swap_remove(channel);
        write_out(out, Box::into_raw(Box::new(SpectomoModel(m))))
    })
}

#[no_mangle]
pub unsafe extern "C" fn spectomo_model_from_json(json: *const c_char, out: *mut *mut SpectomoModel) -> SpectomoStatus {
    guard(|| {
        let m: LatentModel = serde_json::from_str(str_arg(json)?).map_err(Error::from)?;
        let m = LatentModel::new(m.channel, m.lambda, m.p)?;
        write_out(out, Box::into_raw(Box::new(SpectomoModel(m))))
    })
}

#[no_mangle]
pub unsafe extern "C" fn spectomo_model_to_json(m: *const SpectomoModel, out: *mut *mut c_char) -> SpectomoStatus {
    guard(|| {
        let s = ref_arg(m)?.0.to_json()?;
        write_out(out, into_c_string(s)?)
    })
}

/// `P(access members accessed, other group members blocked)` under the model.
#[no_mangle]
pub unsafe extern "C" fn spectomo_model_query(
    m: *const SpectomoModel,
    group: *const usize,
    group_len: usize,
    access: *const usize,
    access_len: usize,
    out: *mut f64,
) -> SpectomoStatus {
    guard(|| {
        let m = &ref_arg(m)?.0;
        let group = slice_arg(group, group_len)?.to_vec();
        let access = slice_arg(access, access_len)?.to_vec();
        if group.iter().any(|&i| i >= m.num_clients()) {
            return fail(SpectomoStatus::InvalidParameter, "client index out of range");
        }
        let q = MarginalQuery::new(group, access)?;
        write_out(out, m.query(&q))
    })
}

#[no_mangle]
pub unsafe extern "C" fn spectomo_model_num_clients(m: *const SpectomoModel, out: *mut usize) -> SpectomoStatus {
    guard(|| write_out(out, ref_arg(m)?.0.num_clients()))
}

#[no_mangle]
pub unsafe extern "C" fn spectomo_model_free(m: *mut SpectomoModel) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Number of hidden terminals inferred from a fitted model.
#[no_mangle]
pub unsafe extern "C" fn spectomo_blueprint_count(m: *const SpectomoModel, seed: u64, out: *mut usize) -> SpectomoStatus {
    guard(|| {
        let m = ref_arg(m)?.0.clone();
        let bps = pipeline::blueprint_all(std::slice::from_ref(&m), &Default::default(), seed)?;
        write_out(out, bps[0].blueprint.inferred_hts.len())
    })
}

#[no_mangle]
pub unsafe extern "C" fn spectomo_overhead(
    channels: u64,
    clients: u64,
    clusters: u64,
    antennas: u64,
    frames: u64,
    out: *mut SpectomoOverhead,
) -> SpectomoStatus {
    guard(|| {
        let r = overhead_report(&OverheadParams { channels, clients, clusters, antennas, frames })?;
        let sat = |v: u128| u64::try_from(v).unwrap_or(u64::MAX);
        write_out(
            out,
            SpectomoOverhead {
                first_order_sets: sat(r.first_order_sets),
                pairwise_sets: sat(r.pairwise_sets),
                tomography_frames: sat(r.tomography_frames),
                oracle_sets: sat(r.oracle_sets),
                oracle_frames: sat(r.oracle_frames),
            },
        )
    })
}
