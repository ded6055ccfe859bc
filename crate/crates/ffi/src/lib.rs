//! C ABI over `dyngraph-anomaly`.
//!
//! Networks are opaque handles created by [`dg_network_from_edge_list`] and
//! released with [`dg_network_free`]. Every fallible call returns a
//! [`DgStatus`]; on failure [`dg_last_error_message`] describes the error
//! for the calling thread. Strings returned to the caller must be released
//! with [`dg_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use dyngraph_anomaly::cli::{detector_config, to_json};
use dyngraph_anomaly::config::FlatConfig;
use dyngraph_anomaly::error::Error;
use dyngraph_anomaly::graph::DynamicNetwork;
use dyngraph_anomaly::ingest::load_network;
use dyngraph_anomaly::stats::{self, StatisticId};

/// Result codes. Values 2 to 4 match the command-line exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DgStatus {
    Ok = 0,
    /// Null pointer or non-UTF-8 string argument.
    InvalidArgument = 1,
    Config = 2,
    Data = 3,
    Degenerate = 4,
    /// An internal panic was caught at the boundary.
    Internal = 5,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DgStatistic {
    Ged = 0,
    Dd = 1,
    Cb = 2,
    Ms = 3,
    Msc = 4,
    Ds = 5,
    Dsc = 6,
    Tp = 7,
}

impl From<DgStatistic> for StatisticId {
    fn from(s: DgStatistic) -> Self {
        match s {
            DgStatistic::Ged => StatisticId::Ged,
            DgStatistic::Dd => StatisticId::Dd,
            DgStatistic::Cb => StatisticId::Cb,
            DgStatistic::Ms => StatisticId::Ms,
            DgStatistic::Msc => StatisticId::MsCorrected,
            DgStatistic::Ds => StatisticId::Ds,
            DgStatistic::Dsc => StatisticId::DsCorrected,
            DgStatistic::Tp => StatisticId::Tp,
        }
    }
}

impl From<StatisticId> for DgStatistic {
    fn from(s: StatisticId) -> Self {
        match s {
            StatisticId::Ged => DgStatistic::Ged,
            StatisticId::Dd => DgStatistic::Dd,
            StatisticId::Cb => DgStatistic::Cb,
            StatisticId::Ms => DgStatistic::Ms,
            StatisticId::MsCorrected => DgStatistic::Msc,
            StatisticId::Ds => DgStatistic::Ds,
            StatisticId::DsCorrected => DgStatistic::Dsc,
            StatisticId::Tp => DgStatistic::Tp,
        }
    }
}

/// Opaque network handle.
pub struct DgNetwork {
    inner: DynamicNetwork,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> DgStatus {
    match e.exit_code() {
        2 => DgStatus::Config,
        4 => DgStatus::Degenerate,
        _ => DgStatus::Data,
    }
}

enum Failure {
    Arg(String),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

/// Runs `f`, recording any error or panic for [`dg_last_error_message`].
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> DgStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            DgStatus::Ok
        }
        Ok(Err(Failure::Arg(msg))) => {
            set_error(msg);
            DgStatus::InvalidArgument
        }
        Ok(Err(Failure::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic".to_owned());
            DgStatus::Internal
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::Arg(format!("`{name}` is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure::Arg(format!("`{name}` is not valid UTF-8")))
}

unsafe fn net_arg<'a>(p: *const DgNetwork) -> Result<&'a DynamicNetwork, Failure> {
    p.as_ref()
        .map(|n| &n.inner)
        .ok_or_else(|| Failure::Arg("`network` is null".to_owned()))
}

fn out_arg<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, Failure> {
    // SAFETY: callers pass either null or a valid, writable pointer
    unsafe { p.as_mut() }.ok_or_else(|| Failure::Arg(format!("`{name}` is null")))
}

/// Parses a `timestamp src dst [count]` edge list and windows it.
/// `n_nodes` of 0 means "number of distinct labels".
///
/// # Safety
/// `text` must be a nul-terminated string; `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn dg_network_from_edge_list(
    text: *const c_char,
    window: i64,
    n_nodes: usize,
    out: *mut *mut DgNetwork,
) -> DgStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let text = str_arg(text, "text")?;
        let nodes = (n_nodes > 0).then_some(n_nodes);
        let inner = load_network(text, window, nodes)?.network;
        *out = Box::into_raw(Box::new(DgNetwork { inner }));
        Ok(())
    })
}

/// # Safety
/// `network` must come from [`dg_network_from_edge_list`] and not be used
/// afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn dg_network_free(network: *mut DgNetwork) {
    if !network.is_null() {
        drop(Box::from_raw(network));
    }
}

/// # Safety
/// `network` must be a live handle or null (returns 0).
#[no_mangle]
pub unsafe extern "C" fn dg_network_num_nodes(network: *const DgNetwork) -> usize {
    network.as_ref().map_or(0, |n| n.inner.n_nodes())
}

/// # Safety
/// `network` must be a live handle or null (returns 0).
#[no_mangle]
pub unsafe extern "C" fn dg_network_num_snapshots(network: *const DgNetwork) -> usize {
    network.as_ref().map_or(0, |n| n.inner.len())
}

/// # Safety
/// `network` must be a live handle or null (returns 0).
#[no_mangle]
pub unsafe extern "C" fn dg_network_first_t(network: *const DgNetwork) -> i64 {
    network.as_ref().map_or(0, |n| n.inner.first_t())
}

/// Accepts GED, DD, CB, MS, MSC, DS, DSC, TP (case-insensitive).
///
/// # Safety
/// `name` must be a nul-terminated string; `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn dg_statistic_from_name(
    name: *const c_char,
    out: *mut DgStatistic,
) -> DgStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let id: StatisticId = str_arg(name, "name")?.parse()?;
        *out = id.into();
        Ok(())
    })
}

/// Value of `statistic` at time step `t`.
///
/// # Safety
/// `network` must be a live handle; `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn dg_compute(
    network: *const DgNetwork,
    statistic: DgStatistic,
    t: i64,
    out: *mut f64,
) -> DgStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let net = net_arg(network)?;
        *out = stats::compute(statistic.into(), net, t)?;
        Ok(())
    })
}

/// Runs detection and returns the report as JSON. `config` holds flat
/// `key = value` lines (alpha, statistics, null, detrend, empty_snapshots);
/// null or empty selects the defaults. Release the result with
/// [`dg_string_free`].
///
/// # Safety
/// `network` must be a live handle; `config` null or a nul-terminated
/// string; `out_json` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn dg_detect_json(
    network: *const DgNetwork,
    config: *const c_char,
    out_json: *mut *mut c_char,
) -> DgStatus {
    guard(|| {
        let out = out_arg(out_json, "out_json")?;
        *out = ptr::null_mut();
        let net = net_arg(network)?;
        let text = if config.is_null() {
            ""
        } else {
            str_arg(config, "config")?
        };
        let mut flat = FlatConfig::parse(text)?;
        let cfg = detector_config(&mut flat)?;
        flat.finish()?;
        let report = dyngraph_anomaly::detect(net, &cfg)?;
        let json = CString::new(to_json(&report)?).expect("json has no nul");
        *out = json.into_raw();
        Ok(())
    })
}

/// Message for the last failed call on this thread, or null. Valid until
/// the next call on this thread.
#[no_mangle]
pub extern "C" fn dg_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// # Safety
/// `s` must come from this library and not be used afterwards. Null is
/// ignored.
#[no_mangle]
pub unsafe extern "C" fn dg_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
