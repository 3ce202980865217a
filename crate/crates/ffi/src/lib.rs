//! C ABI over the `netplan` planner and simulator.
//!
//! Every fallible call returns a [`NetplanStatus`]; on failure the message is
//! available from [`netplan_last_error`] on the same thread. Networks are
//! opaque handles created by [`netplan_network_parse`] or
//! [`netplan_network_load`] and released with [`netplan_network_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use netplan::sim::{random_operands, reference_conv, simulate, utilization};
use netplan::{mappers, netfile, ArraySpec, Error, LayerSpec, MappingPlan, Method, NetworkSpec};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NetplanStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Infeasible = 3,
    ParseError = 4,
    BufferTooSmall = 5,
    SimulationMismatch = 6,
    BudgetExceeded = 7,
    Io = 8,
    Internal = 99,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NetplanMethod {
    Im2col = 0,
    Sdk = 1,
    VwSdk = 2,
}

impl From<NetplanMethod> for Method {
    fn from(m: NetplanMethod) -> Self {
        match m {
            NetplanMethod::Im2col => Method::Im2col,
            NetplanMethod::Sdk => Method::Sdk,
            NetplanMethod::VwSdk => Method::VwSdk,
        }
    }
}

impl From<Method> for NetplanMethod {
    fn from(m: Method) -> Self {
        match m {
            Method::Im2col => NetplanMethod::Im2col,
            Method::Sdk => NetplanMethod::Sdk,
            Method::VwSdk => NetplanMethod::VwSdk,
        }
    }
}

/// One convolutional layer, stride 1.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct NetplanLayer {
    pub ifm_w: u32,
    pub ifm_h: u32,
    pub k_w: u32,
    pub k_h: u32,
    pub in_ch: u32,
    pub out_ch: u32,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct NetplanArray {
    pub rows: u32,
    pub cols: u32,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct NetplanPlan {
    pub method: NetplanMethod,
    pub pw_w: u32,
    pub pw_h: u32,
    pub ic_tile: u32,
    pub oc_tile: u32,
    pub windows_per_pw: u32,
    pub num_pw: u64,
    pub ar_cycles: u64,
    pub ac_cycles: u64,
    pub total_cycles: u64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct NetplanUtilization {
    /// AR x AC cycles per parallel-window position.
    pub cycles: u64,
    pub mean_pct: f64,
    pub peak_pct: f64,
}

/// Opaque parsed network.
pub struct NetplanNetwork {
    spec: NetworkSpec,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).unwrap_or_default());
}

fn status_of(err: &Error) -> NetplanStatus {
    match err {
        Error::InvalidLayer(_)
        | Error::InvalidArray(_)
        | Error::InvalidWindow { .. }
        | Error::InvalidNetwork(_) => NetplanStatus::InvalidArgument,
        Error::InfeasibleWindow { .. } | Error::InfeasiblePlan(_) => NetplanStatus::Infeasible,
        Error::OracleBudget { .. } => NetplanStatus::BudgetExceeded,
        Error::ShapeMismatch { .. } | Error::OverlapConflict { .. } => {
            NetplanStatus::SimulationMismatch
        }
        Error::Parse { .. } => NetplanStatus::ParseError,
        Error::Layer { source, .. } => status_of(source),
    }
}

fn fail(err: Error) -> NetplanStatus {
    set_error(err.to_string());
    status_of(&err)
}

/// Runs `f`, translating panics into [`NetplanStatus::Internal`].
fn guard(f: impl FnOnce() -> NetplanStatus) -> NetplanStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => {
            set_error("internal panic");
            NetplanStatus::Internal
        }
    }
}

unsafe fn read<'a, T>(p: *const T) -> Result<&'a T, NetplanStatus> {
    if p.is_null() {
        set_error("null pointer argument");
        return Err(NetplanStatus::NullPointer);
    }
    Ok(&*p)
}

fn to_layer(l: &NetplanLayer) -> Result<LayerSpec, Error> {
    LayerSpec::new(
        "layer",
        l.ifm_w as usize,
        l.ifm_h as usize,
        l.k_w as usize,
        l.k_h as usize,
        l.in_ch as usize,
        l.out_ch as usize,
    )
}

fn to_array(a: &NetplanArray) -> Result<ArraySpec, Error> {
    ArraySpec::new(a.rows as usize, a.cols as usize)
}

fn to_plan(p: &MappingPlan) -> NetplanPlan {
    NetplanPlan {
        method: p.method.into(),
        pw_w: p.window.pw_w as u32,
        pw_h: p.window.pw_h as u32,
        ic_tile: p.ic_tile as u32,
        oc_tile: p.oc_tile as u32,
        windows_per_pw: p.windows_per_pw as u32,
        num_pw: p.num_pw,
        ar_cycles: p.ar_cycles,
        ac_cycles: p.ac_cycles,
        total_cycles: p.total_cycles,
    }
}

macro_rules! try_ffi {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(e) => return fail(e),
        }
    };
}

macro_rules! try_ptr {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(s) => return s,
        }
    };
}

/// Last error message on this thread, or an empty string. Valid until the
/// next netplan call on the same thread.
#[no_mangle]
pub extern "C" fn netplan_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Static description of a status code.
#[no_mangle]
pub extern "C" fn netplan_status_str(status: NetplanStatus) -> *const c_char {
    let s: &'static CStr = match status {
        NetplanStatus::Ok => c"ok",
        NetplanStatus::NullPointer => c"null pointer",
        NetplanStatus::InvalidArgument => c"invalid argument",
        NetplanStatus::Infeasible => c"infeasible",
        NetplanStatus::ParseError => c"parse error",
        NetplanStatus::BufferTooSmall => c"buffer too small",
        NetplanStatus::SimulationMismatch => c"simulation mismatch",
        NetplanStatus::BudgetExceeded => c"budget exceeded",
        NetplanStatus::Io => c"i/o error",
        NetplanStatus::Internal => c"internal error",
    };
    s.as_ptr()
}

/// Plans one layer with `method`.
///
/// # Safety
/// `layer` and `array` must point to valid structs; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn netplan_plan_layer(
    layer: *const NetplanLayer,
    array: *const NetplanArray,
    method: NetplanMethod,
    out: *mut NetplanPlan,
) -> NetplanStatus {
    guard(|| {
        let l = try_ffi!(to_layer(try_ptr!(read(layer))));
        let a = try_ffi!(to_array(try_ptr!(read(array))));
        if out.is_null() {
            set_error("null output pointer");
            return NetplanStatus::NullPointer;
        }
        *out = to_plan(&mappers::plan(&l, &a, method.into()));
        NetplanStatus::Ok
    })
}

/// Exhaustive reference search; fails with `BudgetExceeded` above `budget` candidates.
///
/// # Safety
/// Same as [`netplan_plan_layer`].
#[no_mangle]
pub unsafe extern "C" fn netplan_plan_oracle(
    layer: *const NetplanLayer,
    array: *const NetplanArray,
    budget: u64,
    out: *mut NetplanPlan,
) -> NetplanStatus {
    guard(|| {
        let l = try_ffi!(to_layer(try_ptr!(read(layer))));
        let a = try_ffi!(to_array(try_ptr!(read(array))));
        if out.is_null() {
            set_error("null output pointer");
            return NetplanStatus::NullPointer;
        }
        *out = to_plan(&try_ffi!(mappers::plan_oracle(&l, &a, budget)));
        NetplanStatus::Ok
    })
}

/// Mean and peak used-cell percentage of the `method` plan.
///
/// # Safety
/// Same as [`netplan_plan_layer`].
#[no_mangle]
pub unsafe extern "C" fn netplan_layer_utilization(
    layer: *const NetplanLayer,
    array: *const NetplanArray,
    method: NetplanMethod,
    out: *mut NetplanUtilization,
) -> NetplanStatus {
    guard(|| {
        let l = try_ffi!(to_layer(try_ptr!(read(layer))));
        let a = try_ffi!(to_array(try_ptr!(read(array))));
        if out.is_null() {
            set_error("null output pointer");
            return NetplanStatus::NullPointer;
        }
        let p = mappers::plan(&l, &a, method.into());
        let u = try_ffi!(utilization(&l, &a, &p));
        *out = NetplanUtilization {
            cycles: p.ar_cycles * p.ac_cycles,
            mean_pct: u.mean_pct,
            peak_pct: u.peak_pct,
        };
        NetplanStatus::Ok
    })
}

/// Simulates the `method` plan on seeded random operands and compares it
/// with a direct convolution. Returns `SimulationMismatch` on any difference.
///
/// # Safety
/// `layer`, `array` must be valid; `measured_cycles` may be null.
#[no_mangle]
pub unsafe extern "C" fn netplan_verify_layer(
    layer: *const NetplanLayer,
    array: *const NetplanArray,
    method: NetplanMethod,
    seed: u64,
    measured_cycles: *mut u64,
) -> NetplanStatus {
    guard(|| {
        let l = try_ffi!(to_layer(try_ptr!(read(layer))));
        let a = try_ffi!(to_array(try_ptr!(read(array))));
        let p = mappers::plan(&l, &a, method.into());
        let (ifm, weights) = random_operands(&l, seed);
        let got = try_ffi!(simulate(&l, &a, &p, &ifm, &weights));
        let want = try_ffi!(reference_conv(&ifm, &weights));
        if !measured_cycles.is_null() {
            *measured_cycles = got.measured_cycles;
        }
        if got.ofm != want {
            set_error("simulated output differs from direct convolution");
            return NetplanStatus::SimulationMismatch;
        }
        if got.measured_cycles > p.total_cycles {
            set_error(format!(
                "measured {} cycles, analytic {}",
                got.measured_cycles, p.total_cycles
            ));
            return NetplanStatus::SimulationMismatch;
        }
        NetplanStatus::Ok
    })
}

fn network_out(spec: NetworkSpec, out: *mut *mut NetplanNetwork) -> NetplanStatus {
    // SAFETY: callers checked `out` for null.
    unsafe { *out = Box::into_raw(Box::new(NetplanNetwork { spec })) };
    NetplanStatus::Ok
}

/// Parses network-file text into a new handle.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn netplan_network_parse(
    text: *const c_char,
    out: *mut *mut NetplanNetwork,
) -> NetplanStatus {
    guard(|| {
        if text.is_null() || out.is_null() {
            set_error("null pointer argument");
            return NetplanStatus::NullPointer;
        }
        *out = ptr::null_mut();
        let Ok(text) = CStr::from_ptr(text).to_str() else {
            set_error("network text is not UTF-8");
            return NetplanStatus::InvalidArgument;
        };
        network_out(try_ffi!(netfile::parse(text)), out)
    })
}

/// Loads a network file into a new handle.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn netplan_network_load(
    path: *const c_char,
    out: *mut *mut NetplanNetwork,
) -> NetplanStatus {
    guard(|| {
        if path.is_null() || out.is_null() {
            set_error("null pointer argument");
            return NetplanStatus::NullPointer;
        }
        *out = ptr::null_mut();
        let Ok(path) = CStr::from_ptr(path).to_str() else {
            set_error("path is not UTF-8");
            return NetplanStatus::InvalidArgument;
        };
        match netfile::load(Path::new(path)) {
            Ok(spec) => network_out(spec, out),
            Err(e @ netfile::LoadError::Io { .. }) => {
                set_error(e.to_string());
                NetplanStatus::Io
            }
            Err(netfile::LoadError::Parse { path, source }) => {
                set_error(format!("{path}: {source}"));
                status_of(&source)
            }
        }
    })
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `net` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn netplan_network_free(net: *mut NetplanNetwork) {
    if !net.is_null() {
        drop(Box::from_raw(net));
    }
}

/// Number of layers, or 0 for a null handle.
///
/// # Safety
/// `net` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn netplan_network_layer_count(net: *const NetplanNetwork) -> usize {
    net.as_ref().map_or(0, |n| n.spec.layers().len())
}

/// Plans every layer into `plans[0..layer_count]` and writes the summed
/// cycles to `total_cycles`. Fails with `BufferTooSmall` (writing nothing to
/// `plans`) when `capacity` is short; `total_cycles` is still set.
///
/// # Safety
/// `net` must be a live handle, `array` valid, `plans` writable for
/// `capacity` elements, `total_cycles` writable or null.
#[no_mangle]
pub unsafe extern "C" fn netplan_network_plan(
    net: *const NetplanNetwork,
    array: *const NetplanArray,
    method: NetplanMethod,
    plans: *mut NetplanPlan,
    capacity: usize,
    total_cycles: *mut u64,
) -> NetplanStatus {
    guard(|| {
        let net = try_ptr!(read(net));
        let a = try_ffi!(to_array(try_ptr!(read(array))));
        let np = try_ffi!(mappers::plan_network(&net.spec, &a, method.into()));
        if !total_cycles.is_null() {
            *total_cycles = np.total_cycles;
        }
        if capacity < np.layers.len() {
            set_error(format!(
                "need {} plans, capacity {capacity}",
                np.layers.len()
            ));
            return NetplanStatus::BufferTooSmall;
        }
        if plans.is_null() {
            set_error("null plans buffer");
            return NetplanStatus::NullPointer;
        }
        for (i, (_, p)) in np.layers.iter().enumerate() {
            *plans.add(i) = to_plan(p);
        }
        NetplanStatus::Ok
    })
}
