//! C interface to `isolab`.
//!
//! Objects cross the boundary as opaque handles created by `*_from_json`
//! and released by the matching `*_free`. Every call returns an
//! [`IsolabStatus`]; on failure a message is available from
//! [`isolab_last_error`] until the next failing call on the same thread.
//! Strings handed out by the library must be released with
//! [`isolab_string_free`].

use isolab::braid::{orbit_bfs, RepTuple};
use isolab::cli::{dispatch, Command, RunOptions};
use isolab::garnier::{companion_monodromy, hamiltonians, GarnierConfig, PhasePoint, RationalPotential};
use isolab::{Error, Tolerances};
use serde::Deserialize;
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

/// Result codes of every exported function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IsolabStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// A string argument was not valid UTF-8.
    Utf8 = 2,
    /// Malformed or inconsistent input.
    Invalid = 3,
    /// Numerical abort (conditioning, degeneracy, step underflow, ...).
    Numerical = 4,
    /// A caller-provided buffer is too small.
    BufferTooSmall = 5,
    /// The library panicked; this is a bug.
    Panic = 6,
}

/// Opaque handle to a tuple of monodromy matrices.
pub struct IsolabTuple(RepTuple);

/// Opaque handle to a Garnier system together with a phase point.
pub struct IsolabGarnier {
    config: GarnierConfig,
    phase: PhasePoint,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn fail(status: IsolabStatus, msg: &str) -> IsolabStatus {
    set_error(msg);
    status
}

fn from_error(e: &Error) -> IsolabStatus {
    let status = if e.is_numerical() {
        IsolabStatus::Numerical
    } else {
        IsolabStatus::Invalid
    };
    fail(status, &e.to_string())
}

fn guard(f: impl FnOnce() -> IsolabStatus) -> IsolabStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            fail(IsolabStatus::Panic, &msg)
        }
    }
}

unsafe fn read_str<'a>(p: *const c_char) -> Result<&'a str, IsolabStatus> {
    if p.is_null() {
        return Err(fail(IsolabStatus::NullArgument, "null string argument"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(IsolabStatus::Utf8, "string argument is not valid UTF-8"))
}

fn hand_out(s: String, out: *mut *mut c_char) -> IsolabStatus {
    match CString::new(s) {
        Ok(c) => {
            unsafe { *out = c.into_raw() };
            IsolabStatus::Ok
        }
        Err(_) => fail(IsolabStatus::Invalid, "output contains a NUL byte"),
    }
}

/// Message of the last failure on this thread; empty if none. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn isolab_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn isolab_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses a tuple from its JSON form
/// (`{"n":..,"m":..,"product_constraint":..,"matrices":[..]}`).
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn isolab_tuple_from_json(json: *const c_char, out: *mut *mut IsolabTuple) -> IsolabStatus {
    guard(|| {
        if out.is_null() {
            return fail(IsolabStatus::NullArgument, "null output pointer");
        }
        let text = match read_str(json) {
            Ok(t) => t,
            Err(s) => return s,
        };
        let tuple: RepTuple = match serde_json::from_str(text) {
            Ok(t) => t,
            Err(e) => return fail(IsolabStatus::Invalid, &format!("malformed tuple: {e}")),
        };
        if let Err(e) = tuple.validate(&Tolerances::default()) {
            return from_error(&e);
        }
        *out = Box::into_raw(Box::new(IsolabTuple(tuple)));
        IsolabStatus::Ok
    })
}

/// Number of matrices and their size.
///
/// # Safety
/// `tuple` must be a live handle; `n` and `m` must be writable.
#[no_mangle]
pub unsafe extern "C" fn isolab_tuple_shape(tuple: *const IsolabTuple, n: *mut usize, m: *mut usize) -> IsolabStatus {
    guard(|| {
        let Some(t) = tuple.as_ref() else {
            return fail(IsolabStatus::NullArgument, "null tuple");
        };
        if n.is_null() || m.is_null() {
            return fail(IsolabStatus::NullArgument, "null output pointer");
        }
        *n = t.0.n;
        *m = t.0.m;
        IsolabStatus::Ok
    })
}

/// # Safety
/// `tuple` must be null or a handle from [`isolab_tuple_from_json`] that
/// has not been freed.
#[no_mangle]
pub unsafe extern "C" fn isolab_tuple_free(tuple: *mut IsolabTuple) {
    if !tuple.is_null() {
        drop(Box::from_raw(tuple));
    }
}

/// Pure-braid orbit of the tuple's class. Writes the verdict as JSON to
/// `out_json` and, through `size` (may be null), the orbit size or 0 when
/// the cap was exceeded.
///
/// # Safety
/// `tuple` must be a live handle; `out_json` must be writable.
#[no_mangle]
pub unsafe extern "C" fn isolab_orbit(
    tuple: *const IsolabTuple,
    cap: usize,
    seed: u64,
    size: *mut usize,
    out_json: *mut *mut c_char,
) -> IsolabStatus {
    guard(|| {
        let Some(t) = tuple.as_ref() else {
            return fail(IsolabStatus::NullArgument, "null tuple");
        };
        if out_json.is_null() {
            return fail(IsolabStatus::NullArgument, "null output pointer");
        }
        let verdict = match orbit_bfs(&t.0, cap, &Tolerances::default(), seed) {
            Ok(v) => v,
            Err(e) => return from_error(&e),
        };
        if !size.is_null() {
            *size = verdict.size().unwrap_or(0);
        }
        match serde_json::to_string(&verdict) {
            Ok(s) => hand_out(s, out_json),
            Err(e) => fail(IsolabStatus::Invalid, &e.to_string()),
        }
    })
}

#[derive(Deserialize)]
struct GarnierDoc {
    config: GarnierConfig,
    phase: PhasePoint,
}

/// Parses `{"config": {"N":..,"theta":[..]}, "phase": {"t":..,"lambda":..,"nu":..}}`.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn isolab_garnier_from_json(json: *const c_char, out: *mut *mut IsolabGarnier) -> IsolabStatus {
    guard(|| {
        if out.is_null() {
            return fail(IsolabStatus::NullArgument, "null output pointer");
        }
        let text = match read_str(json) {
            Ok(t) => t,
            Err(s) => return s,
        };
        let doc: GarnierDoc = match serde_json::from_str(text) {
            Ok(d) => d,
            Err(e) => return fail(IsolabStatus::Invalid, &format!("malformed Garnier data: {e}")),
        };
        if let Err(e) = doc
            .config
            .validate()
            .and_then(|_| doc.phase.validate(&doc.config, &Tolerances::default()))
        {
            return from_error(&e);
        }
        *out = Box::into_raw(Box::new(IsolabGarnier {
            config: doc.config,
            phase: doc.phase,
        }));
        IsolabStatus::Ok
    })
}

/// # Safety
/// `g` must be null or a live handle from [`isolab_garnier_from_json`].
#[no_mangle]
pub unsafe extern "C" fn isolab_garnier_free(g: *mut IsolabGarnier) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// Hamiltonians `H_1, …, H_N` at the handle's phase point, written as
/// interleaved real and imaginary parts into `out` (length `2N`).
///
/// # Safety
/// `g` must be a live handle; `out` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn isolab_garnier_hamiltonians(g: *const IsolabGarnier, out: *mut f64, len: usize) -> IsolabStatus {
    guard(|| {
        let Some(g) = g.as_ref() else {
            return fail(IsolabStatus::NullArgument, "null handle");
        };
        let h = match hamiltonians(&g.config, &g.phase, &Tolerances::default()) {
            Ok(h) => h,
            Err(e) => return from_error(&e),
        };
        if len < 2 * h.len() {
            return fail(
                IsolabStatus::BufferTooSmall,
                &format!("need {} doubles, got {len}", 2 * h.len()),
            );
        }
        if out.is_null() {
            return fail(IsolabStatus::NullArgument, "null output buffer");
        }
        let buf = std::slice::from_raw_parts_mut(out, 2 * h.len());
        for (k, z) in h.iter().enumerate() {
            buf[2 * k] = z.re;
            buf[2 * k + 1] = z.im;
        }
        IsolabStatus::Ok
    })
}

/// Companion-system monodromy at the handle's phase point, as JSON.
///
/// # Safety
/// `g` must be a live handle; `out_json` must be writable.
#[no_mangle]
pub unsafe extern "C" fn isolab_garnier_monodromy(g: *const IsolabGarnier, out_json: *mut *mut c_char) -> IsolabStatus {
    guard(|| {
        let Some(g) = g.as_ref() else {
            return fail(IsolabStatus::NullArgument, "null handle");
        };
        if out_json.is_null() {
            return fail(IsolabStatus::NullArgument, "null output pointer");
        }
        let tol = Tolerances::default();
        let mono = RationalPotential::new(&g.config, &g.phase, &tol).and_then(|p| companion_monodromy(&p, &tol));
        match mono {
            Ok(m) => match serde_json::to_string(&m) {
                Ok(s) => hand_out(s, out_json),
                Err(e) => fail(IsolabStatus::Invalid, &e.to_string()),
            },
            Err(e) => from_error(&e),
        }
    })
}

#[derive(Deserialize, Default)]
#[serde(default)]
struct OptionsDoc {
    tolerances: Option<Tolerances>,
    seed: Option<u64>,
    cap: Option<usize>,
    depth: Option<usize>,
}

/// Runs a command-line subcommand (`"orbit"`, `"mild"`, ...) on a JSON
/// input and returns the same report the `isolab` binary prints.
/// `options_json` may be null or `{"tolerances":{..},"seed":..,"cap":..,"depth":..}`.
///
/// # Safety
/// String arguments must be NUL-terminated (or null where allowed);
/// `out_json` must be writable.
#[no_mangle]
pub unsafe extern "C" fn isolab_run(
    command: *const c_char,
    input_json: *const c_char,
    options_json: *const c_char,
    out_json: *mut *mut c_char,
) -> IsolabStatus {
    guard(|| {
        if out_json.is_null() {
            return fail(IsolabStatus::NullArgument, "null output pointer");
        }
        let name = match read_str(command) {
            Ok(t) => t,
            Err(s) => return s,
        };
        let Some(cmd) = Command::from_name(name) else {
            return fail(IsolabStatus::Invalid, &format!("unknown subcommand {name:?}"));
        };
        let input = match read_str(input_json) {
            Ok(t) => t,
            Err(s) => return s,
        };
        let doc: OptionsDoc = if options_json.is_null() {
            OptionsDoc::default()
        } else {
            let text = match read_str(options_json) {
                Ok(t) => t,
                Err(s) => return s,
            };
            match serde_json::from_str(text) {
                Ok(d) => d,
                Err(e) => return fail(IsolabStatus::Invalid, &format!("malformed options: {e}")),
            }
        };
        let defaults = RunOptions::default();
        let opts = RunOptions {
            tol: doc.tolerances.unwrap_or(defaults.tol),
            seed: doc.seed.unwrap_or(defaults.seed),
            cap: doc.cap,
            depth: doc.depth,
            csv: None,
        };
        match dispatch(cmd, input, &opts) {
            Ok(s) => hand_out(s, out_json),
            Err(e) => from_error(&e),
        }
    })
}
