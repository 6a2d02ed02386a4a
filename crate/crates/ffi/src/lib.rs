//! C ABI over `fqs-core`.
//!
//! Every function returns an [`FqsStatus`]. On failure a description is kept
//! per thread and can be read with [`fqs_last_error_message`]. Objects are
//! opaque handles created by `*_new`-style functions and released with the
//! matching `*_free`. Panics never cross the boundary; they are reported as
//! `FQS_STATUS_PANIC`.

use fqs_core::circuits::{build_template, energy, CircuitTemplate, EvalCounter, Family, ParameterSet};
use fqs_core::gatealg::Quaternion;
use fqs_core::models::{exact_ground_energy, mixed_field_ising, Cost};
use fqs_core::optimizers::{run_sequential, seeded_start, update_slot, Method, MethodConfig};
use fqs_core::randhaar::seeded;
use fqs_core::simcore::Observable;
use fqs_core::smatrix::build_fqs_matrix;
use fqs_core::Error;
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FqsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    QubitOutOfRange = 3,
    DuplicateTarget = 4,
    NonUnitary = 5,
    SizeMismatch = 6,
    NotSymmetric = 7,
    Unsupported = 8,
    Io = 9,
    Panic = 10,
}

/// Values accepted by the `family` argument of [`fqs_template_new`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FqsFamily {
    Alternating = 0,
    Cyclic = 1,
    Ladder = 2,
}

/// Values accepted by the `method` arguments.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FqsMethod {
    Fqs = 0,
    Fraxis = 1,
    Rotosolve = 2,
    Rotoselect = 3,
}

/// Real-weighted sum of Pauli words.
pub struct FqsObservable(Observable);

/// Circuit skeleton: ordered gate slots and fixed entanglers.
pub struct FqsTemplate(CircuitTemplate);

/// One unit quaternion per gate slot.
pub struct FqsParams(ParameterSet);

struct Failure {
    status: FqsStatus,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::QubitOutOfRange { .. } => FqsStatus::QubitOutOfRange,
            Error::DuplicateTarget(_) => FqsStatus::DuplicateTarget,
            Error::NonUnitary { .. } => FqsStatus::NonUnitary,
            Error::SizeMismatch { .. } => FqsStatus::SizeMismatch,
            Error::NotSymmetric { .. } => FqsStatus::NotSymmetric,
            Error::InvalidArgument(_) => FqsStatus::InvalidArgument,
            Error::Unsupported(_) => FqsStatus::Unsupported,
            Error::Io(_) => FqsStatus::Io,
        };
        Failure {
            status,
            message: e.to_string(),
        }
    }
}

fn fail(status: FqsStatus, message: impl Into<String>) -> Failure {
    Failure {
        status,
        message: message.into(),
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: Option<String>) {
    let c = message.map(|m| CString::new(m.replace('\0', " ")).expect("nul bytes removed"));
    LAST_ERROR.with(|slot| *slot.borrow_mut() = c);
}

fn guard<F: FnOnce() -> Result<(), Failure>>(f: F) -> FqsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error(None);
            FqsStatus::Ok
        }
        Ok(Err(failure)) => {
            set_last_error(Some(failure.message));
            failure.status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(Some(format!("panic: {msg}")));
            FqsStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| fail(FqsStatus::NullPointer, format!("{name} is null")))
}

unsafe fn deref_mut<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| fail(FqsStatus::NullPointer, format!("{name} is null")))
}

unsafe fn write<T>(out: *mut T, value: T, name: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(fail(FqsStatus::NullPointer, format!("{name} is null")));
    }
    out.write(value);
    Ok(())
}

fn family_from(code: u32) -> Result<Family, Failure> {
    match code {
        0 => Ok(Family::Alternating),
        1 => Ok(Family::Cyclic),
        2 => Ok(Family::Ladder),
        other => Err(fail(FqsStatus::InvalidArgument, format!("unknown family code {other}"))),
    }
}

fn method_from(code: u32) -> Result<Method, Failure> {
    match code {
        0 => Ok(Method::Fqs),
        1 => Ok(Method::Fraxis),
        2 => Ok(Method::Rotosolve),
        3 => Ok(Method::Rotoselect),
        other => Err(fail(FqsStatus::InvalidArgument, format!("unknown method code {other}"))),
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn fqs_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the most recent failed call on this thread, or NULL if the
/// last call succeeded. The pointer stays valid until the next call.
#[no_mangle]
pub extern "C" fn fqs_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Creates an empty observable on `num_qubits` qubits.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for a handle.
#[no_mangle]
pub unsafe extern "C" fn fqs_observable_new(num_qubits: usize, out: *mut *mut FqsObservable) -> FqsStatus {
    guard(|| {
        if num_qubits == 0 {
            return Err(fail(FqsStatus::InvalidArgument, "num_qubits must be positive"));
        }
        let h = Box::into_raw(Box::new(FqsObservable(Observable::new(num_qubits))));
        write(out, h, "out").inspect_err(|_| drop(Box::from_raw(h)))
    })
}

/// Mixed-field Ising chain with coupling `j` and transverse/longitudinal field `h`.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for a handle.
#[no_mangle]
pub unsafe extern "C" fn fqs_observable_ising(
    num_qubits: usize,
    j: f64,
    h: f64,
    periodic: bool,
    out: *mut *mut FqsObservable,
) -> FqsStatus {
    guard(|| {
        let obs = mixed_field_ising(num_qubits, j, h, periodic)?;
        let handle = Box::into_raw(Box::new(FqsObservable(obs)));
        write(out, handle, "out").inspect_err(|_| drop(Box::from_raw(handle)))
    })
}

/// Adds `coef` times the Pauli word `word` (e.g. "XZI", qubit 0 first).
///
/// # Safety
/// `obs` must be a live handle and `word` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn fqs_observable_add_term(obs: *mut FqsObservable, coef: f64, word: *const c_char) -> FqsStatus {
    guard(|| {
        let obs = deref_mut(obs, "obs")?;
        let word = CStr::from_ptr(deref(word, "word")?)
            .to_str()
            .map_err(|_| fail(FqsStatus::InvalidArgument, "word is not UTF-8"))?;
        obs.0.add_str(coef, word)?;
        Ok(())
    })
}

/// Exact ground energy by dense diagonalization.
///
/// # Safety
/// `obs` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fqs_observable_ground_energy(obs: *const FqsObservable, out: *mut f64) -> FqsStatus {
    guard(|| {
        let e = exact_ground_energy(&deref(obs, "obs")?.0)?;
        write(out, e, "out")
    })
}

/// # Safety
/// `obs` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fqs_observable_free(obs: *mut FqsObservable) {
    if !obs.is_null() {
        drop(Box::from_raw(obs));
    }
}

/// Builds a circuit template; `family` takes an [`FqsFamily`] value.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for a handle.
#[no_mangle]
pub unsafe extern "C" fn fqs_template_new(
    family: u32,
    num_qubits: usize,
    layers: usize,
    out: *mut *mut FqsTemplate,
) -> FqsStatus {
    guard(|| {
        let t = build_template(family_from(family)?, num_qubits, layers)?;
        let handle = Box::into_raw(Box::new(FqsTemplate(t)));
        write(out, handle, "out").inspect_err(|_| drop(Box::from_raw(handle)))
    })
}

/// # Safety
/// `template` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fqs_template_num_slots(template: *const FqsTemplate, out: *mut usize) -> FqsStatus {
    guard(|| write(out, deref(template, "template")?.0.num_slots(), "out"))
}

/// # Safety
/// `template` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fqs_template_free(template: *mut FqsTemplate) {
    if !template.is_null() {
        drop(Box::from_raw(template));
    }
}

/// Haar-random gates for `num_slots` slots from `seed`.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for a handle.
#[no_mangle]
pub unsafe extern "C" fn fqs_params_random(num_slots: usize, seed: u64, out: *mut *mut FqsParams) -> FqsStatus {
    guard(|| {
        let p = ParameterSet::random(num_slots, &mut seeded(seed));
        let handle = Box::into_raw(Box::new(FqsParams(p)));
        write(out, handle, "out").inspect_err(|_| drop(Box::from_raw(handle)))
    })
}

/// # Safety
/// `params` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fqs_params_len(params: *const FqsParams, out: *mut usize) -> FqsStatus {
    guard(|| write(out, deref(params, "params")?.0.len(), "out"))
}

/// Copies the quaternion of `slot` into `out[0..4]`.
///
/// # Safety
/// `params` must be a live handle and `out` must point to four doubles.
#[no_mangle]
pub unsafe extern "C" fn fqs_params_get(params: *const FqsParams, slot: usize, out: *mut f64) -> FqsStatus {
    guard(|| {
        let q = deref(params, "params")?
            .0
            .get(slot)
            .ok_or_else(|| fail(FqsStatus::InvalidArgument, format!("slot {slot} out of range")))?;
        write(out.cast::<[f64; 4]>(), q.components(), "out")
    })
}

/// Replaces the gate of `slot` with the unit quaternion `q[0..4]`.
///
/// # Safety
/// `params` must be a live handle and `q` must point to four doubles.
#[no_mangle]
pub unsafe extern "C" fn fqs_params_set(params: *mut FqsParams, slot: usize, q: *const f64) -> FqsStatus {
    guard(|| {
        let params = deref_mut(params, "params")?;
        let q = Quaternion::new(*deref(q.cast::<[f64; 4]>(), "q")?)?;
        params.0.set(slot, q)?;
        Ok(())
    })
}

/// # Safety
/// `params` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fqs_params_free(params: *mut FqsParams) {
    if !params.is_null() {
        drop(Box::from_raw(params));
    }
}

/// Expectation value of `obs` on the circuit state.
///
/// # Safety
/// All handles must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fqs_energy(
    template: *const FqsTemplate,
    params: *const FqsParams,
    obs: *const FqsObservable,
    out: *mut f64,
) -> FqsStatus {
    guard(|| {
        let cost = Cost::Observable(deref(obs, "obs")?.0.clone());
        let e = energy(&deref(template, "template")?.0, &deref(params, "params")?.0, &cost, &mut EvalCounter::new())?;
        write(out, e, "out")
    })
}

/// Row-major 4×4 matrix whose quadratic form in the quaternion of `slot`
/// gives the energy; written to `out[0..16]`.
///
/// # Safety
/// All handles must be live and `out` must point to sixteen doubles.
#[no_mangle]
pub unsafe extern "C" fn fqs_slot_matrix(
    template: *const FqsTemplate,
    params: *const FqsParams,
    obs: *const FqsObservable,
    slot: usize,
    out: *mut f64,
) -> FqsStatus {
    guard(|| {
        let cost = Cost::Observable(deref(obs, "obs")?.0.clone());
        let s = build_fqs_matrix(
            &deref(template, "template")?.0,
            &deref(params, "params")?.0,
            slot,
            &cost,
            &mut EvalCounter::new(),
        )?;
        let mut flat = [0.0; 16];
        for i in 0..4 {
            for j in 0..4 {
                flat[4 * i + j] = s.get(i, j);
            }
        }
        write(out.cast::<[f64; 16]>(), flat, "out")
    })
}

/// Optimally replaces the gate of `slot` with `method` and writes the new
/// energy. Rotosolve rotates about `axis[0..3]`, which is ignored (and may be
/// NULL) for the other methods.
///
/// # Safety
/// All handles must be live, `axis` must point to three doubles when
/// `method` is Rotosolve, and `out_energy` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fqs_update_slot(
    template: *const FqsTemplate,
    params: *mut FqsParams,
    obs: *const FqsObservable,
    method: u32,
    slot: usize,
    axis: *const f64,
    out_energy: *mut f64,
) -> FqsStatus {
    guard(|| {
        let template = &deref(template, "template")?.0;
        let params = &mut deref_mut(params, "params")?.0;
        let cost = Cost::Observable(deref(obs, "obs")?.0.clone());
        let method = method_from(method)?;
        let mut config = MethodConfig::new(method);
        if method == Method::Rotosolve {
            let a = *deref(axis.cast::<[f64; 3]>(), "axis")?;
            config = config.with_axes(vec![a; template.num_slots()]);
        }
        let outcome = update_slot(template, params, slot, &cost, &config, &mut EvalCounter::new())?;
        write(out_energy, outcome.energy, "out_energy")
    })
}

/// Seeded start followed by `sweeps` ascending sweeps of `method`. Returns a
/// new parameter handle, the final energy and the evaluations spent.
///
/// # Safety
/// Handles must be live; every `out_*` pointer must be writable.
#[no_mangle]
pub unsafe extern "C" fn fqs_optimize(
    template: *const FqsTemplate,
    obs: *const FqsObservable,
    method: u32,
    sweeps: u64,
    seed: u64,
    out_params: *mut *mut FqsParams,
    out_energy: *mut f64,
    out_evals: *mut u64,
) -> FqsStatus {
    guard(|| {
        let template = &deref(template, "template")?.0;
        let cost = Cost::Observable(deref(obs, "obs")?.0.clone());
        if out_params.is_null() || out_energy.is_null() || out_evals.is_null() {
            return Err(fail(FqsStatus::NullPointer, "output pointer is null"));
        }
        let (mut params, config) = seeded_start(method_from(method)?, template.num_slots(), seed);
        let traj = run_sequential(template, &mut params, &cost, &config, sweeps)?;
        let last = traj.records.last().expect("initial record is always present");
        out_energy.write(last.energy);
        out_evals.write(last.evals);
        out_params.write(Box::into_raw(Box::new(FqsParams(params))));
        Ok(())
    })
}
