//! C interface to `arraynmi`.
//!
//! Arrays and angular models are opaque heap handles created by the
//! `*_new`/`model_*` constructors and released by the matching `*_free`.
//! Every fallible function returns an [`ArrayNmiStatus`] and writes its
//! result through an out-pointer; after a failure,
//! [`arraynmi_last_error_message`] describes the error on the calling thread.
//! Complex vectors are passed as interleaved `(re, im)` pairs.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use arraynmi::angular::AngularModel;
use arraynmi::bessel::{bessel_j, BesselOrder};
use arraynmi::channel::{empirical_nmi, mmse_sinr, ChannelError};
use arraynmi::geometry::{spacing_under_constraint, ArrayConfig, GeometryError, TopologyKind};
use arraynmi::nmi::{kappa_closed_form, NmiError, TruncationPolicy};
use nalgebra::DMatrix;
use num_complex::Complex64;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArrayNmiStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Geometry = 3,
    Model = 4,
    NotConverged = 5,
    BufferTooSmall = 6,
    Numerical = 7,
    Panic = 8,
}

/// Array topology.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArrayNmiTopology {
    Ula = 0,
    Hura = 1,
    Vura = 2,
    Ucira = 3,
    Ucyla = 4,
}

impl From<ArrayNmiTopology> for TopologyKind {
    fn from(t: ArrayNmiTopology) -> Self {
        match t {
            ArrayNmiTopology::Ula => TopologyKind::Ula,
            ArrayNmiTopology::Hura => TopologyKind::Hura,
            ArrayNmiTopology::Vura => TopologyKind::Vura,
            ArrayNmiTopology::Ucira => TopologyKind::Ucira,
            ArrayNmiTopology::Ucyla => TopologyKind::Ucyla,
        }
    }
}

/// An antenna array.
pub struct ArrayNmiArray {
    cfg: ArrayConfig,
}

/// An angular model for ray arrival directions.
pub struct ArrayNmiModel {
    model: AngularModel,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

struct Failure(ArrayNmiStatus, String);

impl Failure {
    fn new(status: ArrayNmiStatus, msg: impl Into<String>) -> Self {
        Self(status, msg.into())
    }
}

impl From<GeometryError> for Failure {
    fn from(e: GeometryError) -> Self {
        Self(ArrayNmiStatus::Geometry, e.to_string())
    }
}

impl From<NmiError> for Failure {
    fn from(e: NmiError) -> Self {
        let status = match e {
            NmiError::Geometry(_) => ArrayNmiStatus::Geometry,
            NmiError::Model(_) => ArrayNmiStatus::Model,
            NmiError::NotConverged { .. } => ArrayNmiStatus::NotConverged,
            NmiError::IndexOutOfRange { .. } => ArrayNmiStatus::InvalidArgument,
        };
        Self(status, e.to_string())
    }
}

impl From<ChannelError> for Failure {
    fn from(e: ChannelError) -> Self {
        let status = match e {
            ChannelError::Geometry(_) => ArrayNmiStatus::Geometry,
            ChannelError::Model(_) => ArrayNmiStatus::Model,
            ChannelError::Solver(_) => ArrayNmiStatus::Numerical,
            _ => ArrayNmiStatus::InvalidArgument,
        };
        Self(status, e.to_string())
    }
}

/// Runs `f`, converting errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> ArrayNmiStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => ArrayNmiStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            ArrayNmiStatus::Panic
        }
    }
}

fn out_ptr<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, Failure> {
    // SAFETY: the caller passes either null or a valid, aligned pointer
    unsafe { p.as_mut() }.ok_or_else(|| Failure::new(ArrayNmiStatus::NullPointer, format!("{name} is null")))
}

fn in_ref<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    // SAFETY: the caller passes either null or a live handle
    unsafe { p.as_ref() }.ok_or_else(|| Failure::new(ArrayNmiStatus::NullPointer, format!("{name} is null")))
}

fn store_array(out: *mut *mut ArrayNmiArray, cfg: ArrayConfig) -> Result<(), Failure> {
    *out_ptr(out, "out")? = Box::into_raw(Box::new(ArrayNmiArray { cfg }));
    Ok(())
}

fn store_model(out: *mut *mut ArrayNmiModel, model: AngularModel) -> Result<(), Failure> {
    *out_ptr(out, "out")? = Box::into_raw(Box::new(ArrayNmiModel { model }));
    Ok(())
}

/// Creates an array of `m` antennas with spacing `d` wavelengths on every
/// populated axis (two-axis topologies use a square split).
///
/// # Safety
/// `out` must be null or point to writable storage for a handle.
#[no_mangle]
pub unsafe extern "C" fn arraynmi_array_new(
    topology: ArrayNmiTopology,
    m: usize,
    d: f64,
    out: *mut *mut ArrayNmiArray,
) -> ArrayNmiStatus {
    guard(|| store_array(out, ArrayConfig::uniform(topology.into(), m, d)?))
}

/// Creates an array of `m` antennas with the largest spacing that fits a
/// square aperture of diagonal `diag` wavelengths.
///
/// # Safety
/// `out` must be null or point to writable storage for a handle.
#[no_mangle]
pub unsafe extern "C" fn arraynmi_array_new_constrained(
    topology: ArrayNmiTopology,
    m: usize,
    diag: f64,
    out: *mut *mut ArrayNmiArray,
) -> ArrayNmiStatus {
    guard(|| store_array(out, ArrayConfig::constrained(topology.into(), m, diag)?))
}

/// Releases an array; null is ignored.
///
/// # Safety
/// `array` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn arraynmi_array_free(array: *mut ArrayNmiArray) {
    if !array.is_null() {
        drop(Box::from_raw(array));
    }
}

/// Number of antennas.
///
/// # Safety
/// `array` must be null or a live handle; `out` null or writable.
#[no_mangle]
pub unsafe extern "C" fn arraynmi_array_num_antennas(array: *const ArrayNmiArray, out: *mut usize) -> ArrayNmiStatus {
    guard(|| {
        *out_ptr(out, "out")? = in_ref(array, "array")?.cfg.num_antennas();
        Ok(())
    })
}

/// Element spacing of the array, wavelengths.
///
/// # Safety
/// `array` must be null or a live handle; `out` null or writable.
#[no_mangle]
pub unsafe extern "C" fn arraynmi_array_spacing(array: *const ArrayNmiArray, out: *mut f64) -> ArrayNmiStatus {
    guard(|| {
        *out_ptr(out, "out")? = in_ref(array, "array")?.cfg.spacing();
        Ok(())
    })
}

/// Writes the steering vector at azimuth `phi` and elevation `theta`
/// (radians) as `len` interleaved complex values into `out` (`2·len`
/// doubles). `len` must be at least the antenna count.
///
/// # Safety
/// `array` must be null or a live handle; `out` null or valid for `2·len`
/// doubles.
#[no_mangle]
pub unsafe extern "C" fn arraynmi_steering_vector(
    array: *const ArrayNmiArray,
    phi: f64,
    theta: f64,
    out: *mut f64,
    len: usize,
) -> ArrayNmiStatus {
    guard(|| {
        let cfg = &in_ref(array, "array")?.cfg;
        if out.is_null() {
            return Err(Failure::new(ArrayNmiStatus::NullPointer, "out is null"));
        }
        let m = cfg.num_antennas();
        if len < m {
            return Err(Failure::new(
                ArrayNmiStatus::BufferTooSmall,
                format!("buffer holds {len} values, {m} needed"),
            ));
        }
        let a = cfg.steering_vector(phi, theta)?;
        // SAFETY: out is valid for 2·len ≥ 2·m doubles
        let buf = std::slice::from_raw_parts_mut(out, 2 * m);
        for (i, v) in a.iter().enumerate() {
            buf[2 * i] = v.re;
            buf[2 * i + 1] = v.im;
        }
        Ok(())
    })
}

/// `|a(φ1,θ1)ᴴ a(φ2,θ2)|²` and that value divided by `M²`.
///
/// # Safety
/// `array` must be null or a live handle; out-pointers null or writable.
#[no_mangle]
pub unsafe extern "C" fn arraynmi_two_ray_interference(
    array: *const ArrayNmiArray,
    phi1: f64,
    theta1: f64,
    phi2: f64,
    theta2: f64,
    out_raw: *mut f64,
    out_normalized: *mut f64,
) -> ArrayNmiStatus {
    guard(|| {
        let r = in_ref(array, "array")?
            .cfg
            .two_ray_interference(phi1, theta1, phi2, theta2)?;
        *out_ptr(out_raw, "out_raw")? = r.raw;
        *out_ptr(out_normalized, "out_normalized")? = r.normalized;
        Ok(())
    })
}

/// The measured indoor-to-outdoor angular model.
///
/// # Safety
/// `out` must be null or point to writable storage for a handle.
#[no_mangle]
pub unsafe extern "C" fn arraynmi_model_measured(out: *mut *mut ArrayNmiModel) -> ArrayNmiStatus {
    guard(|| store_model(out, AngularModel::measured()))
}

/// Uniform azimuth and elevation without subray spread.
///
/// # Safety
/// `out` must be null or point to writable storage for a handle.
#[no_mangle]
pub unsafe extern "C" fn arraynmi_model_uniform(out: *mut *mut ArrayNmiModel) -> ArrayNmiStatus {
    guard(|| store_model(out, AngularModel::uniform()))
}

/// Every ray arrives from `(azimuth, elevation)`, radians.
///
/// # Safety
/// `out` must be null or point to writable storage for a handle.
#[no_mangle]
pub unsafe extern "C" fn arraynmi_model_fixed(
    azimuth: f64,
    elevation: f64,
    out: *mut *mut ArrayNmiModel,
) -> ArrayNmiStatus {
    guard(|| {
        let model = AngularModel::fixed(azimuth, elevation);
        model
            .validate()
            .map_err(|e| Failure::new(ArrayNmiStatus::Model, e.to_string()))?;
        store_model(out, model)
    })
}

/// Releases a model; null is ignored.
///
/// # Safety
/// `model` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn arraynmi_model_free(model: *mut ArrayNmiModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Closed-form normalized mean interference with the default truncation.
///
/// # Safety
/// Handles must be null or live; `out` null or writable.
#[no_mangle]
pub unsafe extern "C" fn arraynmi_kappa_closed_form(
    array: *const ArrayNmiArray,
    model: *const ArrayNmiModel,
    out: *mut f64,
) -> ArrayNmiStatus {
    guard(|| {
        let cfg = &in_ref(array, "array")?.cfg;
        let model = &in_ref(model, "model")?.model;
        let out = out_ptr(out, "out")?;
        *out = kappa_closed_form(cfg, model, &TruncationPolicy::default())?.kappa;
        Ok(())
    })
}

/// Monte Carlo normalized mean interference over `samples` ray pairs.
///
/// # Safety
/// Handles must be null or live; out-pointers null or writable.
#[no_mangle]
pub unsafe extern "C" fn arraynmi_empirical_nmi(
    array: *const ArrayNmiArray,
    model: *const ArrayNmiModel,
    samples: usize,
    seed: u64,
    out_mean: *mut f64,
    out_stderr: *mut f64,
) -> ArrayNmiStatus {
    guard(|| {
        let cfg = &in_ref(array, "array")?.cfg;
        let model = &in_ref(model, "model")?.model;
        let e = empirical_nmi(cfg, model, samples, seed)?;
        *out_ptr(out_mean, "out_mean")? = e.mean;
        *out_ptr(out_stderr, "out_stderr")? = e.stderr;
        Ok(())
    })
}

/// Largest spacing for `m` antennas within an aperture of diagonal `diag`.
///
/// # Safety
/// `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn arraynmi_spacing_under_constraint(
    topology: ArrayNmiTopology,
    m: usize,
    diag: f64,
    out: *mut f64,
) -> ArrayNmiStatus {
    guard(|| {
        *out_ptr(out, "out")? = spacing_under_constraint(topology.into(), m, diag)?;
        Ok(())
    })
}

/// `J_ν(x)` for integer or half-integer `ν` and `x ≥ 0`.
///
/// # Safety
/// `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn arraynmi_bessel_j(order: f64, x: f64, out: *mut f64) -> ArrayNmiStatus {
    guard(|| {
        let invalid = |e: arraynmi::bessel::BesselError| Failure::new(ArrayNmiStatus::InvalidArgument, e.to_string());
        let order = BesselOrder::new(order).map_err(invalid)?;
        *out_ptr(out, "out")? = bessel_j(order, x).map_err(invalid)?;
        Ok(())
    })
}

/// MMSE SINR of user `user` for `users` channels of `m` antennas given
/// column-major as interleaved complex values (`2·m·users` doubles).
/// With `include_own` nonzero the user's own channel enters the covariance.
///
/// # Safety
/// `channels` must be null or valid for `2·m·users` doubles; `out` null or
/// writable.
#[no_mangle]
pub unsafe extern "C" fn arraynmi_mmse_sinr(
    channels: *const f64,
    m: usize,
    users: usize,
    user: usize,
    rho: f64,
    include_own: i32,
    out: *mut f64,
) -> ArrayNmiStatus {
    guard(|| {
        if channels.is_null() {
            return Err(Failure::new(ArrayNmiStatus::NullPointer, "channels is null"));
        }
        if m == 0 || users == 0 {
            return Err(Failure::new(ArrayNmiStatus::InvalidArgument, "empty channel matrix"));
        }
        // SAFETY: channels is valid for 2·m·users doubles
        let raw = std::slice::from_raw_parts(channels, 2 * m * users);
        let values: Vec<Complex64> = raw.chunks_exact(2).map(|p| Complex64::new(p[0], p[1])).collect();
        let h = DMatrix::from_column_slice(m, users, &values);
        *out_ptr(out, "out")? = mmse_sinr(&h, user, rho, include_own != 0)?;
        Ok(())
    })
}

/// Message of the last failed call on this thread, or an empty string.
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn arraynmi_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn arraynmi_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

