//! C ABI for the atomlaser toolkit.
//!
//! Every fallible function returns an [`AtomlaserStatus`]; on failure the
//! message is kept per thread and read back with
//! [`atomlaser_last_error_message`]. Results that own memory are returned as
//! opaque handles and released with the matching `_free` function.

use std::cell::RefCell;
use std::ffi::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use atomlaser::analytic::{
    boundary_p0, first_order_closed_form, ode_coeffs, quad_coeffs, second_order_closed_form,
};
use atomlaser::liouvillian::{steady_state_with, SteadyStateOptions};
use atomlaser::observables::{mandel_q, moments, photon_distribution};
use atomlaser::strong_coupling::{exact_distribution, exact_q, p_function, ExactDistribution};
use atomlaser::{Error, ModelParams, MomentSet, SpaceConfig};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AtomlaserStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Degenerate = 3,
    Truncation = 4,
    Residual = 5,
    NotPositive = 6,
    Domain = 7,
    Singular = 8,
    BufferTooSmall = 9,
    Internal = 10,
}

impl From<&Error> for AtomlaserStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::InvalidParameter { .. }
            | Error::DimensionMismatch { .. }
            | Error::StepSize(_) => Self::InvalidArgument,
            Error::Degenerate(_) => Self::Degenerate,
            Error::Truncation { .. } => Self::Truncation,
            Error::Residual { .. } => Self::Residual,
            Error::NotPositive(_) | Error::InvalidState(_) => Self::NotPositive,
            Error::Domain { .. } => Self::Domain,
            Error::Singular(_) => Self::Singular,
        }
    }
}

/// Photon moments, inversion and Mandel Q. `q` is NaN and `q_defined` is 0
/// when the mean photon number vanishes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AtomlaserMoments {
    pub n1: f64,
    pub n2: f64,
    pub n3: f64,
    pub n4: f64,
    pub d: f64,
    pub q: f64,
    pub q_defined: i32,
}

impl From<MomentSet> for AtomlaserMoments {
    fn from(m: MomentSet) -> Self {
        Self {
            n1: m.n1,
            n2: m.n2,
            n3: m.n3,
            n4: m.n4,
            d: m.d,
            q: m.q.unwrap_or(f64::NAN),
            q_defined: i32::from(m.q.is_some()),
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AtomlaserOdeCoeffs {
    pub a02: f64,
    pub a03: f64,
    pub a10: f64,
    pub a11: f64,
    pub a12: f64,
    pub a20: f64,
    pub a21: f64,
    pub a22: f64,
}

/// Opaque steady-state result.
pub struct AtomlaserSteadyState {
    moments: MomentSet,
    distribution: Vec<f64>,
    n_max: usize,
    residual_norm: f64,
    tail_mass: f64,
}

/// Opaque exact strong-coupling distribution.
pub struct AtomlaserExactDistribution {
    inner: ExactDistribution,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

/// Runs `f`, recording failures and converting panics to `Internal`.
fn guard(f: impl FnOnce() -> Result<(), (AtomlaserStatus, String)>) -> AtomlaserStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            AtomlaserStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            AtomlaserStatus::Internal
        }
    }
}

fn lib_err(e: Error) -> (AtomlaserStatus, String) {
    (AtomlaserStatus::from(&e), e.to_string())
}

fn null(name: &str) -> (AtomlaserStatus, String) {
    (AtomlaserStatus::NullPointer, format!("`{name}` is null"))
}

/// Writes `value` through `out`, failing on a null pointer.
///
/// # Safety
/// `out` must be null or valid for a write of `T`.
unsafe fn write_out<T>(out: *mut T, name: &str, value: T) -> Result<(), (AtomlaserStatus, String)> {
    if out.is_null() {
        return Err(null(name));
    }
    out.write(value);
    Ok(())
}

/// Copies `src` into `buf`. With a null `buf` only the required length is
/// reported through `len_out`.
///
/// # Safety
/// `buf` must be null or valid for `cap` writes; `len_out` null or writable.
unsafe fn copy_slice(
    src: &[f64],
    buf: *mut f64,
    cap: usize,
    len_out: *mut usize,
) -> Result<(), (AtomlaserStatus, String)> {
    if !len_out.is_null() {
        len_out.write(src.len());
    }
    if buf.is_null() {
        return if len_out.is_null() {
            Err(null("buf"))
        } else {
            Ok(())
        };
    }
    if cap < src.len() {
        return Err((
            AtomlaserStatus::BufferTooSmall,
            format!("buffer holds {cap} values, {} needed", src.len()),
        ));
    }
    ptr::copy_nonoverlapping(src.as_ptr(), buf, src.len());
    Ok(())
}

/// Copies the calling thread's last error message into `buf` (NUL-terminated,
/// truncated to `cap - 1` bytes) and returns the full message length in bytes.
///
/// # Safety
/// `buf` must be null or valid for `cap` writes.
#[no_mangle]
pub unsafe extern "C" fn atomlaser_last_error_message(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && cap > 0 {
            let n = msg.len().min(cap - 1);
            ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, n);
            buf.add(n).write(0);
        }
        msg.len()
    })
}

/// Solves the steady state at rates `(omega, eta, tau)` starting from a Fock
/// cutoff `n_max` (grown automatically while the tail is heavy).
///
/// # Safety
/// `out` must be valid for a write of one pointer.
#[no_mangle]
pub unsafe extern "C" fn atomlaser_steady_state(
    omega: f64,
    eta: f64,
    tau: f64,
    n_max: usize,
    tol: f64,
    out: *mut *mut AtomlaserSteadyState,
) -> AtomlaserStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        out.write(ptr::null_mut());
        let p = ModelParams::new(omega, eta, tau).map_err(lib_err)?;
        let space = SpaceConfig::new(n_max).map_err(lib_err)?;
        let opts = SteadyStateOptions {
            tol,
            ..Default::default()
        };
        let res = steady_state_with(p, space, &opts).map_err(lib_err)?;
        let handle = AtomlaserSteadyState {
            moments: moments(&res.rho),
            distribution: photon_distribution(&res.rho).into_vec(),
            n_max: res.rho.space().n_max(),
            residual_norm: res.residual_norm,
            tail_mass: res.tail_mass,
        };
        out.write(Box::into_raw(Box::new(handle)));
        Ok(())
    })
}

/// # Safety
/// `handle` must be null or a pointer from [`atomlaser_steady_state`] not yet
/// freed.
#[no_mangle]
pub unsafe extern "C" fn atomlaser_steady_state_free(handle: *mut AtomlaserSteadyState) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// # Safety
/// `handle` must be null or live; `out` null or writable.
#[no_mangle]
pub unsafe extern "C" fn atomlaser_steady_state_moments(
    handle: *const AtomlaserSteadyState,
    out: *mut AtomlaserMoments,
) -> AtomlaserStatus {
    guard(|| {
        let h = handle.as_ref().ok_or_else(|| null("handle"))?;
        write_out(out, "out", h.moments.into())
    })
}

/// Fock cutoff actually used, residual `max |L(ρ)|` and tail probability.
///
/// # Safety
/// `handle` must be null or live; each output pointer null or writable.
#[no_mangle]
pub unsafe extern "C" fn atomlaser_steady_state_info(
    handle: *const AtomlaserSteadyState,
    n_max: *mut usize,
    residual_norm: *mut f64,
    tail_mass: *mut f64,
) -> AtomlaserStatus {
    guard(|| {
        let h = handle.as_ref().ok_or_else(|| null("handle"))?;
        if !n_max.is_null() {
            n_max.write(h.n_max);
        }
        if !residual_norm.is_null() {
            residual_norm.write(h.residual_norm);
        }
        if !tail_mass.is_null() {
            tail_mass.write(h.tail_mass);
        }
        Ok(())
    })
}

/// Copies `ρ(0..=n_max)` into `buf`. Pass a null `buf` to query the length.
///
/// # Safety
/// `handle` must be null or live; `buf` null or valid for `cap` writes;
/// `len_out` null or writable.
#[no_mangle]
pub unsafe extern "C" fn atomlaser_steady_state_distribution(
    handle: *const AtomlaserSteadyState,
    buf: *mut f64,
    cap: usize,
    len_out: *mut usize,
) -> AtomlaserStatus {
    guard(|| {
        let h = handle.as_ref().ok_or_else(|| null("handle"))?;
        copy_slice(&h.distribution, buf, cap, len_out)
    })
}

/// Exact strong-coupling distribution, cut at the first term below `tol`.
///
/// # Safety
/// `out` must be valid for a write of one pointer.
#[no_mangle]
pub unsafe extern "C" fn atomlaser_exact_distribution(
    tol: f64,
    out: *mut *mut AtomlaserExactDistribution,
) -> AtomlaserStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        out.write(ptr::null_mut());
        let inner = exact_distribution(tol).map_err(lib_err)?;
        out.write(Box::into_raw(Box::new(AtomlaserExactDistribution {
            inner,
        })));
        Ok(())
    })
}

/// # Safety
/// `handle` must be null or a pointer from [`atomlaser_exact_distribution`]
/// not yet freed.
#[no_mangle]
pub unsafe extern "C" fn atomlaser_exact_distribution_free(
    handle: *mut AtomlaserExactDistribution,
) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// Copies the probabilities into `buf`. Pass a null `buf` to query the length.
///
/// # Safety
/// `handle` must be null or live; `buf` null or valid for `cap` writes;
/// `len_out` null or writable.
#[no_mangle]
pub unsafe extern "C" fn atomlaser_exact_distribution_probs(
    handle: *const AtomlaserExactDistribution,
    buf: *mut f64,
    cap: usize,
    len_out: *mut usize,
) -> AtomlaserStatus {
    guard(|| {
        let h = handle.as_ref().ok_or_else(|| null("handle"))?;
        copy_slice(h.inner.probs(), buf, cap, len_out)
    })
}

/// Moments of the exact distribution; `d` is NaN.
///
/// # Safety
/// `handle` must be null or live; `out` null or writable.
#[no_mangle]
pub unsafe extern "C" fn atomlaser_exact_distribution_moments(
    handle: *const AtomlaserExactDistribution,
    out: *mut AtomlaserMoments,
) -> AtomlaserStatus {
    guard(|| {
        let h = handle.as_ref().ok_or_else(|| null("handle"))?;
        write_out(out, "out", h.inner.moments().into())
    })
}

/// Mandel Q of the exact strong-coupling distribution.
///
/// # Safety
/// `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn atomlaser_exact_q(out: *mut f64) -> AtomlaserStatus {
    guard(|| write_out(out, "out", exact_q()))
}

/// Phase-averaged P function on `0 <= intensity < 1/2`.
///
/// # Safety
/// `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn atomlaser_p_function(intensity: f64, out: *mut f64) -> AtomlaserStatus {
    guard(|| write_out(out, "out", p_function(intensity).map_err(lib_err)?))
}

fn check_tau(tau: f64) -> Result<(), (AtomlaserStatus, String)> {
    if tau.is_finite() && tau >= 0.0 {
        Ok(())
    } else {
        Err((
            AtomlaserStatus::InvalidArgument,
            format!("invalid parameter `tau`: must be finite and >= 0, got {tau}"),
        ))
    }
}

/// Second-order closed form `(<n>, <n^2>)` at `omega = tau`, `eta = 0`.
///
/// # Safety
/// `n1` and `n2` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn atomlaser_second_order(
    tau: f64,
    n1: *mut f64,
    n2: *mut f64,
) -> AtomlaserStatus {
    guard(|| {
        check_tau(tau)?;
        let (a, b) = second_order_closed_form(tau);
        write_out(n1, "n1", a)?;
        write_out(n2, "n2", b)
    })
}

/// First-order closed form `(<n>, <n^2>)` at `omega = tau`, `eta = 0`.
///
/// # Safety
/// `n1` and `n2` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn atomlaser_first_order(
    tau: f64,
    n1: *mut f64,
    n2: *mut f64,
) -> AtomlaserStatus {
    guard(|| {
        check_tau(tau)?;
        let (a, b) = first_order_closed_form(tau);
        write_out(n1, "n1", a)?;
        write_out(n2, "n2", b)
    })
}

/// Mandel Q from the first two raw moments.
///
/// # Safety
/// `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn atomlaser_mandel_q(n1: f64, n2: f64, out: *mut f64) -> AtomlaserStatus {
    guard(|| match mandel_q(n1, n2) {
        Some(q) => write_out(out, "out", q),
        None => Err((
            AtomlaserStatus::Domain,
            format!("Mandel Q undefined at <n> = {n1}"),
        )),
    })
}

/// Coefficients of `<n^2> + A <n> - B = 0`.
///
/// # Safety
/// `a` and `b` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn atomlaser_quad_coeffs(
    omega: f64,
    eta: f64,
    tau: f64,
    a: *mut f64,
    b: *mut f64,
) -> AtomlaserStatus {
    guard(|| {
        let p = ModelParams::new(omega, eta, tau).map_err(lib_err)?;
        let q = quad_coeffs(p).map_err(lib_err)?;
        write_out(a, "a", q.a)?;
        write_out(b, "b", q.b)
    })
}

/// Coefficients of the second-order equation for the P function.
///
/// # Safety
/// `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn atomlaser_ode_coeffs(
    omega: f64,
    eta: f64,
    tau: f64,
    out: *mut AtomlaserOdeCoeffs,
) -> AtomlaserStatus {
    guard(|| {
        let c = ode_coeffs(ModelParams::new(omega, eta, tau).map_err(lib_err)?);
        write_out(
            out,
            "out",
            AtomlaserOdeCoeffs {
                a02: c.a02,
                a03: c.a03,
                a10: c.a10,
                a11: c.a11,
                a12: c.a12,
                a20: c.a20,
                a21: c.a21,
                a22: c.a22,
            },
        )
    })
}

/// `P(0)` implied by the mean photon number `n1`.
///
/// # Safety
/// `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn atomlaser_boundary_p0(
    omega: f64,
    eta: f64,
    tau: f64,
    n1: f64,
    out: *mut f64,
) -> AtomlaserStatus {
    guard(|| {
        let p = ModelParams::new(omega, eta, tau).map_err(lib_err)?;
        write_out(out, "out", boundary_p0(p, n1).map_err(lib_err)?)
    })
}
