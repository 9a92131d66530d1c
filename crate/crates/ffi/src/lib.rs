//! C ABI over `inertial-core`.
//!
//! Objects cross the boundary as opaque handles created by `*_new`-style
//! constructors and released by the matching `*_free`. Every fallible call
//! returns an [`InertialStatus`]; on failure the message is available from
//! [`inertial_last_error`] on the same thread. Output pointers are written
//! only on success.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use inertial::config::{RawConfig, RunConfig};
use inertial::manifold::{construct_point, PerronConfig};
use inertial::nonlin::{NonlinearityModel, ScalarFunction};
use inertial::spectrum::{characteristic_roots, gap_report, EigenvalueSequence};
use inertial::wave1d::run_pipeline;
use inertial::Error;

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InertialStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    /// Gap or eps condition violated.
    Condition = 3,
    /// `eps = 0` where a relaxation time is required.
    ParabolicLimit = 4,
    Unsupported = 5,
    NonConvergence = 6,
    NonFinite = 7,
    Config = 8,
    Io = 9,
    /// Output buffer shorter than required.
    BufferTooSmall = 10,
    InvalidUtf8 = 11,
    /// A Rust panic was caught at the boundary.
    Panic = 12,
}

/// Eigenvalue sequence `lambda_1 <= lambda_2 <= ...`.
pub struct InertialSequence(EigenvalueSequence);

/// Nonlinearity `F` acting on modal coefficients.
pub struct InertialNonlinearity(NonlinearityModel);

/// Perron configuration bound to its sequence.
pub struct InertialPerron {
    cfg: PerronConfig,
    seq: EigenvalueSequence,
}

/// Roots of `eps mu^2 + mu + lambda = 0`.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct InertialRoots {
    pub mu_plus_re: f64,
    pub mu_plus_im: f64,
    pub mu_minus_re: f64,
    pub mu_minus_im: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct InertialGapReport {
    pub lambda_n: f64,
    pub lambda_n1: f64,
    pub gap: f64,
    /// Meaningful only when `theta_defined` is nonzero.
    pub theta: f64,
    pub theta_defined: c_int,
    /// `2L / gap`.
    pub contraction: f64,
    pub gap_ok: c_int,
    pub eps_ok: c_int,
    pub admissible: c_int,
}

/// Diagnostics of one Perron solve.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct InertialPointInfo {
    pub iterations: usize,
    pub contraction_observed: f64,
    pub fixed_point_residual: f64,
    pub boundary_defect: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(err: &Error) -> InertialStatus {
    match err {
        Error::Validation(_) => InertialStatus::InvalidArgument,
        Error::Condition(_) => InertialStatus::Condition,
        Error::ParabolicLimit { .. } => InertialStatus::ParabolicLimit,
        Error::Unsupported(_) => InertialStatus::Unsupported,
        Error::NonConvergence { .. } | Error::SeedsExhausted { .. } => InertialStatus::NonConvergence,
        Error::NonFinite { .. } => InertialStatus::NonFinite,
        Error::Config { .. } => InertialStatus::Config,
        Error::Io { .. } | Error::Csv(_) | Error::Json(_) => InertialStatus::Io,
    }
}

struct Fail(InertialStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn fail(status: InertialStatus, msg: impl Into<String>) -> Fail {
    Fail(status, msg.into())
}

/// Runs `body`, records any failure and converts panics.
fn guard(body: impl FnOnce() -> Result<(), Fail>) -> InertialStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => InertialStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            InertialStatus::Panic
        }
    }
}

unsafe fn borrow<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| fail(InertialStatus::NullPointer, format!("{what} is null")))
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(fail(InertialStatus::NullPointer, format!("{what} is null")));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut<'a>(p: *mut f64, len: usize, what: &str) -> Result<&'a mut [f64], Fail> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(fail(InertialStatus::NullPointer, format!("{what} is null")));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| fail(InertialStatus::NullPointer, format!("{what} is null")))
}

unsafe fn path_arg<'a>(p: *const c_char, what: &str) -> Result<Option<&'a str>, Fail> {
    if p.is_null() {
        return Ok(None);
    }
    CStr::from_ptr(p)
        .to_str()
        .map(Some)
        .map_err(|_| fail(InertialStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

fn boxed<T>(v: T) -> *mut T {
    Box::into_raw(Box::new(v))
}

/// Library version, a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn inertial_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failure on this thread; empty if none. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn inertial_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Human-readable name of a status code (static string).
#[no_mangle]
pub extern "C" fn inertial_status_name(status: InertialStatus) -> *const c_char {
    let s: &'static str = match status {
        InertialStatus::Ok => "ok\0",
        InertialStatus::NullPointer => "null pointer\0",
        InertialStatus::InvalidArgument => "invalid argument\0",
        InertialStatus::Condition => "condition violated\0",
        InertialStatus::ParabolicLimit => "parabolic limit\0",
        InertialStatus::Unsupported => "unsupported\0",
        InertialStatus::NonConvergence => "no convergence\0",
        InertialStatus::NonFinite => "non-finite value\0",
        InertialStatus::Config => "configuration error\0",
        InertialStatus::Io => "i/o error\0",
        InertialStatus::BufferTooSmall => "buffer too small\0",
        InertialStatus::InvalidUtf8 => "invalid utf-8\0",
        InertialStatus::Panic => "internal panic\0",
    };
    s.as_ptr().cast()
}

/// `lambda_k = (k pi / length)^2`, `k = 1..count`.
#[no_mangle]
pub unsafe extern "C" fn inertial_sequence_dirichlet(
    length: f64,
    count: usize,
    out_seq: *mut *mut InertialSequence,
) -> InertialStatus {
    guard(|| {
        let o = out(out_seq, "out_seq")?;
        *o = boxed(InertialSequence(EigenvalueSequence::dirichlet(length, count)?));
        Ok(())
    })
}

/// Sequence from explicit values (positive, nondecreasing).
#[no_mangle]
pub unsafe extern "C" fn inertial_sequence_from_values(
    values: *const f64,
    len: usize,
    out_seq: *mut *mut InertialSequence,
) -> InertialStatus {
    guard(|| {
        let v = slice(values, len, "values")?.to_vec();
        let o = out(out_seq, "out_seq")?;
        *o = boxed(InertialSequence(EigenvalueSequence::from_values(v)?));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn inertial_sequence_count(seq: *const InertialSequence, out_count: *mut usize) -> InertialStatus {
    guard(|| {
        let s = borrow(seq, "seq")?;
        *out(out_count, "out_count")? = s.0.count();
        Ok(())
    })
}

/// `lambda_n` with `n` starting at 1.
#[no_mangle]
pub unsafe extern "C" fn inertial_sequence_lambda(
    seq: *const InertialSequence,
    n: usize,
    out_lambda: *mut f64,
) -> InertialStatus {
    guard(|| {
        let s = borrow(seq, "seq")?;
        if n == 0 || n > s.0.count() {
            return Err(fail(
                InertialStatus::InvalidArgument,
                format!("index {n} outside 1..={}", s.0.count()),
            ));
        }
        *out(out_lambda, "out_lambda")? = s.0.lambda(n);
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn inertial_sequence_free(seq: *mut InertialSequence) {
    if !seq.is_null() {
        drop(Box::from_raw(seq));
    }
}

#[no_mangle]
pub unsafe extern "C" fn inertial_characteristic_roots(
    lambda: f64,
    eps: f64,
    out_roots: *mut InertialRoots,
) -> InertialStatus {
    guard(|| {
        let r = characteristic_roots(lambda, eps)?;
        *out(out_roots, "out_roots")? = InertialRoots {
            mu_plus_re: r.mu_plus.re,
            mu_plus_im: r.mu_plus.im,
            mu_minus_re: r.mu_minus.re,
            mu_minus_im: r.mu_minus.im,
        };
        Ok(())
    })
}

/// Gap conditions and weight for `(N, eps, L)`. A failing condition is
/// reported in the struct, not as an error status.
#[no_mangle]
pub unsafe extern "C" fn inertial_gap_report(
    seq: *const InertialSequence,
    n: usize,
    eps: f64,
    lipschitz: f64,
    out_report: *mut InertialGapReport,
) -> InertialStatus {
    guard(|| {
        let s = borrow(seq, "seq")?;
        let r = gap_report(&s.0, n, eps, lipschitz)?;
        *out(out_report, "out_report")? = InertialGapReport {
            lambda_n: r.lambda_n,
            lambda_n1: r.lambda_n1,
            gap: r.gap,
            theta: r.theta.unwrap_or(f64::NAN),
            theta_defined: r.theta.is_some() as c_int,
            contraction: r.contraction,
            gap_ok: r.gap_ok as c_int,
            eps_ok: r.eps_ok as c_int,
            admissible: r.admissible() as c_int,
        };
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn inertial_nonlinearity_zero(
    modes: usize,
    out_f: *mut *mut InertialNonlinearity,
) -> InertialStatus {
    guard(|| {
        *out(out_f, "out_f")? = boxed(InertialNonlinearity(NonlinearityModel::zero(modes)));
        Ok(())
    })
}

/// `F(u)_k = c u_k`.
#[no_mangle]
pub unsafe extern "C" fn inertial_nonlinearity_diagonal(
    c: f64,
    modes: usize,
    out_f: *mut *mut InertialNonlinearity,
) -> InertialStatus {
    guard(|| {
        if !c.is_finite() {
            return Err(fail(InertialStatus::InvalidArgument, "coefficient must be finite"));
        }
        *out(out_f, "out_f")? = boxed(InertialNonlinearity(NonlinearityModel::diagonal_constant(c, modes)));
        Ok(())
    })
}

/// Pointwise `f(u) = amplitude sin(frequency u)` in the sine basis of `seq`.
#[no_mangle]
pub unsafe extern "C" fn inertial_nonlinearity_sine(
    seq: *const InertialSequence,
    amplitude: f64,
    frequency: f64,
    modes: usize,
    out_f: *mut *mut InertialNonlinearity,
) -> InertialStatus {
    guard(|| {
        let s = borrow(seq, "seq")?;
        let f = NonlinearityModel::nemytskii(ScalarFunction::Sine { amplitude, frequency }, &s.0, modes)?;
        *out(out_f, "out_f")? = boxed(InertialNonlinearity(f));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn inertial_nonlinearity_lipschitz(
    f: *const InertialNonlinearity,
    out_l: *mut f64,
) -> InertialStatus {
    guard(|| {
        *out(out_l, "out_l")? = borrow(f, "f")?.0.declared_l();
        Ok(())
    })
}

/// `out = F(u)`; both buffers hold `modes` values.
#[no_mangle]
pub unsafe extern "C" fn inertial_nonlinearity_apply(
    f: *const InertialNonlinearity,
    u: *const f64,
    out_values: *mut f64,
    len: usize,
) -> InertialStatus {
    guard(|| {
        let f = &borrow(f, "f")?.0;
        if len != f.modes() {
            return Err(fail(
                InertialStatus::InvalidArgument,
                format!("length {len}, nonlinearity has {} modes", f.modes()),
            ));
        }
        let u = slice(u, len, "u")?;
        let o = slice_mut(out_values, len, "out_values")?;
        f.apply_into(u, o);
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn inertial_nonlinearity_free(f: *mut InertialNonlinearity) {
    if !f.is_null() {
        drop(Box::from_raw(f));
    }
}

/// Perron setup for `(N, eps, L)` with `modes` retained modes. Fails with
/// `Condition` when no weight exists.
#[no_mangle]
pub unsafe extern "C" fn inertial_perron_new(
    seq: *const InertialSequence,
    n: usize,
    eps: f64,
    lipschitz: f64,
    modes: usize,
    out_perron: *mut *mut InertialPerron,
) -> InertialStatus {
    guard(|| {
        let s = borrow(seq, "seq")?;
        let cfg = PerronConfig::new(&s.0, n, eps, lipschitz, modes)?;
        *out(out_perron, "out_perron")? = boxed(InertialPerron { cfg, seq: s.0.clone() });
        Ok(())
    })
}

/// Overrides the time step; 0 keeps the default.
#[no_mangle]
pub unsafe extern "C" fn inertial_perron_set_step(perron: *mut InertialPerron, dt: f64) -> InertialStatus {
    guard(|| {
        let h = perron
            .as_mut()
            .ok_or_else(|| fail(InertialStatus::NullPointer, "perron is null"))?;
        if dt != 0.0 {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(fail(InertialStatus::InvalidArgument, format!("step must be positive, got {dt}")));
            }
            h.cfg = h.cfg.clone().with_step(dt);
        }
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn inertial_perron_theta(perron: *const InertialPerron, out_theta: *mut f64) -> InertialStatus {
    guard(|| {
        *out(out_theta, "out_theta")? = borrow(perron, "perron")?.cfg.theta;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn inertial_perron_free(perron: *mut InertialPerron) {
    if !perron.is_null() {
        drop(Box::from_raw(perron));
    }
}

/// `M(p)`: `p` has `n` entries, `out_u` and `out_v` hold `modes` values.
/// `out_info` may be null.
#[no_mangle]
pub unsafe extern "C" fn inertial_construct_point(
    perron: *const InertialPerron,
    f: *const InertialNonlinearity,
    p: *const f64,
    n: usize,
    out_u: *mut f64,
    out_v: *mut f64,
    modes: usize,
    out_info: *mut InertialPointInfo,
) -> InertialStatus {
    guard(|| {
        let h = borrow(perron, "perron")?;
        let f = &borrow(f, "f")?.0;
        if n != h.cfg.n {
            return Err(fail(InertialStatus::InvalidArgument, format!("p has {n} entries, N = {}", h.cfg.n)));
        }
        if modes < h.cfg.modes {
            return Err(fail(
                InertialStatus::BufferTooSmall,
                format!("output holds {modes} modes, need {}", h.cfg.modes),
            ));
        }
        let p = slice(p, n, "p")?;
        let u = slice_mut(out_u, modes, "out_u")?;
        let v = slice_mut(out_v, modes, "out_v")?;
        let m = construct_point(p, f, &h.cfg, &h.seq)?;
        let k = m.value.u.len();
        u[..k].copy_from_slice(&m.value.u);
        v[..k].copy_from_slice(&m.value.v);
        u[k..].fill(0.0);
        v[k..].fill(0.0);
        if let Some(info) = out_info.as_mut() {
            *info = InertialPointInfo {
                iterations: m.iterations,
                contraction_observed: m.contraction_observed,
                fixed_point_residual: m.fixed_point_residual,
                boundary_defect: m.boundary_defect,
            };
        }
        Ok(())
    })
}

/// Runs the damped-wave pipeline. `config_path` may be null for defaults;
/// with a non-null `out_dir` the report files are written there.
/// `out_all_pass` receives 1 when every check passes.
#[no_mangle]
pub unsafe extern "C" fn inertial_wave1d_run(
    config_path: *const c_char,
    out_dir: *const c_char,
    out_all_pass: *mut c_int,
) -> InertialStatus {
    guard(|| {
        let flag = out(out_all_pass, "out_all_pass")?;
        let cfg = match path_arg(config_path, "config_path")? {
            Some(p) => RunConfig::from_raw(&RawConfig::from_file(Path::new(p))?)?,
            None => RunConfig::default(),
        };
        let outcome = run_pipeline(&cfg.wave)?;
        if let Some(dir) = path_arg(out_dir, "out_dir")? {
            outcome.write(Path::new(dir))?;
        }
        *flag = outcome.report.all_pass as c_int;
        Ok(())
    })
}
