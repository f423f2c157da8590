//! C ABI for the impulse dynamics library.
//!
//! Systems and certificates are opaque handles created and freed here; every
//! function returns an [`ImpulseStatus`] and writes results through out
//! pointers. All entry points catch panics and report them as a status, so
//! no unwinding ever crosses the boundary. The header is generated into
//! `include/impulse.h` at build time.

use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use impulse_core::config::SystemSpec;
use impulse_core::operator::{
    initial_pair_measure, iterate_to_convergence, BinnedMeasure, GridSpec,
};
use impulse_core::simulate::{simulate_ensemble, ImpulseSystem, InitialPosition};
use impulse_core::stability::{
    average_contraction, find_splitting, fixed_point_splitting, synchronization_test,
    validate_certificate, SplittingCertificate,
};
use impulse_core::stationary::{
    collapsed_stationary, example_cdf, fixed_point_residual, lift_stationary, CollapsedIfs,
};

/// Status code returned by every fallible entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImpulseStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidConfig = 3,
    DomainError = 4,
    NotConverged = 5,
    CertificateNotFound = 6,
    Unsupported = 7,
    InternalPanic = 8,
}

/// Opaque impulse system (maps, impulse-time law, domain).
pub struct ImpulseSystemHandle {
    system: ImpulseSystem,
}

/// Opaque splitting certificate.
pub struct ImpulseCertificateHandle {
    certificate: SplittingCertificate,
}

/// Average-contraction report in C layout.
#[repr(C)]
pub struct ImpulseContractionReport {
    pub l0: f64,
    pub l1: f64,
    pub mean_time: f64,
    pub expectation: f64,
    pub threshold: f64,
    pub stationary_log_mean: f64,
    pub satisfied: bool,
    pub has_max_mean_time: bool,
    pub max_mean_time: f64,
}

/// Synchronization-test report in C layout.
#[repr(C)]
pub struct ImpulseSyncReport {
    pub fraction_synchronized: f64,
    pub has_mean_log_lipschitz: bool,
    pub mean_log_lipschitz: f64,
}

fn guard<F: FnOnce() -> ImpulseStatus>(f: F) -> ImpulseStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => ImpulseStatus::InternalPanic,
    }
}

/// Library version as a NUL-terminated static string.
#[no_mangle]
pub extern "C" fn impulse_version() -> *const c_char {
    static VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "\0");
    VERSION.as_ptr() as *const c_char
}

/// Closed-form limit CDF of the bundled worked system.
#[no_mangle]
pub extern "C" fn impulse_example_cdf(a: f64) -> f64 {
    example_cdf(a)
}

/// Builds a system from a JSON system spec
/// (`{"domain": …, "f": …, "g": …, "times": …}`). The handle must be
/// released with [`impulse_system_free`].
///
/// # Safety
/// `json` must be a valid NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn impulse_system_from_json(
    json: *const c_char,
    out: *mut *mut ImpulseSystemHandle,
) -> ImpulseStatus {
    if json.is_null() || out.is_null() {
        return ImpulseStatus::NullPointer;
    }
    guard(|| {
        let text = match unsafe { CStr::from_ptr(json) }.to_str() {
            Ok(t) => t,
            Err(_) => return ImpulseStatus::InvalidArgument,
        };
        let spec: SystemSpec = match serde_json::from_str(text) {
            Ok(s) => s,
            Err(_) => return ImpulseStatus::InvalidConfig,
        };
        match spec.build() {
            Ok(system) => {
                let handle = Box::new(ImpulseSystemHandle { system });
                unsafe { *out = Box::into_raw(handle) };
                ImpulseStatus::Ok
            }
            Err(_) => ImpulseStatus::InvalidConfig,
        }
    })
}

/// Releases a system handle. Null is a no-op.
///
/// # Safety
/// `handle` must come from [`impulse_system_from_json`] and not be used after.
#[no_mangle]
pub unsafe extern "C" fn impulse_system_free(handle: *mut ImpulseSystemHandle) {
    if !handle.is_null() {
        drop(unsafe { Box::from_raw(handle) });
    }
}

/// Evaluates the two-constant average-contraction criterion.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn impulse_check_contraction(
    l0: f64,
    l1: f64,
    mean_time: f64,
    out: *mut ImpulseContractionReport,
) -> ImpulseStatus {
    if out.is_null() {
        return ImpulseStatus::NullPointer;
    }
    guard(|| match average_contraction(l0, l1, mean_time) {
        Ok(r) => {
            unsafe {
                *out = ImpulseContractionReport {
                    l0: r.l0,
                    l1: r.l1,
                    mean_time: r.mean_time,
                    expectation: r.expectation,
                    threshold: r.threshold,
                    stationary_log_mean: r.stationary_log_mean,
                    satisfied: r.satisfied,
                    has_max_mean_time: r.max_mean_time.is_some(),
                    max_mean_time: r.max_mean_time.unwrap_or(f64::NAN),
                };
            }
            ImpulseStatus::Ok
        }
        Err(_) => ImpulseStatus::InvalidArgument,
    })
}

/// Simulates `count` trajectories for `steps` steps from a uniform start and
/// writes the final positions (sorted) into `out_values` (caller-allocated,
/// length `count`). Deterministic in `(seed, count, steps)`.
///
/// # Safety
/// `out_values` must point to at least `count` doubles.
#[no_mangle]
pub unsafe extern "C" fn impulse_simulate_ensemble(
    handle: *const ImpulseSystemHandle,
    steps: u64,
    count: u64,
    seed: u64,
    out_values: *mut f64,
) -> ImpulseStatus {
    if handle.is_null() || out_values.is_null() {
        return ImpulseStatus::NullPointer;
    }
    if count == 0 {
        return ImpulseStatus::InvalidArgument;
    }
    guard(|| {
        let sys = unsafe { &(*handle).system };
        match simulate_ensemble(
            sys,
            InitialPosition::Uniform,
            steps as usize,
            count as usize,
            seed,
        ) {
            Ok(ecdf) => {
                let dst = unsafe { std::slice::from_raw_parts_mut(out_values, count as usize) };
                dst.copy_from_slice(ecdf.values());
                ImpulseStatus::Ok
            }
            Err(_) => ImpulseStatus::DomainError,
        }
    })
}

/// Monte-Carlo synchronization test over reversed-chain paths.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn impulse_synchronization_test(
    handle: *const ImpulseSystemHandle,
    paths: u64,
    path_len: u64,
    tol: f64,
    seed: u64,
    out: *mut ImpulseSyncReport,
) -> ImpulseStatus {
    if handle.is_null() || out.is_null() {
        return ImpulseStatus::NullPointer;
    }
    if paths == 0 || path_len == 0 {
        return ImpulseStatus::InvalidArgument;
    }
    guard(|| {
        let sys = unsafe { &(*handle).system };
        let r = synchronization_test(sys, paths as usize, path_len as usize, tol, seed);
        unsafe {
            *out = ImpulseSyncReport {
                fraction_synchronized: r.fraction_synchronized,
                has_mean_log_lipschitz: r.mean_log_lipschitz.is_some(),
                mean_log_lipschitz: r.mean_log_lipschitz.unwrap_or(f64::NAN),
            };
        }
        ImpulseStatus::Ok
    })
}

/// Bounded search for a splitting certificate. On success the handle must be
/// released with [`impulse_certificate_free`].
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn impulse_find_splitting(
    handle: *const ImpulseSystemHandle,
    max_len: u64,
    out: *mut *mut ImpulseCertificateHandle,
) -> ImpulseStatus {
    if handle.is_null() || out.is_null() {
        return ImpulseStatus::NullPointer;
    }
    guard(|| {
        let sys = unsafe { &(*handle).system };
        match find_splitting(sys, max_len as usize) {
            Ok(Some(certificate)) => {
                let boxed = Box::new(ImpulseCertificateHandle { certificate });
                unsafe { *out = Box::into_raw(boxed) };
                ImpulseStatus::Ok
            }
            Ok(None) => ImpulseStatus::CertificateNotFound,
            Err(_) => ImpulseStatus::Unsupported,
        }
    })
}

/// Splitting certificate via the attracting-fixed-point construction.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn impulse_fixed_point_splitting(
    handle: *const ImpulseSystemHandle,
    out: *mut *mut ImpulseCertificateHandle,
) -> ImpulseStatus {
    if handle.is_null() || out.is_null() {
        return ImpulseStatus::NullPointer;
    }
    guard(|| {
        let sys = unsafe { &(*handle).system };
        match fixed_point_splitting(sys) {
            Ok((Some(certificate), _)) => {
                let boxed = Box::new(ImpulseCertificateHandle { certificate });
                unsafe { *out = Box::into_raw(boxed) };
                ImpulseStatus::Ok
            }
            Ok((None, _)) => ImpulseStatus::CertificateNotFound,
            Err(_) => ImpulseStatus::Unsupported,
        }
    })
}

/// Gap between the two certificate images.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn impulse_certificate_gap(
    cert: *const ImpulseCertificateHandle,
    out: *mut f64,
) -> ImpulseStatus {
    if cert.is_null() || out.is_null() {
        return ImpulseStatus::NullPointer;
    }
    unsafe { *out = (*cert).certificate.gap };
    ImpulseStatus::Ok
}

/// Length of certificate word `which` (0 or 1).
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn impulse_certificate_word_len(
    cert: *const ImpulseCertificateHandle,
    which: u32,
    out: *mut usize,
) -> ImpulseStatus {
    if cert.is_null() || out.is_null() {
        return ImpulseStatus::NullPointer;
    }
    let c = unsafe { &(*cert).certificate };
    let len = match which {
        0 => c.seq_a.len(),
        1 => c.seq_b.len(),
        _ => return ImpulseStatus::InvalidArgument,
    };
    unsafe { *out = len };
    ImpulseStatus::Ok
}

/// Copies certificate word `which` (chain order) into `buf`.
///
/// # Safety
/// `buf` must point to at least `len` entries as reported by
/// [`impulse_certificate_word_len`].
#[no_mangle]
pub unsafe extern "C" fn impulse_certificate_word(
    cert: *const ImpulseCertificateHandle,
    which: u32,
    buf: *mut u64,
    len: usize,
) -> ImpulseStatus {
    if cert.is_null() || buf.is_null() {
        return ImpulseStatus::NullPointer;
    }
    let c = unsafe { &(*cert).certificate };
    let word = match which {
        0 => &c.seq_a,
        1 => &c.seq_b,
        _ => return ImpulseStatus::InvalidArgument,
    };
    if len < word.len() {
        return ImpulseStatus::InvalidArgument;
    }
    for (i, s) in word.iter().enumerate() {
        unsafe { *buf.add(i) = *s as u64 };
    }
    ImpulseStatus::Ok
}

/// Releases a certificate handle. Null is a no-op.
///
/// # Safety
/// `cert` must come from a certificate-producing call and not be used after.
#[no_mangle]
pub unsafe extern "C" fn impulse_certificate_free(cert: *mut ImpulseCertificateHandle) {
    if !cert.is_null() {
        drop(unsafe { Box::from_raw(cert) });
    }
}

/// Re-validates a certificate given as two explicit words; writes the
/// recomputed image gap on success.
///
/// # Safety
/// Word pointers must reference `len_a` / `len_b` entries.
#[no_mangle]
pub unsafe extern "C" fn impulse_validate_certificate(
    handle: *const ImpulseSystemHandle,
    seq_a: *const u64,
    len_a: usize,
    seq_b: *const u64,
    len_b: usize,
    gap_out: *mut f64,
) -> ImpulseStatus {
    if handle.is_null() || seq_a.is_null() || seq_b.is_null() || gap_out.is_null() {
        return ImpulseStatus::NullPointer;
    }
    if len_a == 0 || len_b == 0 {
        return ImpulseStatus::InvalidArgument;
    }
    guard(|| {
        let sys = unsafe { &(*handle).system };
        let a: Vec<usize> = unsafe { std::slice::from_raw_parts(seq_a, len_a) }
            .iter()
            .map(|v| *v as usize)
            .collect();
        let b: Vec<usize> = unsafe { std::slice::from_raw_parts(seq_b, len_b) }
            .iter()
            .map(|v| *v as usize)
            .collect();
        let draft = SplittingCertificate {
            seq_a: a,
            seq_b: b,
            image_a: impulse_core::maps::Interval::point(0.0),
            image_b: impulse_core::maps::Interval::point(0.0),
            gap: 0.0,
            prob_a: 0.0,
            prob_b: 0.0,
            reversed_prob_a: 0.0,
            reversed_prob_b: 0.0,
        };
        match validate_certificate(sys, &draft) {
            Ok(valid) => {
                unsafe { *gap_out = valid.gap };
                ImpulseStatus::Ok
            }
            Err(_) => ImpulseStatus::CertificateNotFound,
        }
    })
}

/// Iterates the transfer operator from a uniform seed and writes the CDF of
/// the limiting space marginal at the `bins + 1` grid edges.
///
/// # Safety
/// `out_cdf` must point to `bins + 1` doubles; `converged` must be valid.
#[no_mangle]
pub unsafe extern "C" fn impulse_evolve_cdf(
    handle: *const ImpulseSystemHandle,
    bins: u64,
    states: u64,
    max_iter: u64,
    tol: f64,
    out_cdf: *mut f64,
    converged: *mut bool,
) -> ImpulseStatus {
    if handle.is_null() || out_cdf.is_null() || converged.is_null() {
        return ImpulseStatus::NullPointer;
    }
    if bins < 2 || states == 0 {
        return ImpulseStatus::InvalidArgument;
    }
    guard(|| {
        let sys = unsafe { &(*handle).system };
        let grid = match GridSpec::new(sys.domain(), bins as usize) {
            Ok(g) => g,
            Err(_) => return ImpulseStatus::InvalidArgument,
        };
        let seed = match initial_pair_measure(sys, &BinnedMeasure::uniform(grid), states as usize)
        {
            Ok(m) => m,
            Err(_) => return ImpulseStatus::InvalidArgument,
        };
        let run = iterate_to_convergence(sys, seed, max_iter as usize, tol);
        let cdf = run.measure.space_marginal().cdf_at_edges();
        let dst = unsafe { std::slice::from_raw_parts_mut(out_cdf, bins as usize + 1) };
        dst.copy_from_slice(&cdf);
        unsafe { *converged = run.converged };
        if run.converged {
            ImpulseStatus::Ok
        } else {
            ImpulseStatus::NotConverged
        }
    })
}

/// Computes the collapsed stationary law, lifts it, and writes the CDF of the
/// lifted space marginal at the `bins + 1` grid edges together with the
/// fixed-point residual.
///
/// # Safety
/// `out_cdf` must point to `bins + 1` doubles; `residual_out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn impulse_stationary_cdf(
    handle: *const ImpulseSystemHandle,
    bins: u64,
    states: u64,
    out_cdf: *mut f64,
    residual_out: *mut f64,
) -> ImpulseStatus {
    if handle.is_null() || out_cdf.is_null() || residual_out.is_null() {
        return ImpulseStatus::NullPointer;
    }
    if bins < 4 || states == 0 {
        return ImpulseStatus::InvalidArgument;
    }
    guard(|| {
        let sys = unsafe { &(*handle).system };
        let cifs = CollapsedIfs::new(sys);
        let collapsed = match collapsed_stationary(&cifs, (bins / 2) as usize, 1000, 1e-12) {
            Ok(c) => c,
            Err(_) => return ImpulseStatus::InvalidArgument,
        };
        let grid = match GridSpec::new(sys.domain(), bins as usize) {
            Ok(g) => g,
            Err(_) => return ImpulseStatus::InvalidArgument,
        };
        let ld = match lift_stationary(sys, &collapsed.measure, states as usize, grid) {
            Ok(l) => l,
            Err(_) => return ImpulseStatus::InvalidArgument,
        };
        let cdf = ld.nu.cdf_at_edges();
        let dst = unsafe { std::slice::from_raw_parts_mut(out_cdf, bins as usize + 1) };
        dst.copy_from_slice(&cdf);
        unsafe { *residual_out = fixed_point_residual(sys, &ld) };
        if collapsed.converged {
            ImpulseStatus::Ok
        } else {
            ImpulseStatus::NotConverged
        }
    })
}

/// Frees a string returned by this library (reserved for future accessors).
///
/// # Safety
/// `s` must come from this library and not be used after.
#[no_mangle]
pub unsafe extern "C" fn impulse_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(unsafe { CString::from_raw(s) });
    }
}

// Keeps `ptr` referenced even when built as an rlib for tests.
#[doc(hidden)]
pub fn _null_system() -> *mut ImpulseSystemHandle {
    ptr::null_mut()
}
