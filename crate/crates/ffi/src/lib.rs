//! C ABI over `scsa-core`.
//!
//! Objects cross the boundary as opaque handles created by `*_new` style
//! functions and released with the matching `*_free`. Every fallible call
//! returns an [`ScsaStatus`]; on failure a message is kept per thread and can
//! be read with [`scsa_last_error_message`]. Array outputs are copied into
//! caller-provided buffers whose length is checked.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use scsa_core::diff::{build_d2, D2Matrix, DiffScheme};
use scsa_core::hselect;
use scsa_core::noise;
use scsa_core::scsa::{self, NegativeSpectrum};
use scsa_core::signal::{self, Grid, NoiseModel, SampledSignal};
use scsa_core::ScsaError;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScsaStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// Invalid argument or precondition.
    Domain = 2,
    /// Eigensolver iteration cap hit.
    NoConvergence = 3,
    /// An analysis condition does not hold.
    Condition = 4,
    /// A caller buffer is too small; the required length was written where
    /// the function documents it.
    BufferTooSmall = 5,
    /// Unexpected internal failure (a caught panic).
    Internal = 6,
}

/// Second-derivative discretization.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScsaScheme {
    Fourier = 0,
    FiniteDifference = 1,
}

impl From<ScsaScheme> for DiffScheme {
    fn from(s: ScsaScheme) -> Self {
        match s {
            ScsaScheme::Fourier => DiffScheme::FourierPseudospectral,
            ScsaScheme::FiniteDifference => DiffScheme::CentralFdDirichlet,
        }
    }
}

/// Sampled signal on a uniform grid.
pub struct ScsaSignal(SampledSignal);

/// Second-derivative matrix.
pub struct ScsaD2(D2Matrix);

/// Bound states of one Schrödinger matrix.
pub struct ScsaSpectrum(NegativeSpectrum);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &ScsaError) -> ScsaStatus {
    match e {
        ScsaError::Domain(_) | ScsaError::Parse { .. } | ScsaError::Io { .. } => ScsaStatus::Domain,
        ScsaError::NoConvergence { .. } => ScsaStatus::NoConvergence,
        ScsaError::Condition { .. } => ScsaStatus::Condition,
    }
}

struct Fail(ScsaStatus, String);

impl From<ScsaError> for Fail {
    fn from(e: ScsaError) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(ScsaStatus::NullPointer, format!("{what} is null"))
}

/// Runs `f`, turning errors and panics into a status plus stored message.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> ScsaStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => ScsaStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal error: {msg}"));
            ScsaStatus::Internal
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn slice<'a>(p: *const f64, n: usize, what: &str) -> Result<&'a [f64], Fail> {
    if n == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, n))
}

/// Copies `src` into `out[..cap]`; writes the needed length to `len_out`.
unsafe fn copy_out(
    src: &[f64],
    out: *mut f64,
    cap: usize,
    len_out: *mut usize,
) -> Result<(), Fail> {
    if !len_out.is_null() {
        *len_out = src.len();
    }
    if src.len() > cap {
        return Err(Fail(
            ScsaStatus::BufferTooSmall,
            format!("buffer holds {cap} values, {} needed", src.len()),
        ));
    }
    if !src.is_empty() {
        if out.is_null() {
            return Err(null("output buffer"));
        }
        ptr::copy_nonoverlapping(src.as_ptr(), out, src.len());
    }
    Ok(())
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("output handle"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

/// Message of the last failed call on this thread, or null. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn scsa_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn scsa_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Wraps `m` samples on the grid from `a` to `b` (both included).
#[no_mangle]
pub unsafe extern "C" fn scsa_signal_new(
    a: f64,
    b: f64,
    m: usize,
    values: *const f64,
    out: *mut *mut ScsaSignal,
) -> ScsaStatus {
    guard(|| {
        let grid = Grid::new(a, b, m)?;
        let v = slice(values, m, "values")?.to_vec();
        put(out, ScsaSignal(SampledSignal::new(grid, v)?))
    })
}

/// `sech^2(x - center)` sampled on the grid from `a` to `b`.
#[no_mangle]
pub unsafe extern "C" fn scsa_signal_sech2(
    a: f64,
    b: f64,
    m: usize,
    center: f64,
    out: *mut *mut ScsaSignal,
) -> ScsaStatus {
    guard(|| {
        let grid = Grid::new(a, b, m)?;
        put(out, ScsaSignal(signal::sech2_signal(&grid, center)))
    })
}

#[no_mangle]
pub unsafe extern "C" fn scsa_signal_free(s: *mut ScsaSignal) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Number of samples, 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn scsa_signal_len(s: *const ScsaSignal) -> usize {
    s.as_ref().map_or(0, |s| s.0.len())
}

/// Grid spacing, NaN for a null handle.
#[no_mangle]
pub unsafe extern "C" fn scsa_signal_dx(s: *const ScsaSignal) -> f64 {
    s.as_ref().map_or(f64::NAN, |s| s.0.grid().dx())
}

/// Copies the samples into `out` (capacity `cap`); `len_out` may be null.
#[no_mangle]
pub unsafe extern "C" fn scsa_signal_values(
    s: *const ScsaSignal,
    out: *mut f64,
    cap: usize,
    len_out: *mut usize,
) -> ScsaStatus {
    guard(|| copy_out(deref(s, "signal")?.0.values(), out, cap, len_out))
}

/// Adds seeded Gaussian noise. With `use_snr` nonzero the noise is scaled to
/// hit `snr_db` exactly and `variance` is ignored. `sigma_out` (may be null)
/// receives the standard deviation actually used.
#[no_mangle]
pub unsafe extern "C" fn scsa_signal_add_noise(
    clean: *const ScsaSignal,
    mean: f64,
    variance: f64,
    seed: u64,
    use_snr: i32,
    snr_db: f64,
    out: *mut *mut ScsaSignal,
    sigma_out: *mut f64,
) -> ScsaStatus {
    guard(|| {
        let clean = deref(clean, "clean signal")?;
        let model = NoiseModel::gaussian(mean, variance, seed);
        let obs = signal::add_noise(&clean.0, &model, (use_snr != 0).then_some(snr_db))?;
        if !sigma_out.is_null() {
            *sigma_out = obs.sigma;
        }
        put(out, ScsaSignal(obs.noisy))
    })
}

/// Second-derivative matrix of size `m` for spacing `dx`.
#[no_mangle]
pub unsafe extern "C" fn scsa_d2_new(
    scheme: ScsaScheme,
    m: usize,
    dx: f64,
    out: *mut *mut ScsaD2,
) -> ScsaStatus {
    guard(|| put(out, ScsaD2(build_d2(scheme.into(), m, dx)?)))
}

/// Matrix matching the grid of `s`.
#[no_mangle]
pub unsafe extern "C" fn scsa_d2_for_signal(
    scheme: ScsaScheme,
    s: *const ScsaSignal,
    out: *mut *mut ScsaD2,
) -> ScsaStatus {
    guard(|| {
        let s = &deref(s, "signal")?.0;
        put(
            out,
            ScsaD2(build_d2(scheme.into(), s.len(), s.grid().dx())?),
        )
    })
}

#[no_mangle]
pub unsafe extern "C" fn scsa_d2_free(d: *mut ScsaD2) {
    if !d.is_null() {
        drop(Box::from_raw(d));
    }
}

/// Full SCSA at one `h`. Either output pointer may be null when not wanted.
#[no_mangle]
pub unsafe extern "C" fn scsa_estimate(
    s: *const ScsaSignal,
    d2: *const ScsaD2,
    h: f64,
    spectrum_out: *mut *mut ScsaSpectrum,
    estimate_out: *mut *mut ScsaSignal,
) -> ScsaStatus {
    guard(|| {
        let (spec, est) = scsa::estimate(&deref(s, "signal")?.0, &deref(d2, "d2")?.0, h)?;
        if !spectrum_out.is_null() {
            put(spectrum_out, ScsaSpectrum(spec))?;
        }
        if !estimate_out.is_null() {
            put(estimate_out, ScsaSignal(est))?;
        }
        Ok(())
    })
}

/// One-shot denoising of a plain array: `values` and `out` both hold `m`
/// samples on the grid from `a` to `b`. `n_h_out` may be null.
#[no_mangle]
pub unsafe extern "C" fn scsa_denoise(
    values: *const f64,
    m: usize,
    a: f64,
    b: f64,
    scheme: ScsaScheme,
    h: f64,
    out: *mut f64,
    n_h_out: *mut usize,
) -> ScsaStatus {
    guard(|| {
        let grid = Grid::new(a, b, m)?;
        let y = SampledSignal::new(grid, slice(values, m, "values")?.to_vec())?;
        let d2 = build_d2(scheme.into(), m, grid.dx())?;
        let (spec, est) = scsa::estimate(&y, &d2, h)?;
        if !n_h_out.is_null() {
            *n_h_out = spec.count();
        }
        copy_out(est.values(), out, m, ptr::null_mut())
    })
}

#[no_mangle]
pub unsafe extern "C" fn scsa_spectrum_free(s: *mut ScsaSpectrum) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Number of bound states, 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn scsa_spectrum_count(s: *const ScsaSpectrum) -> usize {
    s.as_ref().map_or(0, |s| s.0.count())
}

/// Copies the kappas, largest first.
#[no_mangle]
pub unsafe extern "C" fn scsa_spectrum_kappas(
    s: *const ScsaSpectrum,
    out: *mut f64,
    cap: usize,
    len_out: *mut usize,
) -> ScsaStatus {
    guard(|| copy_out(deref(s, "spectrum")?.0.kappas(), out, cap, len_out))
}

/// Copies eigenvector `k` (paired with the k-th kappa), scaled so that
/// `dx * sum psi^2 = 1`.
#[no_mangle]
pub unsafe extern "C" fn scsa_spectrum_eigenvector(
    s: *const ScsaSpectrum,
    k: usize,
    out: *mut f64,
    cap: usize,
    len_out: *mut usize,
) -> ScsaStatus {
    guard(|| {
        let spec = &deref(s, "spectrum")?.0;
        let v = spec.eigenvectors().get(k).ok_or_else(|| {
            Fail(
                ScsaStatus::Domain,
                format!("mode {k} out of range ({} modes)", spec.count()),
            )
        })?;
        copy_out(v, out, cap, len_out)
    })
}

/// A-posteriori bound on `||y^noisy_h - y^clean_h||_2` for noise amplitude
/// bound `b`.
#[no_mangle]
pub unsafe extern "C" fn scsa_noise_bound(
    s: *const ScsaSpectrum,
    b: f64,
    bound_out: *mut f64,
) -> ScsaStatus {
    guard(|| {
        let spec = &deref(s, "spectrum")?.0;
        if bound_out.is_null() {
            return Err(null("bound_out"));
        }
        *bound_out = noise::aposteriori_bound(spec, b, f64::NAN)?.bound_value;
        Ok(())
    })
}

/// Noise amplitude bound `B` and its probability `p`: three-sigma when
/// `gaussian` is nonzero (needs `gamma = 3`), Chebyshev otherwise.
#[no_mangle]
pub unsafe extern "C" fn scsa_amplitude_bound(
    mean: f64,
    sigma: f64,
    gamma: f64,
    gaussian: i32,
    b_out: *mut f64,
    p_out: *mut f64,
) -> ScsaStatus {
    guard(|| {
        if b_out.is_null() || p_out.is_null() {
            return Err(null("output"));
        }
        let mut bound = noise::chebyshev_bound(mean, sigma, gamma)?;
        if gaussian != 0 {
            if gamma != 3.0 {
                return Err(Fail(
                    ScsaStatus::Domain,
                    "three-sigma rule needs gamma = 3".into(),
                ));
            }
            bound.p = noise::THREE_SIGMA_PROBABILITY;
        }
        *b_out = bound.b;
        *p_out = bound.p;
        Ok(())
    })
}

/// Biquad coefficients of the second-order low-pass with cutoff `wc`
/// (rad/sample); `a[0]` is 1.
#[no_mangle]
pub unsafe extern "C" fn scsa_butterworth2(
    wc: f64,
    b_out: *mut f64,
    a_out: *mut f64,
) -> ScsaStatus {
    guard(|| {
        let f = hselect::butterworth2(wc)?;
        copy_out(&f.b, b_out, 3, ptr::null_mut())?;
        copy_out(&f.a, a_out, 3, ptr::null_mut())
    })
}

/// Sweeps `h_grid` (`n` ascending values) on `noisy` and writes the
/// recommended `h`. `no_interior_out` (may be null) is set to 1 when the
/// filtered residual had no interior minimum.
#[no_mangle]
pub unsafe extern "C" fn scsa_select_h(
    noisy: *const ScsaSignal,
    d2: *const ScsaD2,
    h_grid: *const f64,
    n: usize,
    wc: f64,
    h_out: *mut f64,
    no_interior_out: *mut i32,
) -> ScsaStatus {
    guard(|| {
        let y = &deref(noisy, "signal")?.0;
        let d2 = &deref(d2, "d2")?.0;
        let hs = slice(h_grid, n, "h_grid")?;
        if h_out.is_null() {
            return Err(null("h_out"));
        }
        let filter = hselect::butterworth2(wc)?;
        let result = hselect::sweep(y, d2, hs, &filter, None, None)?;
        let sel = hselect::select_h(&result)?;
        *h_out = sel.recommended_h;
        if !no_interior_out.is_null() {
            *no_interior_out = sel.no_interior_minimum as i32;
        }
        Ok(())
    })
}
