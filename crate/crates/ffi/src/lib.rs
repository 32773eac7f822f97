//! C ABI over `cme-core`.
//!
//! Handles are opaque pointers created by `*_new`/`*_from_*` functions and
//! released with the matching `*_free`. Every fallible call returns a
//! [`CmeStatus`]; on failure the message is kept per thread and can be copied
//! out with [`cme_last_error`]. Complex arrays are interleaved `re, im`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use cme_core::bloch::{solve_at, BlochProblem};
use cme_core::cli::{run, Command};
use cme_core::config::{parse_config, RunConfig};
use cme_core::harness::{build_uapp, prepare, ExperimentSpec, Prepared};
use cme_core::soliton::gap_soliton;
use cme_core::Error;
use num_complex::Complex64;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CmeStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Numerics = 4,
    Io = 5,
    /// The run finished but missed its acceptance window.
    Acceptance = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CmeCommand {
    Bands = 0,
    Coeffs = 1,
    Soliton = 2,
    Simulate = 3,
    Converge = 4,
}

/// CME coefficients; `cells` is the cell count `N` of the rescaled system
/// (1 when no rescaling applies).
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CmeCoefficients {
    pub omega0: f64,
    pub c_g: f64,
    pub kappa: f64,
    pub kappa_s: f64,
    pub alpha: f64,
    pub beta_re: f64,
    pub beta_im: f64,
    pub gamma_re: f64,
    pub gamma_im: f64,
    pub cells: i64,
}

/// Validated run configuration.
pub struct CmeConfig {
    inner: RunConfig,
}

/// Carriers, coefficients and the explicit soliton for one configuration.
pub struct CmeSetup {
    spec: ExperimentSpec,
    prep: Prepared,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &Error) -> CmeStatus {
    match e {
        Error::Config(_) => CmeStatus::Config,
        Error::Io(_) => CmeStatus::Io,
        _ => CmeStatus::Numerics,
    }
}

/// Run `f`, translating errors and panics into a status code.
fn guard<F: FnOnce() -> Result<(), (CmeStatus, String)>>(f: F) -> CmeStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            CmeStatus::Ok
        }
        Ok(Err((s, msg))) => {
            set_error(msg);
            s
        }
        Err(_) => {
            set_error("internal panic".into());
            CmeStatus::Panic
        }
    }
}

fn core<T>(r: cme_core::Result<T>) -> Result<T, (CmeStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (CmeStatus, String) {
    (CmeStatus::NullPointer, format!("{what} is null"))
}

fn invalid(msg: impl Into<String>) -> (CmeStatus, String) {
    (CmeStatus::InvalidArgument, msg.into())
}

unsafe fn c_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, (CmeStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| invalid(format!("{what} is not UTF-8")))
}

/// Copy `s` NUL-terminated into `buf` (truncating). Returns the full length
/// without the NUL, so callers can size a second attempt.
unsafe fn copy_out(s: &str, buf: *mut c_char, len: usize) -> usize {
    if !buf.is_null() && len > 0 {
        let n = s.len().min(len - 1);
        ptr::copy_nonoverlapping(s.as_ptr() as *const c_char, buf, n);
        *buf.add(n) = 0;
    }
    s.len()
}

unsafe fn write_interleaved(z: &[Complex64], out: *mut f64) {
    let dst = slice::from_raw_parts_mut(out, 2 * z.len());
    for (d, v) in dst.chunks_exact_mut(2).zip(z) {
        d[0] = v.re;
        d[1] = v.im;
    }
}

/// Copy the calling thread's last error message into `buf`.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn cme_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| copy_out(&e.borrow(), buf, len))
}

/// Parse an INI configuration.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cme_config_from_str(text: *const c_char, out: *mut *mut CmeConfig) -> CmeStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let t = c_str(text, "text")?;
        let inner = core(parse_config(t))?;
        *out = Box::into_raw(Box::new(CmeConfig { inner }));
        Ok(())
    })
}

/// One of the named setups `sec611`, `sec612`, `sec62`.
///
/// # Safety
/// `name` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cme_config_named(name: *const c_char, out: *mut *mut CmeConfig) -> CmeStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let inner = core(RunConfig::named(c_str(name, "name")?))?;
        *out = Box::into_raw(Box::new(CmeConfig { inner }));
        Ok(())
    })
}

/// # Safety
/// `cfg` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn cme_config_free(cfg: *mut CmeConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Canonical INI text of the configuration. Returns the full length.
///
/// # Safety
/// `cfg` must be valid; `buf` null or `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn cme_config_serialize(cfg: *const CmeConfig, buf: *mut c_char, len: usize) -> usize {
    match cfg.as_ref() {
        Some(c) => copy_out(&c.inner.serialize(), buf, len),
        None => 0,
    }
}

/// Hex SHA-256 of the configuration (64 characters).
///
/// # Safety
/// `cfg` must be valid; `buf` null or `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn cme_config_hash(cfg: *const CmeConfig, buf: *mut c_char, len: usize) -> usize {
    match cfg.as_ref() {
        Some(c) => copy_out(&c.inner.hash(), buf, len),
        None => 0,
    }
}

/// Replace the epsilon list.
///
/// # Safety
/// `cfg` must be valid; `eps` must point to `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn cme_config_set_epsilons(cfg: *mut CmeConfig, eps: *const f64, n: usize) -> CmeStatus {
    guard(|| {
        let c = cfg.as_mut().ok_or_else(|| null("cfg"))?;
        if eps.is_null() || n == 0 {
            return Err(invalid("epsilon list is empty"));
        }
        let list = slice::from_raw_parts(eps, n);
        if let Some(bad) = list.iter().find(|e| !(**e > 0.0 && **e <= 0.2)) {
            return Err(invalid(format!("epsilon {bad} outside (0, 0.2]")));
        }
        c.inner.epsilons = list.to_vec();
        Ok(())
    })
}

/// Band energy `ω_band(k)` of the configured `V`, with `k` in units of the
/// reciprocal lattice vector (so the zone is `[-1/2, 1/2]`).
///
/// # Safety
/// `cfg` must be valid; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cme_band_energy(cfg: *const CmeConfig, k: f64, band: usize, out: *mut f64) -> CmeStatus {
    guard(|| {
        let c = cfg.as_ref().ok_or_else(|| null("cfg"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        if band == 0 {
            return Err(invalid("band counts from 1"));
        }
        let (v, _, _) = core(c.inner.potentials())?;
        let g = v.lattice();
        let problem = core(BlochProblem::new(v, c.inner.cutoff))?;
        let (omega, _) = core(solve_at(&problem, k * g, band))?;
        *out = omega[band - 1];
        Ok(())
    })
}

/// Select carriers and compute coefficients.
///
/// # Safety
/// `cfg` must be valid; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cme_setup_new(cfg: *const CmeConfig, out: *mut *mut CmeSetup) -> CmeStatus {
    guard(|| {
        let c = cfg.as_ref().ok_or_else(|| null("cfg"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let spec = core(c.inner.experiment())?;
        let prep = core(prepare(&spec))?;
        *out = Box::into_raw(Box::new(CmeSetup { spec, prep }));
        Ok(())
    })
}

/// # Safety
/// `setup` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn cme_setup_free(setup: *mut CmeSetup) {
    if !setup.is_null() {
        drop(Box::from_raw(setup));
    }
}

/// # Safety
/// `setup` must be valid; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cme_setup_coefficients(setup: *const CmeSetup, out: *mut CmeCoefficients) -> CmeStatus {
    guard(|| {
        let s = setup.as_ref().ok_or_else(|| null("setup"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let c = &s.prep.setup.coeffs;
        *out = CmeCoefficients {
            omega0: s.prep.setup.pair.omega0,
            c_g: c.c_g,
            kappa: c.kappa,
            kappa_s: c.kappa_s,
            alpha: c.alpha,
            beta_re: c.beta.re,
            beta_im: c.beta.im,
            gamma_re: c.gamma.re,
            gamma_im: c.gamma.im,
            cells: c.scaled.map_or(1, |q| q.cells),
        };
        Ok(())
    })
}

/// Soliton envelopes `A_±(X_j, T)` for `n` points, written as `2n`
/// interleaved doubles each.
///
/// # Safety
/// `setup` valid; `x` has `n` doubles; `a_plus`, `a_minus` have `2n`.
#[no_mangle]
pub unsafe extern "C" fn cme_soliton_eval(
    setup: *const CmeSetup,
    x: *const f64,
    n: usize,
    t: f64,
    a_plus: *mut f64,
    a_minus: *mut f64,
) -> CmeStatus {
    guard(|| {
        let s = setup.as_ref().ok_or_else(|| null("setup"))?;
        if x.is_null() || a_plus.is_null() || a_minus.is_null() {
            return Err(null("array"));
        }
        let (ap, am) = gap_soliton(&s.prep.soliton, slice::from_raw_parts(x, n), t);
        write_interleaved(&ap, a_plus);
        write_interleaved(&am, a_minus);
        Ok(())
    })
}

/// Approximate solution `u_app(x_j, t)` at amplitude `epsilon`, `2n` doubles.
///
/// # Safety
/// `setup` valid; `x` has `n` doubles; `out` has `2n`.
#[no_mangle]
pub unsafe extern "C" fn cme_uapp_eval(
    setup: *const CmeSetup,
    epsilon: f64,
    x: *const f64,
    n: usize,
    t: f64,
    out: *mut f64,
) -> CmeStatus {
    guard(|| {
        let s = setup.as_ref().ok_or_else(|| null("setup"))?;
        if x.is_null() || out.is_null() {
            return Err(null("array"));
        }
        if !(epsilon > 0.0 && epsilon <= 0.2) {
            return Err(invalid(format!("epsilon {epsilon} outside (0, 0.2]")));
        }
        let u = core(build_uapp(&s.prep.ansatz(epsilon), slice::from_raw_parts(x, n), t))?;
        write_interleaved(&u, out);
        Ok(())
    })
}

/// Number of grid points the simulation would use at `epsilon`.
///
/// # Safety
/// `setup` valid; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cme_grid_size(setup: *const CmeSetup, epsilon: f64, out: *mut usize) -> CmeStatus {
    guard(|| {
        let s = setup.as_ref().ok_or_else(|| null("setup"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = core(s.prep.config(&s.spec, epsilon))?.n;
        Ok(())
    })
}

/// Run a subcommand, writing files under `out_dir` (or the configured
/// directory when null). Returns `CME_STATUS_ACCEPTANCE` when a convergence
/// run misses its window.
///
/// # Safety
/// `cfg` valid; `out_dir` null or NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn cme_run(cfg: *const CmeConfig, command: CmeCommand, out_dir: *const c_char) -> CmeStatus {
    guard(|| {
        let c = cfg.as_ref().ok_or_else(|| null("cfg"))?;
        let mut rc = c.inner.clone();
        if !out_dir.is_null() {
            rc.out_dir = c_str(out_dir, "out_dir")?.to_string();
        }
        let cmd = match command {
            CmeCommand::Bands => Command::Bands,
            CmeCommand::Coeffs => Command::Coeffs,
            CmeCommand::Soliton => Command::Soliton,
            CmeCommand::Simulate => Command::Simulate,
            CmeCommand::Converge => Command::Converge,
        };
        let outcome = core(run(cmd, &rc))?;
        if outcome.success {
            Ok(())
        } else {
            Err((CmeStatus::Acceptance, outcome.summary))
        }
    })
}
