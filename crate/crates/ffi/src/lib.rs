//! C ABI for the `scma-ofdm` simulator.
//!
//! Every fallible function returns a [`ScmaStatus`]. On failure the message
//! is available from [`scma_last_error`] on the same thread until the next
//! failing call. Objects are opaque handles created by `*_new`/`*_preset`
//! functions and released with the matching `*_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use scma_ofdm::channel::snr_to_noise_variance;
use scma_ofdm::harness::{
    frame_rng, run_sweep, CsvSink, LinkSetup, Scenario, Stream, SweepOptions,
};
use scma_ofdm::{analysis, specfun, Error};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScmaStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    InvalidConfig = 3,
    Domain = 4,
    Io = 5,
    Panic = 6,
}

/// A simulation scenario.
pub struct ScmaScenario(Scenario);

/// A link built from a scenario, ready to simulate frames.
pub struct ScmaLink {
    setup: LinkSetup,
    overloading: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

enum Failure {
    Null(&'static str),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn status_of(e: &Error) -> ScmaStatus {
    match e {
        Error::Input(_) => ScmaStatus::InvalidInput,
        Error::Domain { .. } => ScmaStatus::Domain,
        Error::Io { .. } => ScmaStatus::Io,
        _ => ScmaStatus::InvalidConfig,
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> ScmaStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => ScmaStatus::Ok,
        Ok(Err(Failure::Null(what))) => {
            set_last_error(&format!("null pointer: {what}"));
            ScmaStatus::NullPointer
        }
        Ok(Err(Failure::Lib(e))) => {
            set_last_error(&e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_last_error("internal panic");
            ScmaStatus::Panic
        }
    }
}

unsafe fn out_ref<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or(Failure::Null(what))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &'static str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure::Lib(Error::Input(format!("{what} is not valid UTF-8"))))
}

/// Message of the last failed call on this thread; empty if none. The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn scma_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn scma_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Gamma function.
///
/// # Safety
/// `out` must be null or point to writable memory for one `double`.
#[no_mangle]
pub unsafe extern "C" fn scma_gamma(x: f64, out: *mut f64) -> ScmaStatus {
    guard(|| {
        *out_ref(out, "out")? = specfun::gamma(x)?;
        Ok(())
    })
}

/// Natural logarithm of the absolute value of the gamma function.
///
/// # Safety
/// `out` must be null or point to writable memory for one `double`.
#[no_mangle]
pub unsafe extern "C" fn scma_ln_gamma(x: f64, out: *mut f64) -> ScmaStatus {
    guard(|| {
        *out_ref(out, "out")? = specfun::ln_gamma(x)?;
        Ok(())
    })
}

/// Confluent hypergeometric function of the second kind U(a, b, x), x > 0.
///
/// # Safety
/// `out` must be null or point to writable memory for one `double`.
#[no_mangle]
pub unsafe extern "C" fn scma_kummer_u(a: f64, b: f64, x: f64, out: *mut f64) -> ScmaStatus {
    guard(|| {
        *out_ref(out, "out")? = specfun::kummer_u(a, b, x)?;
        Ok(())
    })
}

/// Whittaker function W_{kappa, mu}(z), z > 0.
///
/// # Safety
/// `out` must be null or point to writable memory for one `double`.
#[no_mangle]
pub unsafe extern "C" fn scma_whittaker_w(
    kappa: f64,
    mu: f64,
    z: f64,
    out: *mut f64,
) -> ScmaStatus {
    guard(|| {
        *out_ref(out, "out")? = specfun::whittaker_w(kappa, mu, z)?;
        Ok(())
    })
}

/// Gaussian tail probability Q(x).
#[no_mangle]
pub extern "C" fn scma_q_function(x: f64) -> f64 {
    specfun::q_function(x)
}

/// ICI power on one subcarrier of an AWGN link with `subcarriers` carriers,
/// normalized CFO `eps` and per-subcarrier transmit power `overloading`.
///
/// # Safety
/// `out` must be null or point to writable memory for one `double`.
#[no_mangle]
pub unsafe extern "C" fn scma_awgn_ici_variance(
    eps: f64,
    subcarriers: usize,
    overloading: f64,
    out: *mut f64,
) -> ScmaStatus {
    guard(|| {
        if subcarriers == 0 || !eps.is_finite() || !overloading.is_finite() {
            return Err(
                Error::Input("need subcarriers > 0 and finite eps and power".into()).into(),
            );
        }
        *out_ref(out, "out")? = analysis::awgn_ici_variance(eps, subcarriers, overloading);
        Ok(())
    })
}

/// Creates one of the built-in scenarios ("fig3", "fig4" or "fig5").
///
/// # Safety
/// `name` must be null or a NUL-terminated string; `out` must be null or
/// writable.
#[no_mangle]
pub unsafe extern "C" fn scma_scenario_preset(
    name: *const c_char,
    out: *mut *mut ScmaScenario,
) -> ScmaStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let s = Scenario::preset(str_arg(name, "name")?)?;
        *out = Box::into_raw(Box::new(ScmaScenario(s)));
        Ok(())
    })
}

/// Parses a scenario from TOML text. Relative codebook paths are resolved
/// against the working directory.
///
/// # Safety
/// `toml` must be null or a NUL-terminated string; `out` must be null or
/// writable.
#[no_mangle]
pub unsafe extern "C" fn scma_scenario_from_toml(
    toml: *const c_char,
    out: *mut *mut ScmaScenario,
) -> ScmaStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let s = Scenario::from_toml_str(str_arg(toml, "toml")?)?;
        *out = Box::into_raw(Box::new(ScmaScenario(s)));
        Ok(())
    })
}

/// Releases a scenario. Null is ignored.
///
/// # Safety
/// `scenario` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn scma_scenario_free(scenario: *mut ScmaScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// Overrides the master seed.
///
/// # Safety
/// `scenario` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn scma_scenario_set_seed(
    scenario: *mut ScmaScenario,
    seed: u64,
) -> ScmaStatus {
    guard(|| {
        out_ref(scenario, "scenario")?.0.seed = seed;
        Ok(())
    })
}

/// Overrides the per-point frame limit of simulated curves.
///
/// # Safety
/// `scenario` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn scma_scenario_set_max_frames(
    scenario: *mut ScmaScenario,
    frames: u64,
) -> ScmaStatus {
    guard(|| {
        let s = &mut out_ref(scenario, "scenario")?.0;
        let old = s.max_frames;
        s.max_frames = frames;
        if let Err(e) = s.validate() {
            s.max_frames = old;
            return Err(e.into());
        }
        Ok(())
    })
}

/// Enables or disables the wall-clock column of the output CSV.
///
/// # Safety
/// `scenario` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn scma_scenario_set_record_timing(
    scenario: *mut ScmaScenario,
    on: bool,
) -> ScmaStatus {
    guard(|| {
        out_ref(scenario, "scenario")?.0.record_timing = on;
        Ok(())
    })
}

/// Runs the full sweep and writes the CSV to `csv_path`. `workers == 0`
/// selects the default thread count.
///
/// # Safety
/// `scenario` must be null or a live handle; `csv_path` must be null or a
/// NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn scma_scenario_run(
    scenario: *const ScmaScenario,
    workers: usize,
    csv_path: *const c_char,
) -> ScmaStatus {
    guard(|| {
        let s = &scenario.as_ref().ok_or(Failure::Null("scenario"))?.0;
        let path = str_arg(csv_path, "csv_path")?;
        let file = std::fs::File::create(path).map_err(|e| Error::Io {
            path: path.into(),
            source: e,
        })?;
        let mut sink = CsvSink::new(Box::new(std::io::BufWriter::new(file)))?;
        let opts = SweepOptions {
            workers: (workers > 0).then_some(workers),
            ..SweepOptions::default()
        };
        run_sweep(s, &opts, |row| sink.write(row))?;
        Ok(())
    })
}

/// Builds the transmit/receive chain described by a scenario.
///
/// # Safety
/// `scenario` must be null or a live handle; `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn scma_link_new(
    scenario: *const ScmaScenario,
    out: *mut *mut ScmaLink,
) -> ScmaStatus {
    guard(|| {
        let s = &scenario.as_ref().ok_or(Failure::Null("scenario"))?.0;
        let out = out_ref(out, "out")?;
        let setup = LinkSetup::from_scenario(s)?;
        let overloading = setup.codebook().config().overloading();
        *out = Box::into_raw(Box::new(ScmaLink { setup, overloading }));
        Ok(())
    })
}

/// Releases a link. Null is ignored.
///
/// # Safety
/// `link` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn scma_link_free(link: *mut ScmaLink) {
    if !link.is_null() {
        drop(Box::from_raw(link));
    }
}

/// Simulates `frames` OFDM symbols at normalized CFO `eps` and `snr_db`,
/// using the frame streams `0..frames` of `seed`, and reports the total bit
/// errors and bits.
///
/// # Safety
/// `link` must be null or a live handle; `bit_errors` and `bits` must be
/// null or writable.
#[no_mangle]
pub unsafe extern "C" fn scma_link_simulate(
    link: *const ScmaLink,
    eps: f64,
    snr_db: f64,
    seed: u64,
    frames: u64,
    bit_errors: *mut u64,
    bits: *mut u64,
) -> ScmaStatus {
    guard(|| {
        let link = link.as_ref().ok_or(Failure::Null("link"))?;
        let bit_errors = out_ref(bit_errors, "bit_errors")?;
        let bits = out_ref(bits, "bits")?;
        if !(-0.5..=0.5).contains(&eps) || !snr_db.is_finite() {
            return Err(Error::Input(format!(
                "need eps in [-0.5, 0.5] and finite SNR, got {eps}, {snr_db}"
            ))
            .into());
        }
        let point = link
            .setup
            .at(eps, snr_to_noise_variance(snr_db, link.overloading))?;
        let (mut e, mut b) = (0, 0);
        for f in 0..frames {
            let out = point.simulate_frame(&mut frame_rng(seed, Stream::Scma, 0, 0, f))?;
            e += out.bit_errors;
            b += out.bits;
        }
        *bit_errors = e;
        *bits = b;
        Ok(())
    })
}
