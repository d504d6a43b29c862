//! C ABI for `gsm-gof`.
//!
//! Every function returns a [`GsmStatus`]; results go through out-pointers.
//! On failure the message is available from [`gsm_last_error`] on the same
//! thread. Regimes are opaque [`GsmRegime`] handles owned by the caller and
//! released with [`gsm_regime_free`]. Array arguments are `(pointer, length)`
//! pairs; a null pointer is accepted only with length 0.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use gsm_gof::bounds::{lower_bound_radius_sq, rate_formula, upper_bound_radius_sq, RateKind};
use gsm_gof::gsm::{simulate, PriorConstants};
use gsm_gof::montecarlo::{estimate_alpha, ExperimentPlan};
use gsm_gof::testproc::{run_test, DimensionPolicy};
use gsm_gof::{
    Error, IllPosedness, NoiseLevels, Observations, RegimeKind, RegimeSpec, Signal, Smoothness,
    TestConfig,
};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GsmStatus {
    Ok = 0,
    InvalidArgument = 1,
    NullPointer = 2,
    Overflow = 3,
    Infeasible = 4,
    Degenerate = 5,
    Domain = 6,
    Bracketing = 7,
    Panic = 99,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GsmIllPosedness {
    Mild = 0,
    Severe = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GsmSmoothness {
    Ordinary = 0,
    Super = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GsmRateKind {
    Upper = 0,
    Lower = 1,
    KnownOperator = 2,
}

/// Opaque regime handle.
pub struct GsmRegime {
    spec: RegimeSpec,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct GsmUpperBound {
    pub radius_sq: f64,
    pub argmin_d: usize,
    pub m0: usize,
    pub m0_truncated: bool,
    pub m1: usize,
    pub m1_truncated: bool,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct GsmLowerBound {
    pub radius_sq: f64,
    pub sigma_component: f64,
    pub epsilon_component: f64,
    pub m2: usize,
    pub m2_truncated: bool,
    pub k: f64,
}

/// Test outcome. The threshold fields are NaN when `degenerate` is set.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct GsmTestReport {
    pub m_hat: usize,
    pub m_truncated: bool,
    pub d_used: usize,
    pub statistic: f64,
    pub threshold: f64,
    pub noise_term: f64,
    pub deviation_term: f64,
    pub bias_term: f64,
    pub reject: bool,
    pub degenerate: bool,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct GsmErrorEstimate {
    pub p_hat: f64,
    pub se: f64,
    pub n_reps: usize,
    pub count: usize,
    pub n_degenerate: usize,
}

/// Test parameters. `d = 0` selects the adaptive dimension.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct GsmTestParams {
    pub epsilon: f64,
    pub sigma: f64,
    pub alpha: f64,
    pub beta: f64,
    pub kappa: f64,
    pub d: usize,
    pub j_max: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> GsmStatus {
    match e {
        Error::InvalidParameter { .. } | Error::InvalidLevels { .. } | Error::DegenerateGrid(_) => {
            GsmStatus::InvalidArgument
        }
        Error::Overflow { .. } => GsmStatus::Overflow,
        Error::InfeasibleConstruction(_) | Error::InfeasibleRadius { .. } => GsmStatus::Infeasible,
        Error::DegenerateObservation { .. }
        | Error::DegenerateBandwidth
        | Error::DegenerateBound { .. } => GsmStatus::Degenerate,
        Error::Domain(_) => GsmStatus::Domain,
        Error::Bracketing { .. } => GsmStatus::Bracketing,
    }
}

enum Fail {
    Lib(Error),
    Null(&'static str),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Lib(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> GsmStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => GsmStatus::Ok,
        Ok(Err(Fail::Lib(e))) => {
            set_last_error(e.to_string());
            status_of(&e)
        }
        Ok(Err(Fail::Null(name))) => {
            set_last_error(format!("null pointer passed for `{name}`"));
            GsmStatus::NullPointer
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("panic: {msg}"));
            GsmStatus::Panic
        }
    }
}

unsafe fn out<'a, T>(p: *mut T, name: &'static str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or(Fail::Null(name))
}

unsafe fn regime<'a>(h: *const GsmRegime) -> Result<&'a RegimeSpec, Fail> {
    h.as_ref().map(|r| &r.spec).ok_or(Fail::Null("regime"))
}

unsafe fn slice<'a>(p: *const f64, len: usize, name: &'static str) -> Result<&'a [f64], Fail> {
    if len == 0 {
        Ok(&[])
    } else if p.is_null() {
        Err(Fail::Null(name))
    } else {
        Ok(std::slice::from_raw_parts(p, len))
    }
}

unsafe fn slice_mut<'a>(
    p: *mut f64,
    len: usize,
    name: &'static str,
) -> Result<&'a mut [f64], Fail> {
    if len == 0 {
        Ok(&mut [])
    } else if p.is_null() {
        Err(Fail::Null(name))
    } else {
        Ok(std::slice::from_raw_parts_mut(p, len))
    }
}

fn config(p: &GsmTestParams) -> TestConfig {
    TestConfig {
        alpha: p.alpha,
        beta: p.beta,
        kappa: p.kappa,
        dimension: if p.d == 0 {
            DimensionPolicy::Adaptive
        } else {
            DimensionPolicy::Fixed(p.d)
        },
        j_max: p.j_max,
    }
}

/// Message of the last failed call on this thread, or null. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn gsm_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn gsm_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

#[no_mangle]
pub unsafe extern "C" fn gsm_regime_new(
    b_kind: GsmIllPosedness,
    a_kind: GsmSmoothness,
    t: f64,
    s: f64,
    c_b: f64,
    c_a: f64,
    out_handle: *mut *mut GsmRegime,
) -> GsmStatus {
    guard(|| {
        let slot = out(out_handle, "out_handle")?;
        let b = match b_kind {
            GsmIllPosedness::Mild => IllPosedness::Mild,
            GsmIllPosedness::Severe => IllPosedness::Severe,
        };
        let a = match a_kind {
            GsmSmoothness::Ordinary => Smoothness::Ordinary,
            GsmSmoothness::Super => Smoothness::Super,
        };
        let spec = RegimeSpec::with_constants(b, a, t, s, c_b, c_a)?;
        *slot = Box::into_raw(Box::new(GsmRegime { spec }));
        Ok(())
    })
}

/// Regime from a label such as `"severe-super"`, with unit constants.
#[no_mangle]
pub unsafe extern "C" fn gsm_regime_parse(
    label: *const c_char,
    t: f64,
    s: f64,
    out_handle: *mut *mut GsmRegime,
) -> GsmStatus {
    guard(|| {
        let slot = out(out_handle, "out_handle")?;
        if label.is_null() {
            return Err(Fail::Null("label"));
        }
        let text = CStr::from_ptr(label).to_string_lossy();
        let spec = text.parse::<RegimeKind>()?.with_exponents(t, s)?;
        *slot = Box::into_raw(Box::new(GsmRegime { spec }));
        Ok(())
    })
}

/// Releases a handle; null is a no-op.
#[no_mangle]
pub unsafe extern "C" fn gsm_regime_free(handle: *mut GsmRegime) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// `b_j`, `j >= 1`.
#[no_mangle]
pub unsafe extern "C" fn gsm_regime_b(
    handle: *const GsmRegime,
    j: usize,
    out_value: *mut f64,
) -> GsmStatus {
    guard(|| {
        let spec = regime(handle)?;
        let slot = out(out_value, "out_value")?;
        if j == 0 {
            return Err(Error::InvalidParameter {
                name: "j",
                reason: "indices start at 1".into(),
            }
            .into());
        }
        *slot = spec.b_value(j);
        Ok(())
    })
}

/// `a_j`, `j >= 1`.
#[no_mangle]
pub unsafe extern "C" fn gsm_regime_a(
    handle: *const GsmRegime,
    j: usize,
    out_value: *mut f64,
) -> GsmStatus {
    guard(|| {
        let spec = regime(handle)?;
        let slot = out(out_value, "out_value")?;
        if j == 0 {
            return Err(Error::InvalidParameter {
                name: "j",
                reason: "indices start at 1".into(),
            }
            .into());
        }
        *slot = spec.a_value(j);
        Ok(())
    })
}

/// `Σ_{j<=d} b_j^{-4}`.
#[no_mangle]
pub unsafe extern "C" fn gsm_regime_cumulative_b_inv4(
    handle: *const GsmRegime,
    d: usize,
    out_value: *mut f64,
) -> GsmStatus {
    guard(|| {
        let spec = regime(handle)?;
        let slot = out(out_value, "out_value")?;
        *slot = spec.cumulative_b_inv4(d)?;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn gsm_upper_bound(
    handle: *const GsmRegime,
    epsilon: f64,
    sigma: f64,
    alpha: f64,
    beta: f64,
    kappa: f64,
    j_max: usize,
    out_bound: *mut GsmUpperBound,
) -> GsmStatus {
    guard(|| {
        let spec = regime(handle)?;
        let slot = out(out_bound, "out_bound")?;
        let u = upper_bound_radius_sq(spec, epsilon, sigma, alpha, beta, kappa, j_max)?;
        *slot = GsmUpperBound {
            radius_sq: u.value,
            argmin_d: u.argmin_d,
            m0: u.bandwidths.m0.value,
            m0_truncated: u.bandwidths.m0.truncated,
            m1: u.bandwidths.m1.value,
            m1_truncated: u.bandwidths.m1.truncated,
        };
        Ok(())
    })
}

/// Lower bound with the default prior constants `C₀ = 1/2`, `C₁ = 2`.
#[no_mangle]
pub unsafe extern "C" fn gsm_lower_bound(
    handle: *const GsmRegime,
    epsilon: f64,
    sigma: f64,
    alpha: f64,
    beta: f64,
    j_max: usize,
    out_bound: *mut GsmLowerBound,
) -> GsmStatus {
    guard(|| {
        let spec = regime(handle)?;
        let slot = out(out_bound, "out_bound")?;
        let l = lower_bound_radius_sq(
            spec,
            epsilon,
            sigma,
            alpha,
            beta,
            j_max,
            PriorConstants::default(),
        )?;
        *slot = GsmLowerBound {
            radius_sq: l.value,
            sigma_component: l.sigma_component,
            epsilon_component: l.epsilon_component,
            m2: l.m2,
            m2_truncated: l.m2_truncated,
            k: l.k,
        };
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn gsm_rate(
    handle: *const GsmRegime,
    epsilon: f64,
    sigma: f64,
    kind: GsmRateKind,
    out_value: *mut f64,
) -> GsmStatus {
    guard(|| {
        let spec = regime(handle)?;
        let slot = out(out_value, "out_value")?;
        let which = match kind {
            GsmRateKind::Upper => RateKind::Upper,
            GsmRateKind::Lower => RateKind::Lower,
            GsmRateKind::KnownOperator => RateKind::KnownOperator,
        };
        *slot = rate_formula(spec, epsilon, sigma, which)?;
        Ok(())
    })
}

/// Fills `y_out[0..j_max]` and `x_out[0..j_max]` with one draw of the model.
#[no_mangle]
pub unsafe extern "C" fn gsm_simulate(
    handle: *const GsmRegime,
    theta: *const f64,
    theta_len: usize,
    epsilon: f64,
    sigma: f64,
    seed: u64,
    j_max: usize,
    y_out: *mut f64,
    x_out: *mut f64,
) -> GsmStatus {
    guard(|| {
        let spec = regime(handle)?;
        let theta = Signal::new(slice(theta, theta_len, "theta")?.to_vec())?;
        let y = slice_mut(y_out, j_max, "y_out")?;
        let x = slice_mut(x_out, j_max, "x_out")?;
        let obs = simulate(&theta, spec, NoiseLevels::new(epsilon, sigma)?, seed, j_max)?;
        y.copy_from_slice(&obs.y);
        x.copy_from_slice(&obs.x);
        Ok(())
    })
}

/// Runs the test on observations of length `len >= params.j_max`.
#[no_mangle]
pub unsafe extern "C" fn gsm_run_test(
    handle: *const GsmRegime,
    y: *const f64,
    x: *const f64,
    len: usize,
    theta0: *const f64,
    theta0_len: usize,
    params: *const GsmTestParams,
    out_report: *mut GsmTestReport,
) -> GsmStatus {
    guard(|| {
        let spec = regime(handle)?;
        let p = params.as_ref().ok_or(Fail::Null("params"))?;
        let slot = out(out_report, "out_report")?;
        let obs = Observations::new(slice(y, len, "y")?.to_vec(), slice(x, len, "x")?.to_vec())?;
        let theta0 = Signal::new(slice(theta0, theta0_len, "theta0")?.to_vec())?;
        let r = run_test(
            &obs,
            &theta0,
            spec,
            NoiseLevels::new(p.epsilon, p.sigma)?,
            &config(p),
        )?;
        let th = r.threshold;
        *slot = GsmTestReport {
            m_hat: r.m_hat,
            m_truncated: r.m_truncated,
            d_used: r.d_used,
            statistic: r.statistic,
            threshold: th.map_or(f64::NAN, |t| t.value),
            noise_term: th.map_or(f64::NAN, |t| t.noise_term),
            deviation_term: th.map_or(f64::NAN, |t| t.deviation_term),
            bias_term: th.map_or(f64::NAN, |t| t.bias_term),
            reject: r.reject,
            degenerate: r.degenerate,
        };
        Ok(())
    })
}

/// Monte Carlo first-kind error. `workers = 0` uses all logical CPUs.
#[no_mangle]
pub unsafe extern "C" fn gsm_estimate_alpha(
    handle: *const GsmRegime,
    theta0: *const f64,
    theta0_len: usize,
    params: *const GsmTestParams,
    n_reps: usize,
    seed: u64,
    workers: usize,
    out_estimate: *mut GsmErrorEstimate,
) -> GsmStatus {
    guard(|| {
        let spec = regime(handle)?;
        let p = params.as_ref().ok_or(Fail::Null("params"))?;
        let slot = out(out_estimate, "out_estimate")?;
        let theta0 = Signal::new(slice(theta0, theta0_len, "theta0")?.to_vec())?;
        let mut plan = ExperimentPlan::new(
            *spec,
            NoiseLevels::new(p.epsilon, p.sigma)?,
            config(p),
            theta0,
            n_reps,
            seed,
        );
        if workers > 0 {
            plan.workers = Some(workers);
        }
        let e = estimate_alpha(&plan)?;
        *slot = GsmErrorEstimate {
            p_hat: e.p_hat,
            se: e.se,
            n_reps: e.n_reps,
            count: e.count,
            n_degenerate: e.n_degenerate,
        };
        Ok(())
    })
}
