use std::ffi::{CStr, CString};
use std::ptr;

use gsm_gof_ffi::*;

fn mild_ordinary() -> *mut GsmRegime {
    let mut h = ptr::null_mut();
    let st = unsafe {
        gsm_regime_new(
            GsmIllPosedness::Mild,
            GsmSmoothness::Ordinary,
            1.0,
            1.0,
            1.0,
            1.0,
            &mut h,
        )
    };
    assert_eq!(st, GsmStatus::Ok);
    assert!(!h.is_null());
    h
}

fn last_error() -> String {
    let p = gsm_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn params(j_max: usize) -> GsmTestParams {
    GsmTestParams {
        epsilon: 1e-3,
        sigma: 1e-3,
        alpha: 0.05,
        beta: 0.5,
        kappa: 5.0 * (3.0 * std::f64::consts::PI.powi(2) + 12.0) / 6.0,
        d: 0,
        j_max,
    }
}

#[test]
fn sequences_through_handle() {
    let h = mild_ordinary();
    let mut v = 0.0;
    unsafe {
        assert_eq!(gsm_regime_b(h, 2, &mut v), GsmStatus::Ok);
        assert_eq!(v, 0.5);
        assert_eq!(gsm_regime_a(h, 3, &mut v), GsmStatus::Ok);
        assert_eq!(v, 3.0);
        assert_eq!(gsm_regime_cumulative_b_inv4(h, 3, &mut v), GsmStatus::Ok);
        assert!((v - 98.0).abs() < 1e-12 * 98.0);
        assert_eq!(gsm_regime_b(h, 0, &mut v), GsmStatus::InvalidArgument);
        assert!(last_error().contains("`j`"));
        gsm_regime_free(h);
    }
}

#[test]
fn parse_and_errors() {
    let label = CString::new("severe/super").unwrap();
    let bad = CString::new("gentle-ordinary").unwrap();
    let mut h = ptr::null_mut();
    unsafe {
        assert_eq!(
            gsm_regime_parse(label.as_ptr(), 1.0, 1.0, &mut h),
            GsmStatus::Ok
        );
        let mut v = 0.0;
        assert_eq!(
            gsm_regime_cumulative_b_inv4(h, 200, &mut v),
            GsmStatus::Overflow
        );
        assert_eq!(
            gsm_rate(h, 0.01, 1.5, GsmRateKind::Upper, &mut v),
            GsmStatus::Domain
        );
        gsm_regime_free(h);

        let mut h2 = ptr::null_mut();
        assert_eq!(
            gsm_regime_parse(bad.as_ptr(), 1.0, 1.0, &mut h2),
            GsmStatus::InvalidArgument
        );
        assert!(h2.is_null());
        assert!(last_error().contains("regime"));
        assert_eq!(
            gsm_regime_parse(ptr::null(), 1.0, 1.0, &mut h2),
            GsmStatus::NullPointer
        );
        assert_eq!(gsm_regime_b(ptr::null(), 1, &mut v), GsmStatus::NullPointer);
        gsm_regime_free(ptr::null_mut());
    }
}

#[test]
fn bounds_match_core() {
    let h = mild_ordinary();
    let spec = gsm_gof::RegimeSpec::new(
        gsm_gof::IllPosedness::Mild,
        gsm_gof::Smoothness::Ordinary,
        1.0,
        1.0,
    )
    .unwrap();
    let p = params(10_000);
    let mut up = GsmUpperBound::default();
    let mut lo = GsmLowerBound::default();
    let mut rate = 0.0;
    unsafe {
        assert_eq!(
            gsm_upper_bound(h, 1e-2, 0.9, 0.05, 0.5, p.kappa, 10_000, &mut up),
            GsmStatus::Degenerate
        );
        assert_eq!(
            gsm_upper_bound(h, 1e-3, 1e-3, 0.05, 0.5, p.kappa, 10_000, &mut up),
            GsmStatus::Ok
        );
        assert_eq!(
            gsm_lower_bound(h, 1e-3, 1e-3, 0.05, 0.5, 10_000, &mut lo),
            GsmStatus::Ok
        );
        assert_eq!(
            gsm_rate(h, 0.01, 0.01, GsmRateKind::KnownOperator, &mut rate),
            GsmStatus::Ok
        );
        gsm_regime_free(h);
    }
    let core =
        gsm_gof::bounds::upper_bound_radius_sq(&spec, 1e-3, 1e-3, 0.05, 0.5, p.kappa, 10_000)
            .unwrap();
    assert_eq!((up.m0, up.m1), (15, 18));
    assert_eq!(lo.radius_sq, lo.sigma_component.max(lo.epsilon_component));
    assert_eq!(up.radius_sq, core.value);
    assert!(up.radius_sq >= lo.radius_sq);
    assert!((rate - 0.01f64.powf(8.0 / 9.0)).abs() < 1e-15);
}

#[test]
fn simulate_then_test() {
    let h = mild_ordinary();
    let p = params(500);
    let theta0 = [0.3, 0.1];
    let mut y = vec![0.0; 500];
    let mut x = vec![0.0; 500];
    let mut report = GsmTestReport::default();
    unsafe {
        let st = gsm_simulate(
            h,
            theta0.as_ptr(),
            2,
            p.epsilon,
            p.sigma,
            9,
            500,
            y.as_mut_ptr(),
            x.as_mut_ptr(),
        );
        assert_eq!(st, GsmStatus::Ok);
        let st = gsm_run_test(
            h,
            y.as_ptr(),
            x.as_ptr(),
            500,
            theta0.as_ptr(),
            2,
            &p,
            &mut report,
        );
        assert_eq!(st, GsmStatus::Ok);
        assert_eq!(
            gsm_simulate(
                h,
                ptr::null(),
                3,
                0.1,
                0.1,
                1,
                10,
                y.as_mut_ptr(),
                x.as_mut_ptr()
            ),
            GsmStatus::NullPointer
        );
        gsm_regime_free(h);
    }
    assert!(!report.degenerate);
    assert!(!report.reject);
    assert!(report.statistic < report.threshold);
    assert!(report.m_hat >= 15 && report.m_hat < 18);
}

#[test]
fn alpha_estimate_is_worker_invariant() {
    let h = mild_ordinary();
    let mut p = params(2000);
    p.epsilon = 0.05;
    p.sigma = 0.01;
    let theta0 = [0.3];
    let mut a = GsmErrorEstimate::default();
    let mut b = GsmErrorEstimate::default();
    unsafe {
        assert_eq!(
            gsm_estimate_alpha(h, theta0.as_ptr(), 1, &p, 200, 3, 1, &mut a),
            GsmStatus::Ok
        );
        assert_eq!(
            gsm_estimate_alpha(h, theta0.as_ptr(), 1, &p, 200, 3, 4, &mut b),
            GsmStatus::Ok
        );
        assert_eq!(
            gsm_estimate_alpha(h, theta0.as_ptr(), 1, &p, 10, 3, 1, &mut b),
            GsmStatus::InvalidArgument
        );
        gsm_regime_free(h);
    }
    assert_eq!(a.count, b.count);
    assert_eq!(a.n_reps, 200);
}

#[test]
fn header_declares_every_export() {
    let header =
        std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/gsm_gof.h")).unwrap();
    for name in [
        "typedef struct GsmRegime GsmRegime",
        "GSM_STATUS_OK",
        "GSM_STATUS_NULL_POINTER",
        "gsm_last_error",
        "gsm_version",
        "gsm_regime_new",
        "gsm_regime_parse",
        "gsm_regime_free",
        "gsm_regime_b",
        "gsm_regime_a",
        "gsm_regime_cumulative_b_inv4",
        "gsm_upper_bound",
        "gsm_lower_bound",
        "gsm_rate",
        "gsm_simulate",
        "gsm_run_test",
        "gsm_estimate_alpha",
        "GsmTestReport",
    ] {
        assert!(header.contains(name), "header lacks {name}");
    }
    let v = unsafe { CStr::from_ptr(gsm_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}
