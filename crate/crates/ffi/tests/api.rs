use std::ffi::{CStr, CString};
use std::ptr;

use pnp_dg_ffi::*;

fn last_error() -> String {
    let p = pnp_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn scenario(name: &str) -> *mut PnpSolver {
    let name = CString::new(name).unwrap();
    let mut s = ptr::null_mut();
    assert_eq!(
        unsafe { pnp_solver_from_scenario(name.as_ptr(), &mut s) },
        PnpStatus::Ok
    );
    assert!(!s.is_null());
    s
}

fn coarse_json() -> CString {
    let mut cfg = pnp_dg::scenario::builtin_scenario("example2").unwrap();
    cfg.cells = 10;
    cfg.degree = 1;
    cfg.flux = None;
    cfg.time.mu = 0.05;
    cfg.time.final_time = 0.01;
    CString::new(cfg.to_json().unwrap()).unwrap()
}

#[test]
fn shape_and_coefficients() {
    let s = scenario("example2");
    let (mut m, mut n, mut k) = (0usize, 0usize, 0usize);
    unsafe {
        assert_eq!(pnp_solver_shape(s, &mut m, &mut n, &mut k), PnpStatus::Ok);
        assert_eq!((m, n, k), (2, 100, 2));
        let mut buf = vec![0.0; n * (k + 1)];
        assert_eq!(
            pnp_solver_concentration(s, 1, buf.as_mut_ptr(), buf.len()),
            PnpStatus::Ok
        );
        // c2 = 4 - 2x has average 4 - 2 x_j on cell j
        assert!((buf[0] - (4.0 - 2.0 * 0.005)).abs() < 1e-13);
        assert_eq!(
            pnp_solver_concentration(s, 1, buf.as_mut_ptr(), buf.len() - 1),
            PnpStatus::BufferTooSmall
        );
        assert!(last_error().contains("needed"));
        assert_eq!(
            pnp_solver_concentration(s, 2, buf.as_mut_ptr(), buf.len()),
            PnpStatus::OutOfRange
        );
        pnp_solver_free(s);
    }
}

#[test]
fn json_solver_runs_and_conserves_mass() {
    let json = coarse_json();
    let mut s = ptr::null_mut();
    unsafe {
        assert_eq!(pnp_solver_from_json(json.as_ptr(), &mut s), PnpStatus::Ok);
        let mut m0 = 0.0;
        let mut f0 = 0.0;
        assert_eq!(pnp_solver_mass(s, 0, &mut m0), PnpStatus::Ok);
        assert_eq!(pnp_solver_free_energy(s, &mut f0), PnpStatus::Ok);
        assert_eq!(pnp_solver_run(s), PnpStatus::Ok);
        let (mut t, mut steps) = (0.0, 0usize);
        assert_eq!(pnp_solver_time(s, &mut t, &mut steps), PnpStatus::Ok);
        assert_eq!(t, 0.01);
        assert_eq!(steps, 20);
        let (mut m1, mut f1) = (0.0, 0.0);
        pnp_solver_mass(s, 0, &mut m1);
        pnp_solver_free_energy(s, &mut f1);
        assert!(((m1 - m0) / m0).abs() < 1e-12);
        assert!(f1 < f0);
        let mut psi = vec![0.0; 20];
        assert_eq!(pnp_solver_potential(s, psi.as_mut_ptr(), psi.len()), PnpStatus::Ok);
        assert!(psi.iter().all(|v| v.is_finite()));
        assert_eq!(pnp_solver_advance_to(s, 0.0), PnpStatus::OutOfRange);
        pnp_solver_free(s);
    }
}

#[test]
fn step_count_matches_time_step() {
    let json = coarse_json();
    let mut s = ptr::null_mut();
    unsafe {
        pnp_solver_from_json(json.as_ptr(), &mut s);
        assert_eq!(pnp_solver_step(s, 3), PnpStatus::Ok);
        let (mut t, mut steps) = (0.0, 0usize);
        pnp_solver_time(s, &mut t, &mut steps);
        assert_eq!(steps, 3);
        assert!((t - 3.0 * 0.05 * 0.01).abs() < 1e-15);
        pnp_solver_free(s);
    }
}

#[test]
fn errors_are_reported() {
    let mut s = ptr::null_mut();
    let bad = CString::new("example9").unwrap();
    unsafe {
        assert_eq!(pnp_solver_from_scenario(bad.as_ptr(), &mut s), PnpStatus::Config);
        assert!(s.is_null());
        assert!(last_error().contains("example9"));
        let json = CString::new("{\"name\": 1}").unwrap();
        assert_eq!(pnp_solver_from_json(json.as_ptr(), &mut s), PnpStatus::Config);
        assert_eq!(pnp_solver_from_scenario(ptr::null(), &mut s), PnpStatus::NullPointer);
        assert_eq!(pnp_solver_step(ptr::null_mut(), 1), PnpStatus::NullPointer);
        let invalid = [0xffu8, 0];
        assert_eq!(
            pnp_solver_from_scenario(invalid.as_ptr().cast(), &mut s),
            PnpStatus::InvalidUtf8
        );
        pnp_solver_free(ptr::null_mut());
    }
}

#[test]
fn static_strings() {
    let ok = unsafe { CStr::from_ptr(pnp_status_string(PnpStatus::Ok)) };
    assert_eq!(ok.to_str().unwrap(), "ok");
    let v = unsafe { CStr::from_ptr(pnp_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}
