use std::ffi::CString;
use std::f64::consts::PI;
use std::ptr;

use eigencrofton_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0 as std::ffi::c_char; 256];
    let n = unsafe { ec_last_error_message(buf.as_mut_ptr(), buf.len()) };
    let s = unsafe { std::ffi::CStr::from_ptr(buf.as_ptr()) }.to_string_lossy().into_owned();
    assert!(n >= s.len());
    s
}

#[test]
fn torus_basis_round_trip() {
    let mut b: *mut EcBasis = ptr::null_mut();
    let st = unsafe { ec_basis_torus_new(2.0 * PI, PI, 1, 1, 0, &mut b) };
    assert_eq!(st, EcStatus::Ok);
    unsafe {
        assert_eq!(ec_basis_dim(b), 4);
        assert!((ec_basis_lambda(b) - 5.0).abs() < 1e-12);

        let mut vals = [0.0; 4];
        let p = [0.3, 1.1];
        assert_eq!(ec_basis_eval(b, p.as_ptr(), 2, vals.as_mut_ptr(), 4), EcStatus::Ok);
        let sum: f64 = vals.iter().map(|v| v * v).sum();
        assert!((sum - 4.0 / (2.0 * PI * PI)).abs() < 1e-12);

        let (mut pred, mut bound) = (0.0, 0.0);
        assert_eq!(ec_predicted_average(b, &mut pred), EcStatus::Ok);
        assert_eq!(ec_weyl_bound(b, &mut bound), EcStatus::Ok);
        assert!((pred - 2.0 * PI).abs() < 1e-9);
        assert!((bound - 2.5 * PI).abs() < 1e-9);

        let mut r = std::mem::zeroed::<EcReport>();
        assert_eq!(ec_run_zero_average(b, 300, 9, 2, &mut r), EcStatus::Ok);
        assert_eq!(r.trials, 300);
        assert!((r.estimate - 2.0 * PI).abs() < 4.0 * r.std_error + 1e-9);
        ec_basis_free(b);
    }
}

#[test]
fn errors_are_reported() {
    let mut b: *mut EcBasis = ptr::null_mut();
    let st = unsafe { ec_basis_torus_new(2.0 * PI, 2.0 * PI, 2, 2, 0, ptr::null_mut()) };
    assert_eq!(st, EcStatus::NullPointer);
    assert!(last_error().contains("null"));
    let st = unsafe { ec_basis_sphere2_new(0, &mut b) };
    assert_eq!(st, EcStatus::InvalidArgument);
    assert!(b.is_null());
    assert!(!last_error().is_empty());
    let st = unsafe { ec_basis_torus_new(2.0 * PI, 2.0 * PI, 1, 1, 7, &mut b) };
    assert_eq!(st, EcStatus::InvalidArgument);
    let st = unsafe { ec_basis_torus_new(5.0, 5.0, 3, 4, 2, &mut b) };
    assert_eq!(st, EcStatus::EigenvalueCollision);

    unsafe {
        assert_eq!(ec_basis_dim(ptr::null()), 0);
        assert!(ec_basis_lambda(ptr::null()).is_nan());
        let mut x = 0.0;
        assert_eq!(ec_weyl_bound(ptr::null(), &mut x), EcStatus::NullPointer);
        ec_basis_free(ptr::null_mut());
        ec_mesh_free(ptr::null_mut());
    }
}

#[test]
fn sphere_eval_checks_input() {
    let mut b: *mut EcBasis = ptr::null_mut();
    unsafe {
        assert_eq!(ec_basis_sphere2_new(2, &mut b), EcStatus::Ok);
        let mut vals = [0.0; 5];
        let bad = [1.0, 1.0, 0.0];
        assert_eq!(ec_basis_eval(b, bad.as_ptr(), 3, vals.as_mut_ptr(), 5), EcStatus::InvalidArgument);
        let good = [0.0, 0.6, 0.8];
        assert_eq!(ec_basis_eval(b, good.as_ptr(), 2, vals.as_mut_ptr(), 5), EcStatus::InvalidArgument);
        assert_eq!(ec_basis_eval(b, good.as_ptr(), 3, vals.as_mut_ptr(), 4), EcStatus::InvalidArgument);
        assert_eq!(ec_basis_eval(b, good.as_ptr(), 3, vals.as_mut_ptr(), 5), EcStatus::Ok);
        let sum: f64 = vals.iter().map(|v| v * v).sum();
        assert!((sum - 5.0 / (4.0 * PI)).abs() < 1e-12);
        ec_basis_free(b);
    }
}

#[test]
fn crofton_on_mesh_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("gc.mesh");
    eigencrofton::crofton::great_circle_mesh(32).unwrap().write(&path).unwrap();
    let c = CString::new(path.to_str().unwrap()).unwrap();
    let mut m: *mut EcMesh = ptr::null_mut();
    unsafe {
        assert_eq!(ec_mesh_read(c.as_ptr(), &mut m), EcStatus::Ok);
        assert!((ec_mesh_volume(m) - 2.0 * PI).abs() < 1e-12);
        let mut r = std::mem::zeroed::<EcReport>();
        assert_eq!(ec_crofton_average(m, 500, 1, 1, &mut r), EcStatus::Ok);
        assert_eq!(r.estimate, 2.0);
        assert_eq!(r.verdict, EcVerdict::EqualityConfirmed);
        ec_mesh_free(m);

        let missing = CString::new(dir.path().join("nope.mesh").to_str().unwrap()).unwrap();
        assert_eq!(ec_mesh_read(missing.as_ptr(), &mut m), EcStatus::Io);
    }
}

#[test]
fn version_is_nul_terminated() {
    let v = unsafe { std::ffi::CStr::from_ptr(ec_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}
