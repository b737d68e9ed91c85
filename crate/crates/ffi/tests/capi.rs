use std::ffi::{CStr, CString};
use std::ptr;

use isoflow::sample::{random_jacobi, Rng64};
use isoflow::{flows, invspec, DenseMatrix, FlowFunction};
use isoflow_ffi::*;

fn last_error() -> String {
    let p = isoflow_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn new_matrix(n: usize, data: &[f64]) -> *mut IsoMatrix {
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { isoflow_matrix_new(n, data.as_ptr(), &mut m) }, IsoStatus::Ok);
    m
}

fn read(m: *const IsoMatrix) -> Vec<f64> {
    let n = unsafe { isoflow_matrix_dim(m) };
    let mut buf = vec![0.0; n * n];
    assert_eq!(unsafe { isoflow_matrix_read(m, buf.as_mut_ptr(), buf.len()) }, IsoStatus::Ok);
    buf
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn symes_matches_core_and_integrator() {
    let data = [2.0, 1.0, 0.0, 1.0, 3.0, -0.5, 0.0, -0.5, 1.0];
    let m = new_matrix(3, &data);
    let f = CString::new("poly:0,1,0.5").unwrap();
    let (mut s, mut q) = (ptr::null_mut(), ptr::null_mut());
    unsafe {
        assert_eq!(isoflow_symes_solve(m, f.as_ptr(), 1.5, &mut s), IsoStatus::Ok);
        assert_eq!(isoflow_integrate(m, f.as_ptr(), 1.5, 1e-11, &mut q), IsoStatus::Ok);
    }
    let core = flows::symes_solve(
        &DenseMatrix::from_row_major(3, data.to_vec()).unwrap(),
        &FlowFunction::polynomial(vec![0.0, 1.0, 0.5]).unwrap(),
        1.5,
    )
    .unwrap();
    assert!(max_diff(&read(s), core.as_slice()) < 1e-14);
    assert!(max_diff(&read(s), &read(q)) < 1e-8);

    let mut ev0 = [0.0; 3];
    let mut ev1 = [0.0; 3];
    unsafe {
        assert_eq!(isoflow_eigenvalues(m, ev0.as_mut_ptr()), IsoStatus::Ok);
        assert_eq!(isoflow_eigenvalues(s, ev1.as_mut_ptr()), IsoStatus::Ok);
        isoflow_matrix_free(s);
        isoflow_matrix_free(q);
        isoflow_matrix_free(m);
    }
    assert!(max_diff(&ev0, &ev1) < 1e-10);
}

#[test]
fn bad_function_and_buffer_errors() {
    let m = new_matrix(2, &[1.0, 0.0, 0.0, -1.0]);
    let mut s = ptr::null_mut();
    let log = CString::new("log").unwrap();
    let junk = CString::new("sin").unwrap();
    unsafe {
        assert_eq!(isoflow_symes_solve(m, log.as_ptr(), 1.0, &mut s), IsoStatus::Domain);
        assert!(s.is_null());
        assert_eq!(isoflow_symes_solve(m, junk.as_ptr(), 1.0, &mut s), IsoStatus::InvalidInput);
        assert!(last_error().contains("sin"));
        let mut small = [0.0; 3];
        assert_eq!(isoflow_matrix_read(m, small.as_mut_ptr(), 3), IsoStatus::InvalidInput);
        assert_eq!(isoflow_symes_solve(m, ptr::null(), 1.0, &mut s), IsoStatus::NullPointer);
        isoflow_matrix_free(m);
    }
}

#[test]
fn spectral_roundtrip() {
    let mut rng = Rng64::seeded(7);
    for _ in 0..20 {
        let j = random_jacobi(&mut rng, 6);
        let n = j.dim();
        let (mut l, mut v) = (vec![0.0; n], vec![0.0; n]);
        let (mut a, mut b) = (vec![0.0; n], vec![0.0; n - 1]);
        unsafe {
            assert_eq!(
                isoflow_norming_constants(j.a().as_ptr(), j.b().as_ptr(), n, l.as_mut_ptr(), v.as_mut_ptr()),
                IsoStatus::Ok
            );
            assert_eq!(
                isoflow_reconstruct(l.as_ptr(), v.as_ptr(), n, a.as_mut_ptr(), b.as_mut_ptr()),
                IsoStatus::Ok
            );
        }
        let sd = invspec::norming_constants(&j).unwrap();
        assert_eq!(sd.lambdas(), &l[..]);
        assert!(max_diff(&a, j.a()) < 1e-10);
        assert!(max_diff(&b, j.b()) < 1e-10);
    }
}

#[test]
fn chart_roundtrip() {
    let mut rng = Rng64::seeded(11);
    let j = random_jacobi(&mut rng, 4);
    let mut inside = 0;
    for pi in isoflow::atlas::all_permutations(4) {
        let (mut l, mut beta) = (vec![0.0; 4], vec![0.0; 3]);
        let (mut a, mut b) = (vec![0.0; 4], vec![0.0; 3]);
        let st = unsafe {
            isoflow_to_chart(j.a().as_ptr(), j.b().as_ptr(), 4, pi.as_ptr(), l.as_mut_ptr(), beta.as_mut_ptr())
        };
        if st == IsoStatus::NotInDomain {
            continue;
        }
        assert_eq!(st, IsoStatus::Ok, "{pi:?}: {}", last_error());
        inside += 1;
        let st = unsafe { isoflow_from_chart(l.as_ptr(), pi.as_ptr(), beta.as_ptr(), 4, a.as_mut_ptr(), b.as_mut_ptr()) };
        assert_eq!(st, IsoStatus::Ok);
        assert!(max_diff(&a, j.a()) < 1e-9, "{pi:?}");
        assert!(max_diff(&b, j.b()) < 1e-9, "{pi:?}");
    }
    assert!(inside > 0);

    let bad = [0usize, 0, 1, 2];
    let (mut l, mut beta) = (vec![0.0; 4], vec![0.0; 3]);
    let st = unsafe {
        isoflow_to_chart(j.a().as_ptr(), j.b().as_ptr(), 4, bad.as_ptr(), l.as_mut_ptr(), beta.as_mut_ptr())
    };
    assert_eq!(st, IsoStatus::InvalidInput);
}

#[test]
fn qr_iteration_finds_spectrum() {
    let a = [1.0, 2.0, 3.0, 4.0];
    let b = [1.0, 1.0, 1.0];
    let mut ev = [0.0; 4];
    let mut steps = 0usize;
    let mut converged = false;
    let strategy = CString::new("wilkinson").unwrap();
    let st = unsafe {
        isoflow_qr_iterate(
            a.as_ptr(),
            b.as_ptr(),
            4,
            strategy.as_ptr(),
            1e-14,
            200,
            ev.as_mut_ptr(),
            &mut steps,
            &mut converged,
        )
    };
    assert_eq!(st, IsoStatus::Ok);
    assert!(converged && steps > 0 && steps <= 200);
    let dense = DenseMatrix::from_rows(&[
        [1.0, 1.0, 0.0, 0.0],
        [1.0, 2.0, 1.0, 0.0],
        [0.0, 1.0, 3.0, 1.0],
        [0.0, 0.0, 1.0, 4.0],
    ]);
    let exact = isoflow::linalg::symmetric_eigenvalues(&dense).unwrap();
    assert!(max_diff(&ev, &exact) < 1e-12);
}

#[test]
fn billiard_methods_agree() {
    let c = [2.0, 0.0, 0.0, 1.0];
    let mut e = ptr::null_mut();
    assert_eq!(unsafe { isoflow_ellipsoid_new(2, c.as_ptr(), &mut e) }, IsoStatus::Ok);
    let x = [2.0, 0.0];
    let s = 0.5f64.sqrt();
    let y = [-s, s];
    let (mut xg, mut yg) = ([0.0; 2], [0.0; 2]);
    let (mut xm, mut ym) = ([0.0; 2], [0.0; 2]);
    unsafe {
        let g = IsoStepMethod::Geometric;
        let mv = IsoStepMethod::MoserVeselov;
        assert_eq!(isoflow_billiard_step(e, g, x.as_ptr(), y.as_ptr(), xg.as_mut_ptr(), yg.as_mut_ptr()), IsoStatus::Ok);
        assert_eq!(isoflow_billiard_step(e, mv, x.as_ptr(), y.as_ptr(), xm.as_mut_ptr(), ym.as_mut_ptr()), IsoStatus::Ok);
    }
    assert!(max_diff(&xg, &xm) < 1e-10 && max_diff(&yg, &ym) < 1e-10);
    assert!((xg[0] * xg[0] / 4.0 + xg[1] * xg[1] - 1.0).abs() < 1e-10);

    let outward = [1.0, 0.0];
    let st = unsafe {
        isoflow_billiard_step(e, IsoStepMethod::Geometric, x.as_ptr(), outward.as_ptr(), xg.as_mut_ptr(), yg.as_mut_ptr())
    };
    assert_eq!(st, IsoStatus::InvalidInput);
    unsafe { isoflow_ellipsoid_free(e) };

    let not_spd = [1.0, 0.0, 0.0, -1.0];
    let mut e2 = ptr::null_mut();
    assert_eq!(unsafe { isoflow_ellipsoid_new(2, not_spd.as_ptr(), &mut e2) }, IsoStatus::InvalidInput);
    assert!(e2.is_null());
}
