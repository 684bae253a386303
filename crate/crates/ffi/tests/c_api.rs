use std::ffi::CStr;
use std::path::Path;
use std::process::Command;
use std::ptr;

use mcac_ffi::*;

fn last_error() -> String {
    let mut buf = [0 as std::ffi::c_char; 256];
    unsafe {
        mcac_last_error(buf.as_mut_ptr(), buf.len());
        CStr::from_ptr(buf.as_ptr()).to_string_lossy().into_owned()
    }
}

fn tanh_disc(n: usize, side: f64, r: f64, eps: f64) -> Vec<f64> {
    let h = side / n as f64;
    let mut v = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            let (x, y) = ((i as f64 + 0.5) * h - side / 2.0, (j as f64 + 0.5) * h - side / 2.0);
            let d = r - (x * x + y * y).sqrt();
            v.push((d / (eps * std::f64::consts::SQRT_2)).tanh());
        }
    }
    v
}

#[test]
fn simulation_conserves_mass_through_the_c_surface() {
    let (n, side, eps) = (64, 2.0, 0.08);
    let v = tanh_disc(n, side, 0.5, eps);
    unsafe {
        let mut field = ptr::null_mut();
        assert_eq!(mcac_field_new(n, n, side, side, v.as_ptr(), v.len(), &mut field), McacStatus::Ok);
        let mut m0 = 0.0;
        assert_eq!(mcac_field_integral(field, &mut m0), McacStatus::Ok);

        let mut sim = ptr::null_mut();
        assert_eq!(mcac_sim_new(field, eps, 0.0, McacMultiplier::Bb, &mut sim), McacStatus::Ok);
        assert_eq!(mcac_sim_step(sim, 20), McacStatus::Ok);
        assert!((mcac_sim_time(sim) - 20.0 * 0.1 * eps * eps).abs() < 1e-15);
        assert!((mcac_sim_mass(sim) - m0).abs() <= 1e-11 * side * side);
        assert!(mcac_sim_multiplier(sim).is_finite());

        let mut out = ptr::null_mut();
        assert_eq!(mcac_sim_field(sim, &mut out), McacStatus::Ok);
        let mut values = vec![0.0; mcac_field_len(out)];
        assert_eq!(mcac_field_values(out, values.as_mut_ptr(), values.len()), McacStatus::Ok);
        assert!(values.iter().all(|u| u.abs() <= 1.001));
        assert_eq!(mcac_field_values(out, values.as_mut_ptr(), 3), McacStatus::InvalidArgument);

        mcac_field_free(out);
        mcac_sim_free(sim);
        mcac_field_free(field);
    }
}

#[test]
fn flow_keeps_a_circle_in_place() {
    unsafe {
        let mut curve = ptr::null_mut();
        assert_eq!(mcac_curve_circle(1.0, 1.0, 0.3, 64, &mut curve), McacStatus::Ok);
        let mut a0 = 0.0;
        assert_eq!(mcac_curve_area(curve, &mut a0), McacStatus::Ok);
        let mut k = 0.0;
        assert_eq!(mcac_curve_mean_curvature(curve, &mut k), McacStatus::Ok);
        assert!((k - 1.0 / 0.3).abs() < 1e-2);

        let mut flow = ptr::null_mut();
        assert_eq!(mcac_flow_new(curve, 0.0, true, &mut flow), McacStatus::Ok);
        assert_eq!(mcac_flow_advance(flow, 0.01), McacStatus::Ok);
        assert!((mcac_flow_time(flow) - 0.01).abs() < 1e-12);

        let mut c1 = ptr::null_mut();
        assert_eq!(mcac_flow_curve(flow, &mut c1), McacStatus::Ok);
        let mut a1 = 0.0;
        mcac_curve_area(c1, &mut a1);
        assert!((a1 - a0).abs() <= 1e-9 * a0);
        let mut xy = vec![0.0; 2 * mcac_curve_len(c1)];
        assert_eq!(mcac_curve_points(c1, xy.as_mut_ptr(), xy.len()), McacStatus::Ok);
        assert!(xy.chunks(2).all(|p| ((p[0] - 1.0).hypot(p[1] - 1.0) - 0.3).abs() < 1e-6));

        mcac_curve_free(c1);
        mcac_flow_free(flow);
        mcac_curve_free(curve);
    }
}

#[test]
fn errors_map_to_codes_and_messages() {
    unsafe {
        let mut field = ptr::null_mut();
        let v = [0.0; 64];
        assert_eq!(mcac_field_new(8, 8, 1.0, 1.0, v.as_ptr(), 63, &mut field), McacStatus::InvalidGrid);
        assert!(field.is_null());
        assert!(!last_error().is_empty());

        assert_eq!(mcac_field_new(8, 8, 1.0, 1.0, ptr::null(), 64, &mut field), McacStatus::NullPointer);
        assert_eq!(last_error(), "values is null");

        assert_eq!(mcac_field_new(8, 8, 1.0, 1.0, v.as_ptr(), 64, &mut field), McacStatus::Ok);
        let mut sim = ptr::null_mut();
        assert_eq!(mcac_sim_new(field, 0.1, 1.0, McacMultiplier::Rs, &mut sim), McacStatus::TimeStepTooLarge);
        assert!(last_error().contains("stability"));
        mcac_field_free(field);

        let mut curve = ptr::null_mut();
        assert_eq!(mcac_curve_circle(0.0, 0.0, 1.0, 8, &mut curve), McacStatus::Ok);
        let mut flow = ptr::null_mut();
        assert_eq!(mcac_flow_new(curve, 0.0, true, &mut flow), McacStatus::InvalidCurve);
        mcac_curve_free(curve);

        assert_eq!(mcac_sim_step(ptr::null_mut(), 1), McacStatus::NullPointer);
        assert!(mcac_sim_time(ptr::null()).is_nan());
        assert_eq!(mcac_field_len(ptr::null()), 0);
        mcac_field_free(ptr::null_mut());
    }
}

#[test]
fn last_error_reports_full_length_when_truncated() {
    unsafe {
        let mut f = ptr::null_mut();
        mcac_field_new(8, 8, 1.0, 1.0, ptr::null(), 64, &mut f);
        let mut buf = [0 as std::ffi::c_char; 4];
        assert_eq!(mcac_last_error(buf.as_mut_ptr(), buf.len()), "values is null".len());
        assert_eq!(CStr::from_ptr(buf.as_ptr()).to_str().unwrap(), "val");
        assert_eq!(mcac_last_error(ptr::null_mut(), 0), "values is null".len());
    }
}

#[test]
fn header_compiles_as_c() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include").join("mcac.h");
    let Ok(status) = Command::new("cc").args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-x", "c"]).arg(&header).status()
    else {
        eprintln!("no C compiler on PATH; skipping");
        return;
    };
    assert!(status.success());
}
