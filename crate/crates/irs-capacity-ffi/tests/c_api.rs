use std::ffi::{c_char, CString};
use std::process::Command;
use std::ptr;

use irs_capacity_ffi::*;

fn last_error() -> String {
    unsafe {
        let n = irs_last_error_message(ptr::null_mut(), 0);
        let mut buf = vec![0u8; n + 1];
        irs_last_error_message(buf.as_mut_ptr().cast::<c_char>(), buf.len());
        String::from_utf8(buf[..n].to_vec()).unwrap()
    }
}

#[test]
fn pdf_round_trip() {
    unsafe {
        let mut pdf: *mut IrsPdf = ptr::null_mut();
        let g = [1.0];
        assert_eq!(irs_pdf_new(1, 1, 1, g.as_ptr(), &mut pdf), IRS_OK);
        let xs = [1.0, 2.0];
        let mut ys = [0.0; 2];
        assert_eq!(irs_pdf_density(pdf, xs.as_ptr(), 2, ys.as_mut_ptr()), IRS_OK);
        assert!((ys[0] - 0.22778774549906713).abs() < 1e-12);
        let mut mean = 0.0;
        assert_eq!(irs_pdf_mean(pdf, &mut mean), IRS_OK);
        assert!((mean - 1.0).abs() < 1e-12);
        let mut ec = 0.0;
        let mut err = 0.0;
        assert_eq!(irs_ergodic_capacity(pdf, 10.0, 1, 0.0, &mut ec, &mut err), IRS_OK);
        assert!(ec > 0.0 && err < 1e-6);
        irs_pdf_free(pdf);
    }
}

#[test]
fn errors_are_reported() {
    unsafe {
        let mut pdf: *mut IrsPdf = ptr::null_mut();
        let g = [1.0, 2.0];
        assert_eq!(irs_pdf_new(1, 2, 1, g.as_ptr(), &mut pdf), IRS_ERR_DOMAIN);
        assert!(pdf.is_null());
        assert!(!last_error().is_empty());
        assert_eq!(irs_pdf_new(1, 1, 1, ptr::null(), &mut pdf), IRS_ERR_NULL);
        assert_eq!(last_error(), "gammas is null");

        let mut cfg: *mut IrsConfig = ptr::null_mut();
        let bad = CString::new(r#"{"m": 0}"#).unwrap();
        assert_eq!(irs_config_from_json(bad.as_ptr(), &mut cfg), IRS_ERR_CONFIG);
        let unknown = CString::new(r#"{"bogus": 1}"#).unwrap();
        assert_eq!(irs_config_from_json(unknown.as_ptr(), &mut cfg), IRS_ERR_CONFIG);
        assert!(cfg.is_null());

        let mut buf = [0 as c_char; 4];
        let n = irs_last_error_message(buf.as_mut_ptr(), buf.len());
        assert!(n > 3);
        assert_eq!(buf[3], 0);

        irs_pdf_free(ptr::null_mut());
        irs_config_free(ptr::null_mut());
    }
}

#[test]
fn config_pdf_and_optimize() {
    unsafe {
        let json = CString::new(r#"{"m": 2, "k": 2, "n_h": 1, "n_v": 2, "phases": "zero"}"#).unwrap();
        let mut cfg: *mut IrsConfig = ptr::null_mut();
        assert_eq!(irs_config_from_json(json.as_ptr(), &mut cfg), IRS_OK, "{}", last_error());
        let mut q = 0usize;
        assert_eq!(irs_config_num_phases(cfg, &mut q), IRS_OK);
        assert_eq!(q, 2);

        let mut pdf: *mut IrsPdf = ptr::null_mut();
        assert_eq!(irs_pdf_from_config(cfg, &mut pdf), IRS_OK);
        let mut before = 0.0;
        assert_eq!(irs_ergodic_capacity(pdf, 10.0, 2, 0.0, &mut before, ptr::null_mut()), IRS_OK);
        irs_pdf_free(pdf);

        let mut short = [0.0; 1];
        assert_eq!(irs_optimize(cfg, short.as_mut_ptr(), 1, ptr::null_mut(), ptr::null_mut()), IRS_ERR_DOMAIN);
        let mut phases = [0.0; 2];
        let mut obj = 0.0;
        let mut iters = 0usize;
        assert_eq!(irs_optimize(cfg, phases.as_mut_ptr(), 2, &mut obj, &mut iters), IRS_OK, "{}", last_error());
        assert!(iters > 0);
        assert!(obj > before);
        irs_config_free(cfg);
    }
}

#[test]
fn default_config_pairs_four_elements() {
    unsafe {
        let mut cfg: *mut IrsConfig = ptr::null_mut();
        assert_eq!(irs_config_new_default(&mut cfg), IRS_OK);
        let mut q = 0usize;
        assert_eq!(irs_config_num_phases(cfg, &mut q), IRS_OK);
        assert_eq!(q, 4);
        assert_eq!(irs_config_num_phases(cfg, ptr::null_mut()), IRS_ERR_NULL);
        irs_config_free(cfg);
    }
}

#[test]
fn header_compiles_as_c() {
    let header = concat!(env!("CARGO_MANIFEST_DIR"), "/include/irs_capacity.h");
    let Ok(out) = Command::new("cc").args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-x", "c", header]).output() else {
        eprintln!("no C compiler; skipping");
        return;
    };
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(header).unwrap();
    for sym in ["irs_pdf_new", "irs_pdf_density", "irs_ergodic_capacity", "irs_optimize", "irs_last_error_message"] {
        assert!(text.contains(sym), "{sym} missing from header");
    }
}
