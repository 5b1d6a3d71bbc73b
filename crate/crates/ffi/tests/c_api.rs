use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use rcurrent_ffi::*;

fn last_error() -> String {
    let p = rc_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn edge_correlation_matches_tanh() {
    let (u, v, j) = ([0usize], [1usize], [1.0f64]);
    let mut g = ptr::null_mut();
    unsafe {
        assert_eq!(rc_graph_from_edges(2, 1, u.as_ptr(), v.as_ptr(), j.as_ptr(), &mut g), RcStatus::Ok);
        assert_eq!(rc_graph_vertices(g), 2);
        assert_eq!(rc_graph_edges(g), 1);
        let mut gibbs = ptr::null_mut();
        assert_eq!(rc_gibbs_new(g, 0.7, &mut gibbs), RcStatus::Ok);
        let pts = [0usize, 1];
        let mut val = 0.0;
        assert_eq!(rc_gibbs_correlation(gibbs, pts.as_ptr(), 2, &mut val), RcStatus::Ok);
        assert!((val - 0.7f64.tanh()).abs() < 1e-14);
        rc_gibbs_free(gibbs);
        rc_graph_free(g);
    }
}

#[test]
fn ursell_on_square_is_nonpositive() {
    let mut g = ptr::null_mut();
    unsafe {
        assert_eq!(rc_graph_lattice(2, 2, 1.0, false, &mut g), RcStatus::Ok);
        let mut gibbs = ptr::null_mut();
        assert_eq!(rc_gibbs_new(g, 0.5, &mut gibbs), RcStatus::Ok);
        let mut u4 = 1.0;
        assert_eq!(rc_gibbs_ursell4(gibbs, [0usize, 1, 3, 2].as_ptr(), &mut u4), RcStatus::Ok);
        assert!(u4 < 0.0);
        rc_gibbs_free(gibbs);
        rc_graph_free(g);
    }
}

#[test]
fn errors_set_code_and_message() {
    unsafe {
        rc_clear_error();
        assert!(rc_last_error_message().is_null());
        assert_eq!(rc_graph_lattice(2, 4, 1.0, true, ptr::null_mut()), RcStatus::NullPointer);
        assert!(last_error().contains("out_graph"));

        let mut g = ptr::null_mut();
        assert_eq!(rc_graph_lattice(0, 4, 1.0, true, &mut g), RcStatus::InvalidArgument);
        assert!(g.is_null());

        assert_eq!(rc_graph_lattice(1, 3, 1.0, false, &mut g), RcStatus::Ok);
        let mut gibbs = ptr::null_mut();
        assert_eq!(rc_gibbs_new(g, 0.5, &mut gibbs), RcStatus::Ok);
        let mut v = 0.0;
        assert_eq!(rc_gibbs_correlation(gibbs, [0usize, 9].as_ptr(), 2, &mut v), RcStatus::InvalidArgument);
        assert!(last_error().contains("point 9"));
        rc_gibbs_free(gibbs);
        rc_graph_free(g);
        rc_graph_free(ptr::null_mut());
        assert_eq!(rc_graph_vertices(ptr::null()), 0);

        let path = CString::new("/nonexistent/graph.json").unwrap();
        assert_eq!(rc_graph_load(path.as_ptr(), &mut g), RcStatus::Io);
    }
}

#[test]
fn pfaffian_and_crossing_sign() {
    // Pf of a 4x4 array is a01 a23 - a02 a13 + a03 a12.
    let a = [0.0, 1.0, 2.0, 3.0, -1.0, 0.0, 4.0, 5.0, -2.0, -4.0, 0.0, 6.0, -3.0, -5.0, -6.0, 0.0];
    let mut pf = 0.0;
    unsafe {
        assert_eq!(rc_pfaffian(a.as_ptr(), 4, &mut pf), RcStatus::Ok);
        assert!((pf - (6.0 - 10.0 + 12.0)).abs() < 1e-12);
        let pos = [0i64, 1, 2, 3, 4, 5];
        let partner = [2usize, 4, 0, 5, 1, 3];
        let mut sign = 0;
        assert_eq!(rc_crossing_sign(pos.as_ptr(), partner.as_ptr(), 6, &mut sign), RcStatus::Ok);
        assert_eq!(sign, 1);
        let broken = [1usize, 1];
        assert_eq!(rc_crossing_sign(pos.as_ptr(), broken.as_ptr(), 2, &mut sign), RcStatus::InvalidArgument);
    }
}

#[test]
fn wolff_edge_estimate() {
    let (u, v, j) = ([0usize], [1usize], [1.0f64]);
    let mut g = ptr::null_mut();
    unsafe {
        assert_eq!(rc_graph_from_edges(2, 1, u.as_ptr(), v.as_ptr(), j.as_ptr(), &mut g), RcStatus::Ok);
        let (mut m, mut e) = (0.0, 0.0);
        assert_eq!(rc_wolff_s2(g, 0.4, 20_000, 7, 0, 1, &mut m, &mut e), RcStatus::Ok);
        assert!((m - 0.4f64.tanh()).abs() < 5.0 * e + 1e-3, "{m} +- {e}");
        assert_eq!(rc_wolff_s2(g, -1.0, 20_000, 7, 0, 1, &mut m, &mut e), RcStatus::InvalidArgument);
        rc_graph_free(g);
    }
}

#[test]
fn experiment_run_and_replay() {
    let dir = tempfile::tempdir().unwrap();
    let root = CString::new(dir.path().to_str().unwrap()).unwrap();
    let kind = CString::new("verify-pfaffian").unwrap();
    let cfg = CString::new("id = \"pf\"\nsizes = [3]\nbetas = [0.4]\nboundary_points = [4]").unwrap();
    unsafe {
        assert_eq!(rc_run_experiment(kind.as_ptr(), cfg.as_ptr(), root.as_ptr()), RcStatus::Ok);
        let run = CString::new(dir.path().join("pf").to_str().unwrap()).unwrap();
        assert_eq!(rc_replay(run.as_ptr()), RcStatus::Ok);

        let bad = CString::new("sizes = [9]").unwrap();
        assert_eq!(rc_run_experiment(kind.as_ptr(), bad.as_ptr(), root.as_ptr()), RcStatus::Config);
        let unknown = CString::new("no-such-kind").unwrap();
        assert_eq!(rc_run_experiment(unknown.as_ptr(), cfg.as_ptr(), root.as_ptr()), RcStatus::Config);
        assert!(last_error().contains("no-such-kind"));
    }
}

#[test]
fn version_is_crate_version() {
    let v = unsafe { CStr::from_ptr(rc_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

/// Compiles a small C program against the generated header and the static
/// library. Skipped when no C compiler is installed.
#[test]
fn header_compiles_and_links_from_c() {
    let Some(cc) = ["cc", "gcc", "clang"].into_iter().find(|c| Command::new(c).arg("--version").output().is_ok()) else {
        eprintln!("no C compiler; skipping");
        return;
    };
    let target = std::env::current_exe().unwrap().parent().unwrap().parent().unwrap().to_path_buf();
    let lib = target.join("librcurrent_ffi.a");
    if !lib.exists() {
        eprintln!("{} not built; skipping", lib.display());
        return;
    }
    let include = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include");
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("smoke.c");
    std::fs::write(
        &src,
        r#"
#include <math.h>
#include <stdio.h>
#include "rcurrent.h"
int main(void) {
    RcGraph *g = NULL;
    RcGibbs *m = NULL;
    if (rc_graph_lattice(2, 3, 1.0, 0, &g) != RC_STATUS_OK) return 1;
    if (rc_gibbs_new(g, 0.3, &m) != RC_STATUS_OK) return 2;
    size_t pts[2] = {0, 1};
    double v = 0.0;
    if (rc_gibbs_correlation(m, pts, 2, &v) != RC_STATUS_OK || !(v > 0.0 && v < 1.0)) return 3;
    if (rc_gibbs_new(NULL, 0.3, &m) != RC_STATUS_NULL_POINTER) return 4;
    if (rc_last_error_message() == NULL) return 5;
    rc_gibbs_free(m);
    rc_graph_free(g);
    printf("%s %.6f\n", rc_version(), v);
    return 0;
}
"#,
    )
    .unwrap();
    let exe = dir.path().join("smoke");
    let status = Command::new(cc)
        .arg(&src)
        .arg("-I")
        .arg(&include)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success(), "C compile failed");
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "C program exited with {:?}", out.status);
    assert!(String::from_utf8_lossy(&out.stdout).starts_with(env!("CARGO_PKG_VERSION")));
}
