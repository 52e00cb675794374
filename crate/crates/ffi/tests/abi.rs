use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use spectomo_ffi::*;

fn last_error() -> String {
    let p = spectomo_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn topology_round_trip_and_exact_joint() {
    unsafe {
        let mut t = ptr::null_mut();
        assert_eq!(spectomo_topology_generate(6, 1, 2, 11, &mut t), SpectomoStatus::Ok);
        let mut n = 0usize;
        assert_eq!(spectomo_topology_num_clients(t, &mut n), SpectomoStatus::Ok);
        assert_eq!(n, 6);

        let mut json = ptr::null_mut();
        assert_eq!(spectomo_topology_to_json(t, &mut json), SpectomoStatus::Ok);
        let mut t2 = ptr::null_mut();
        assert_eq!(spectomo_topology_from_json(json, &mut t2), SpectomoStatus::Ok);
        spectomo_string_free(json);

        let subset = [0usize, 2, 5];
        let mut a = [0.0f64; 8];
        let mut b = [0.0f64; 8];
        assert_eq!(spectomo_exact_joint(t, 0, subset.as_ptr(), 3, a.as_mut_ptr(), 8), SpectomoStatus::Ok);
        assert_eq!(spectomo_exact_joint(t2, 0, subset.as_ptr(), 3, b.as_mut_ptr(), 8), SpectomoStatus::Ok);
        assert_eq!(a, b);
        assert!((a.iter().sum::<f64>() - 1.0).abs() < 1e-12);

        assert_eq!(spectomo_exact_joint(t, 0, subset.as_ptr(), 3, a.as_mut_ptr(), 4), SpectomoStatus::BufferTooSmall);
        assert!(last_error().contains("8"));
        spectomo_topology_free(t);
        spectomo_topology_free(t2);
    }
}

#[test]
fn errors_map_to_status_codes() {
    unsafe {
        let mut t = ptr::null_mut();
        assert_eq!(spectomo_topology_generate(0, 1, 2, 1, &mut t), SpectomoStatus::InvalidParameter);
        assert!(t.is_null());
        assert!(last_error().contains("num_clients"));
        assert_eq!(spectomo_topology_from_json(ptr::null(), &mut t), SpectomoStatus::NullPointer);
        let bad = CString::new("{").unwrap();
        assert_eq!(spectomo_topology_from_json(bad.as_ptr(), &mut t), SpectomoStatus::Json);
        let mut n = 0usize;
        assert_eq!(spectomo_topology_num_clients(ptr::null(), &mut n), SpectomoStatus::NullPointer);
        spectomo_topology_free(ptr::null_mut());
        spectomo_model_free(ptr::null_mut());
        spectomo_string_free(ptr::null_mut());
    }
}

#[test]
fn model_estimate_query_and_blueprint() {
    unsafe {
        let mut t = ptr::null_mut();
        assert_eq!(spectomo_topology_generate(8, 1, 2, 5, &mut t), SpectomoStatus::Ok);
        let mut m = ptr::null_mut();
        assert_eq!(spectomo_model_estimate(t, 0, 0, 300, 5, &mut m), SpectomoStatus::Ok);
        let group = [1usize, 3, 4];
        let mut total = 0.0;
        for mask in 0..8usize {
            let access: Vec<usize> = (0..3).filter(|k| mask >> k & 1 == 1).map(|k| group[k]).collect();
            let mut p = 0.0;
            assert_eq!(spectomo_model_query(m, group.as_ptr(), 3, access.as_ptr(), access.len(), &mut p), SpectomoStatus::Ok);
            total += p;
        }
        assert!((total - 1.0).abs() < 1e-9);
        let oob = [9usize];
        let mut p = 0.0;
        assert_eq!(spectomo_model_query(m, oob.as_ptr(), 1, ptr::null(), 0, &mut p), SpectomoStatus::InvalidParameter);

        let mut json = ptr::null_mut();
        assert_eq!(spectomo_model_to_json(m, &mut json), SpectomoStatus::Ok);
        let mut m2 = ptr::null_mut();
        assert_eq!(spectomo_model_from_json(json, &mut m2), SpectomoStatus::Ok);
        spectomo_string_free(json);
        let mut k = 0usize;
        assert_eq!(spectomo_blueprint_count(m2, 5, &mut k), SpectomoStatus::Ok);
        assert!(k <= 8);
        assert_eq!(spectomo_model_estimate(t, 3, 0, 0, 5, &mut m2), SpectomoStatus::InvalidParameter);
        spectomo_model_free(m);
        spectomo_model_free(m2);
        spectomo_topology_free(t);
    }
}

#[test]
fn overhead_counts() {
    let mut o = SpectomoOverhead::default();
    assert_eq!(unsafe { spectomo_overhead(1, 20, 5, 1, 1000, &mut o) }, SpectomoStatus::Ok);
    assert_eq!(o.tomography_frames, 30_000);
    assert_eq!(o.oracle_sets, 20);
    let v = unsafe { CStr::from_ptr(spectomo_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

/// Compile and run a small C program against the generated header and static library.
#[test]
fn header_compiles_and_links_from_c() {
    let Ok(cc) = which_cc() else {
        eprintln!("no C compiler found; skipping");
        return;
    };
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let target = manifest.join("../../target").join(if cfg!(debug_assertions) { "debug" } else { "release" });
    let lib = target.join("libspectomo_ffi.a");
    if !lib.exists() {
        eprintln!("{} not built; skipping", lib.display());
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("smoke.c");
    std::fs::write(
        &src,
        r#"
#include "spectomo.h"
#include <stdio.h>
int main(void) {
    SpectomoTopology *t = NULL;
    if (spectomo_topology_generate(5, 1, 2, 3, &t) != SPECTOMO_STATUS_OK) return 1;
    size_t subset[2] = {0, 1};
    double p[4];
    if (spectomo_exact_joint(t, 0, subset, 2, p, 4) != SPECTOMO_STATUS_OK) return 2;
    double s = p[0] + p[1] + p[2] + p[3];
    if (s < 0.999999 || s > 1.000001) return 3;
    if (spectomo_topology_generate(0, 1, 2, 3, &t) != SPECTOMO_STATUS_INVALID_PARAMETER) return 4;
    if (spectomo_last_error() == NULL) return 5;
    spectomo_topology_free(t);
    return 0;
}
"#,
    )
    .unwrap();
    let exe = dir.path().join("smoke");
    let status = Command::new(cc)
        .arg(&src)
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success());
    assert!(Command::new(&exe).status().unwrap().success());
}

fn which_cc() -> Result<&'static str, ()> {
    ["cc", "gcc", "clang"]
        .into_iter()
        .find(|c| Command::new(c).arg("--version").output().is_ok_and(|o| o.status.success()))
        .ok_or(())
}
