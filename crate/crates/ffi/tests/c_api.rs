use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use heom_ffi::*;

const CLOSED: &str = r#"
[system]
delta_ev = 0.21
w_ev = 0.13
t_final_fs = 5.0
dt_fs = 0.05
"#;

fn config(text: &str) -> *mut HeomConfig {
    let text = CString::new(text).unwrap();
    let mut cfg = ptr::null_mut();
    assert_eq!(unsafe { heom_config_from_toml(text.as_ptr(), &mut cfg) }, HeomStatus::Ok);
    cfg
}

fn last_error() -> String {
    let p = heom_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn propagation_through_handles() {
    let cfg = config(CLOSED);
    let mut traj = ptr::null_mut();
    assert_eq!(unsafe { heom_propagate(cfg, &mut traj) }, HeomStatus::Ok);
    let n = unsafe { heom_trajectory_len(traj) };
    assert_eq!(n, 101);
    let mut s = HeomSample::default();
    for i in 0..n {
        assert_eq!(unsafe { heom_trajectory_sample(traj, i, &mut s) }, HeomStatus::Ok);
        assert!((s.rho11 + s.rho22 - 1.0).abs() < 1e-12);
    }
    assert!((s.t_fs - 5.0).abs() < 1e-12);
    assert_eq!(unsafe { heom_trajectory_sample(traj, n, &mut s) }, HeomStatus::OutOfRange);
    assert!(last_error().contains("out of range"));
    unsafe {
        heom_trajectory_free(traj);
        heom_config_free(cfg);
    }
}

#[test]
fn errors_map_to_status_codes() {
    let bad = CString::new(CLOSED.replace("delta_ev", "delta")).unwrap();
    let mut cfg = ptr::null_mut();
    assert_eq!(unsafe { heom_config_from_toml(bad.as_ptr(), &mut cfg) }, HeomStatus::Config);
    assert!(cfg.is_null());
    assert!(last_error().contains("delta_ev"));

    assert_eq!(unsafe { heom_config_from_toml(ptr::null(), &mut cfg) }, HeomStatus::NullPointer);
    assert_eq!(unsafe { heom_propagate(ptr::null(), ptr::null_mut()) }, HeomStatus::NullPointer);

    let capped = format!(
        "{CLOSED}heom_level = 8\nmax_slots = 100\n[bath]\ntemperature_k = 298.0\nmatsubara = 2\n\
         terms = [{{ p_ev5 = 2.3e-6, omega1_ev = 0.3, gamma1_ev = 0.06, omega2_ev = 0.5, gamma2_ev = 0.1 }}]\n"
    );
    let cfg = config(&capped);
    let mut traj = ptr::null_mut();
    assert_eq!(unsafe { heom_propagate(cfg, &mut traj) }, HeomStatus::Capacity);
    assert!(traj.is_null());
    unsafe { heom_config_free(cfg) };

    // Freeing NULL is a no-op.
    unsafe {
        heom_config_free(ptr::null_mut());
        heom_trajectory_free(ptr::null_mut());
        heom_control_free(ptr::null_mut());
    }
}

#[test]
fn closed_swap_control() {
    let cfg = config(&format!(
        "{}\n[oct]\ntarget = \"swap_12\"\nmax_iters = 20\n",
        CLOSED.replace("5.0", "20.0")
    ));
    let mut ctl = ptr::null_mut();
    assert_eq!(unsafe { heom_optimize(cfg, &mut ctl) }, HeomStatus::Ok);
    let iters = unsafe { heom_control_history_len(ctl) };
    let mut f = 0.0;
    assert_eq!(unsafe { heom_control_fidelity(ctl, iters - 1, &mut f) }, HeomStatus::Ok);
    assert!(f > 0.99, "fidelity {f}");

    let n = unsafe { heom_control_field_len(ctl) };
    let mut buf = vec![0.0; n];
    let mut dt = 0.0;
    assert_eq!(unsafe { heom_control_field(ctl, buf.as_mut_ptr(), n - 1, &mut dt) }, HeomStatus::OutOfRange);
    assert_eq!(unsafe { heom_control_field(ctl, buf.as_mut_ptr(), n, &mut dt) }, HeomStatus::Ok);
    assert!(buf.iter().all(|e| e.abs() <= 1e-2) && buf.iter().any(|e| *e != 0.0));
    assert!(dt > 0.0);
    unsafe {
        heom_control_free(ctl);
        heom_config_free(cfg);
    }
}

#[test]
fn run_writes_outputs() {
    let cfg = config(CLOSED);
    let dir = tempfile::tempdir().unwrap();
    let out = CString::new(dir.path().to_str().unwrap()).unwrap();
    assert_eq!(unsafe { heom_run(cfg, HeomMode::Propagate, out.as_ptr(), false) }, HeomStatus::Ok);
    assert!(dir.path().join("trajectory.csv").exists());
    assert!(dir.path().join("manifest.json").exists());
    // No bath: the correlation export is a configuration error.
    assert_eq!(unsafe { heom_run(cfg, HeomMode::Correlation, out.as_ptr(), false) }, HeomStatus::Config);
    unsafe { heom_config_free(cfg) };
}

#[test]
fn version_is_the_crate_version() {
    let v = unsafe { CStr::from_ptr(heom_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

/// Compiles and links a small C program against the generated header and
/// the static library. Skipped when no C compiler is on PATH.
#[test]
fn c_program_links_against_the_header() {
    let Ok(cc) = which_cc() else {
        eprintln!("no C compiler found; skipping");
        return;
    };
    let crate_dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let profile_dir = std::env::current_exe().unwrap().parent().unwrap().parent().unwrap().to_path_buf();
    let lib = profile_dir.join("libheom_ffi.a");
    assert!(lib.exists(), "static library not found at {}", lib.display());

    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("smoke.c");
    let exe = dir.path().join("smoke");
    std::fs::write(&src, C_SMOKE).unwrap();
    let status = Command::new(&cc)
        .arg(&src)
        .arg("-I")
        .arg(crate_dir.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success(), "C compilation failed");
    let output = Command::new(&exe).output().unwrap();
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    assert_eq!(String::from_utf8_lossy(&output.stdout).trim(), "ok 101");
}

fn which_cc() -> Result<String, ()> {
    for cc in ["cc", "gcc", "clang"] {
        if Command::new(cc).arg("--version").output().is_ok_and(|o| o.status.success()) {
            return Ok(cc.to_string());
        }
    }
    Err(())
}

const C_SMOKE: &str = r#"
#include <math.h>
#include <stdio.h>
#include "heom.h"

int main(void) {
    const char *toml =
        "[system]\n"
        "delta_ev = 0.21\n"
        "w_ev = 0.13\n"
        "t_final_fs = 5.0\n"
        "dt_fs = 0.05\n";
    HeomConfig *cfg = NULL;
    if (heom_config_from_toml(toml, &cfg) != HEOM_STATUS_OK) return 1;
    HeomTrajectory *traj = NULL;
    if (heom_propagate(cfg, &traj) != HEOM_STATUS_OK) return 2;
    size_t n = heom_trajectory_len(traj);
    HeomSample s;
    for (size_t i = 0; i < n; ++i) {
        if (heom_trajectory_sample(traj, i, &s) != HEOM_STATUS_OK) return 3;
        if (fabs(s.rho11 + s.rho22 - 1.0) > 1e-12) return 4;
    }
    heom_trajectory_free(traj);
    heom_config_free(cfg);

    HeomConfig *bad = NULL;
    if (heom_config_from_toml("[system]\nbogus = 1\n", &bad) != HEOM_STATUS_CONFIG) return 5;
    if (heom_last_error() == NULL) return 6;
    printf("ok %zu\n", n);
    return 0;
}
"#;
