use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use stringasym_ffi::*;

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(sa_last_error_message()) }
        .to_string_lossy()
        .into_owned()
}

#[test]
fn flux_round_trip_and_errors() {
    unsafe {
        let mut f = ptr::null_mut();
        assert_eq!(sa_flux_parse(c("bilinear").as_ptr(), &mut f), SaStatus::Ok);
        let mut out = 0.0;
        assert_eq!(sa_flux_eval(f, 2.0, 3.0, &mut out), SaStatus::Ok);
        assert_eq!(out, 6.0);
        let mut needed = 0usize;
        assert_eq!(sa_flux_to_string(f, ptr::null_mut(), 0, &mut needed), SaStatus::BufferTooSmall);
        let mut buf = vec![0 as std::ffi::c_char; needed];
        assert_eq!(sa_flux_to_string(f, buf.as_mut_ptr(), buf.len(), &mut needed), SaStatus::Ok);
        assert_eq!(CStr::from_ptr(buf.as_ptr()).to_str().unwrap(), "u*v");
        sa_flux_free(f);

        let cases = [
            ("u * (v", SaStatus::FluxSyntax),
            ("u * w", SaStatus::FluxUnknownSymbol),
            ("u + 1", SaStatus::FluxNonzeroAtOrigin),
        ];
        for (src, status) in cases {
            let mut f = ptr::null_mut();
            assert_eq!(sa_flux_parse(c(src).as_ptr(), &mut f), status, "{src}");
            assert!(f.is_null());
            assert!(!last_error().is_empty());
        }
        assert_eq!(sa_flux_parse(ptr::null(), &mut f), SaStatus::NullPointer);
        sa_flux_free(ptr::null_mut());
    }
}

#[test]
fn derived_matches_core() {
    unsafe {
        let mut d = std::mem::zeroed::<SaDerived>();
        assert_eq!(sa_derived(1.0, 1.0, 2.0, 1.0, 2.0, SaClosure::Printed, &mut d), SaStatus::Ok);
        assert_eq!(d.k, 4.0 / 3.0);
        let p = stringasym::PhysicalParams::new(1.0, 1.0, 2.0, 1.0, 2.0).unwrap();
        let core = stringasym::DerivedParams::new(&p, stringasym::Closure::Printed).unwrap();
        assert_eq!((d.cap_k, d.flux_scale, d.degenerate), (core.cap_k, core.flux_scale, 0));
        assert_eq!(
            sa_derived(1.0, 1.0, 2.0, -1.0, 2.0, SaClosure::Consistent, &mut d),
            SaStatus::InvalidParams
        );
    }
}

#[test]
fn config_and_solves() {
    unsafe {
        let mut cfg = ptr::null_mut();
        assert_eq!(
            sa_config_parse(c("[physical]\neps = 0.4\n[time]\nt_end = 0.1\n").as_ptr(), &mut cfg),
            SaStatus::Ok
        );
        let mut traj = ptr::null_mut();
        assert_eq!(sa_full_solve(cfg, &mut traj), SaStatus::Ok);
        assert_eq!(sa_trajectory_len(traj), 1);
        let n = sa_trajectory_points(traj);
        let mut t = 0.0;
        assert_eq!(sa_trajectory_time(traj, 0, &mut t), SaStatus::Ok);
        assert_eq!(t, 0.1);
        assert_eq!(sa_trajectory_time(traj, 1, &mut t), SaStatus::OutOfRange);
        let mut u = vec![0.0; n];
        let mut x = vec![0.0; n];
        assert_eq!(sa_trajectory_field(traj, 0, SaField::U, u.as_mut_ptr(), n), SaStatus::Ok);
        assert_eq!(sa_trajectory_coordinates(traj, x.as_mut_ptr(), n), SaStatus::Ok);
        assert!(u.iter().any(|&v| v > 0.1));
        assert_eq!(
            sa_trajectory_field(traj, 0, SaField::U, u.as_mut_ptr(), n - 1),
            SaStatus::BufferTooSmall
        );
        assert_eq!(sa_trajectory_field(traj, 0, SaField::S, u.as_mut_ptr(), n), SaStatus::OutOfRange);
        sa_trajectory_free(traj);

        assert_eq!(sa_config_set_eps(cfg, -1.0), SaStatus::ConfigInvalid);
        assert_eq!(sa_config_set_eps(cfg, 0.2), SaStatus::Ok);
        let mut run = ptr::null_mut();
        assert_eq!(sa_run_execute(cfg, ptr::null(), &mut run), SaStatus::Ok);
        assert_eq!(sa_run_succeeded(run), 1);
        let manifest = CStr::from_ptr(sa_run_manifest_json(run)).to_str().unwrap();
        let v: serde_json::Value = serde_json::from_str(manifest).unwrap();
        assert_eq!(v["status"], "ok");
        assert_eq!(v["params"]["eps"], 0.2);
        sa_run_free(run);
        sa_config_free(cfg);

        assert_eq!(
            sa_config_parse(c("[physical]\neps = 0.2\nk1 = = 1\n").as_ptr(), &mut cfg),
            SaStatus::ConfigParse
        );
        assert!(last_error().contains("line 3"));
        assert_eq!(
            sa_config_parse(c("[physical]\neps = 0.2\n[flux]\nexpr = \"u + 1\"\n").as_ptr(), &mut cfg),
            SaStatus::FluxNonzeroAtOrigin
        );
        assert!(cfg.is_null());
    }
}

#[test]
fn failed_run_records_error() {
    unsafe {
        let mut cfg = ptr::null_mut();
        let text = "[physical]\neps = 0.2\n[grid]\nlength = 0.5\n[time]\nt_end = 0.1\n[run]\nmode = \"solve-full\"\n";
        assert_eq!(sa_config_parse(c(text).as_ptr(), &mut cfg), SaStatus::Ok);
        let mut run = ptr::null_mut();
        assert_eq!(sa_run_execute(cfg, ptr::null(), &mut run), SaStatus::SolverFailure);
        assert!(!run.is_null());
        assert_eq!(sa_run_succeeded(run), 0);
        let manifest = CStr::from_ptr(sa_run_manifest_json(run)).to_str().unwrap();
        assert!(manifest.contains("\"status\": \"error\""));
        sa_run_free(run);
        sa_config_free(cfg);
    }
}

fn target_dir() -> PathBuf {
    // tests run from target/<profile>/deps
    let exe = std::env::current_exe().unwrap();
    exe.parent().unwrap().parent().unwrap().to_path_buf()
}

#[test]
fn c_program_links_against_static_library() {
    let lib = target_dir().join("libstringasym_ffi.a");
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".to_string());
    if !lib.exists() || Command::new(&cc).arg("--version").output().is_err() {
        eprintln!("skipping: no C compiler or static library at {}", lib.display());
        return;
    }
    let crate_dir = Path::new(env!("CARGO_MANIFEST_DIR"));
    let out = tempfile::tempdir().unwrap();
    let exe = out.path().join("smoke");
    let status = Command::new(&cc)
        .arg(crate_dir.join("tests/c/smoke.c"))
        .arg("-I")
        .arg(crate_dir.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success(), "C compilation failed");
    let run = Command::new(&exe).output().unwrap();
    assert!(
        run.status.success(),
        "smoke test failed: {}",
        String::from_utf8_lossy(&run.stderr)
    );
    assert!(String::from_utf8_lossy(&run.stdout).starts_with("ok "));
}
