use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use stlopt_ffi::*;

fn last_error() -> String {
    let p = stlopt_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn load(name: &str, horizon: u32) -> *mut StloptScenario {
    let name = CString::new(name).unwrap();
    let mut s = ptr::null_mut();
    let status = unsafe { stlopt_scenario_builtin(name.as_ptr(), horizon, &mut s) };
    assert_eq!(status, StloptStatus::Ok);
    assert!(!s.is_null());
    s
}

#[test]
fn version_is_package_version() {
    let v = unsafe { CStr::from_ptr(stlopt_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn null_and_bad_arguments_report_codes() {
    let mut s = ptr::null_mut();
    assert_eq!(
        unsafe { stlopt_scenario_builtin(ptr::null(), 0, &mut s) },
        StloptStatus::NullPointer
    );
    let bad = CString::new("nowhere").unwrap();
    assert_eq!(
        unsafe { stlopt_scenario_builtin(bad.as_ptr(), 0, &mut s) },
        StloptStatus::Scenario
    );
    assert!(s.is_null());
    assert!(!last_error().is_empty());
    let json = CString::new("{not json").unwrap();
    assert_eq!(
        unsafe { stlopt_scenario_from_json(json.as_ptr(), &mut s) },
        StloptStatus::Scenario
    );
    let invalid = [0xffu8, 0xfe, 0];
    assert_eq!(
        unsafe { stlopt_scenario_from_json(invalid.as_ptr().cast(), &mut s) },
        StloptStatus::InvalidUtf8
    );
    let mut r = ptr::null_mut();
    assert_eq!(
        unsafe { stlopt_solve(ptr::null(), StloptMethod::Exact, ptr::null(), &mut r) },
        StloptStatus::NullPointer
    );
    assert!(unsafe { stlopt_result_objective(ptr::null()) }.is_nan());
    unsafe {
        stlopt_scenario_free(ptr::null_mut());
        stlopt_result_free(ptr::null_mut());
    }
}

#[test]
fn dimensions_and_robustness() {
    let s = load("unicycle", 0);
    let (t, n, m) = unsafe {
        (
            stlopt_scenario_horizon(s),
            stlopt_scenario_state_dim(s),
            stlopt_scenario_input_dim(s),
        )
    };
    assert_eq!((n, m), (3, 2));
    let states = vec![0.0; (t + 1) * n];
    let inputs = vec![0.0; (t + 1) * m];
    let mut rho = f64::NAN;
    let status = unsafe {
        stlopt_robustness(
            s,
            states.as_ptr(),
            states.len(),
            inputs.as_ptr(),
            inputs.len(),
            &mut rho,
        )
    };
    assert_eq!(status, StloptStatus::Ok);
    assert!(rho.is_finite());
    let status = unsafe { stlopt_robustness(s, states.as_ptr(), 3, inputs.as_ptr(), inputs.len(), &mut rho) };
    assert_eq!(status, StloptStatus::InvalidArgument);
    unsafe { stlopt_scenario_free(s) };
}

#[test]
fn json_round_trip() {
    let sc = stlopt::scenario::builtin("door-puzzle", None).unwrap();
    let json = CString::new(sc.to_json()).unwrap();
    let mut s = ptr::null_mut();
    assert_eq!(
        unsafe { stlopt_scenario_from_json(json.as_ptr(), &mut s) },
        StloptStatus::Ok
    );
    assert_eq!(unsafe { stlopt_scenario_horizon(s) }, sc.horizon());
    unsafe { stlopt_scenario_free(s) };
}

#[test]
fn solve_and_copy_trajectory() {
    let s = load("two-target", 25);
    let mut opts = stlopt_options_default();
    opts.k = 50.0;
    let mut r = ptr::null_mut();
    assert_eq!(
        unsafe { stlopt_solve(s, StloptMethod::SmoothApprox, &opts, &mut r) },
        StloptStatus::Ok
    );
    unsafe {
        assert_eq!(stlopt_result_k(r), 50.0);
        assert!(matches!(
            stlopt_result_status(r),
            StloptSolveStatus::Optimal | StloptSolveStatus::Feasible
        ));
        let mut need = 0;
        assert_eq!(stlopt_result_states(r, ptr::null_mut(), 0, &mut need), StloptStatus::Ok);
        assert_eq!(need, 26 * 4);
        let mut small = vec![0.0; need - 1];
        assert_eq!(
            stlopt_result_states(r, small.as_mut_ptr(), small.len(), ptr::null_mut()),
            StloptStatus::BufferTooSmall
        );
        let mut states = vec![0.0; need];
        let mut inputs = vec![0.0; 26 * 2];
        assert_eq!(
            stlopt_result_states(r, states.as_mut_ptr(), need, ptr::null_mut()),
            StloptStatus::Ok
        );
        assert_eq!(
            stlopt_result_inputs(r, inputs.as_mut_ptr(), inputs.len(), ptr::null_mut()),
            StloptStatus::Ok
        );
        let mut rho = f64::NAN;
        stlopt_robustness(
            s,
            states.as_ptr(),
            states.len(),
            inputs.as_ptr(),
            inputs.len(),
            &mut rho,
        );
        assert_eq!(rho, stlopt_result_robustness(r));
        stlopt_result_free(r);
        stlopt_scenario_free(s);
    }
}

fn header_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("include")
}

#[test]
fn header_declares_the_api() {
    let header = std::fs::read_to_string(header_dir().join("stlopt.h")).unwrap();
    for name in [
        "stlopt_scenario_builtin",
        "stlopt_solve",
        "stlopt_result_free",
        "stlopt_last_error",
        "STLOPT_STATUS_BUFFER_TOO_SMALL",
        "typedef struct StloptScenario StloptScenario",
    ] {
        assert!(header.contains(name), "{name} missing from header");
    }
}

/// Compiles and runs the C smoke program against the static library when a
/// C compiler is available.
#[test]
fn c_program_links_and_runs() {
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().and_then(Path::parent).unwrap();
    let lib = profile_dir.join("libstlopt_ffi.a");
    if Command::new("cc").arg("--version").output().is_err() || !lib.exists() {
        eprintln!("skipping: no C compiler or static library");
        return;
    }
    let out = std::env::temp_dir().join(format!("stlopt_smoke_{}", std::process::id()));
    let src = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/c/smoke.c");
    let status = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-I"])
        .arg(header_dir())
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success(), "C build failed");
    let run = Command::new(&out).output().unwrap();
    let _ = std::fs::remove_file(&out);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let stdout = String::from_utf8_lossy(&run.stdout);
    assert!(stdout.starts_with(env!("CARGO_PKG_VERSION")), "{stdout}");
}
