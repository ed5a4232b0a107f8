use std::path::Path;
use std::process::{Command, Output};

use stlopt::app::{parse_trajectory_csv, CompareSummary, RunReport};
use stlopt::scenario::builtin;

fn stlopt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stlopt")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn missing_scenario_file_exits_with_two() {
    let o = stlopt(&["solve", "--scenario", "/nonexistent/scenario.json"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("scenario"));
}

#[test]
fn invalid_sharpness_is_an_error() {
    let o = stlopt(&["solve", "--method", "smooth-approx", "--k=-1"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn solve_writes_csv_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = stlopt(&[
        "solve",
        "--scenario",
        "door-puzzle",
        "--method",
        "both",
        "--k",
        "25",
        "--out",
        out,
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report: RunReport =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report.version, env!("CARGO_PKG_VERSION"));
    assert_eq!(report.results.len(), 2);

    let s = builtin("door-puzzle", None).unwrap();
    for r in &report.results {
        let csv = std::fs::read_to_string(dir.path().join(format!("{}.csv", r.method.as_str()))).unwrap();
        assert!(csv.starts_with("t,px,py,vx,vy,u1,u2\n"), "{csv}");
        let x = parse_trajectory_csv(&csv, s.state_dim()).unwrap();
        assert_eq!(x, r.trajectory);
        // The reported robustness is recomputable from the CSV alone.
        assert_eq!(s.formula.robustness(&x, 0).unwrap(), r.robustness);
    }
}

#[test]
fn scenario_file_is_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("scenario.json");
    std::fs::write(&path, builtin("two-target", Some(15)).unwrap().to_json()).unwrap();
    let o = stlopt(&["dump-nlp", "--scenario", path.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(stdout(&o).starts_with("variables"));
}

#[test]
fn compare_rows_repeat_exactly() {
    let run = |dir: &Path| {
        let o = stlopt(&[
            "compare",
            "--scenario",
            "two-target",
            "--horizon",
            "15",
            "--method",
            "both",
            "--k",
            "25",
            "--seeds",
            "1",
            "--seed",
            "4",
            "--out",
            dir.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let text = std::fs::read_to_string(dir.join("compare.json")).unwrap();
        serde_json::from_str::<CompareSummary>(&text).unwrap()
    };
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let (x, y) = (run(a.path()), run(b.path()));
    assert_eq!(x.rows.len(), 2);
    for (r, s) in x.rows.iter().zip(&y.rows) {
        assert_eq!((r.seed, r.method, r.status), (s.seed, s.method, s.status));
        assert_eq!(r.objective.to_bits(), s.objective.to_bits());
        assert_eq!(r.robustness.to_bits(), s.robustness.to_bits());
    }
    assert!(x.summary.iter().all(|m| m.infeasible <= m.runs));
}

#[test]
fn dumps_describe_the_problem() {
    let tree = stdout(&stlopt(&["dump-tree", "--scenario", "two-target", "--horizon", "12"]));
    assert!(tree.starts_with("formula: "));
    assert!(tree.contains("constraints:") && tree.contains("rho_0 >= 0"));
    let nlp = stdout(&stlopt(&[
        "dump-nlp",
        "--scenario",
        "unicycle",
        "--method",
        "smooth-approx",
    ]));
    assert!(nlp.contains("smooth_rho >= 0"));
}
