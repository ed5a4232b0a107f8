//! Acceptance criteria, one PASS/FAIL line each. Runs without the libtest
//! harness so the lines always reach stdout; exits nonzero if any fails.

use std::process::ExitCode;
use std::time::Instant;

use stlopt::app::{self, CompareSummary, InitKind, Method, MethodResult, RunConfig};
use stlopt::checks::{self, CheckConfig, SuiteResult};
use stlopt::expr::Workspace;
use stlopt::nlp::{Encoding, SolverOptions};
use stlopt::reform::reformulate;
use stlopt::scenario::{builtin, builtin_scenarios};
use stlopt::trajectory::Trajectory;
use stlopt::tree::TreeOptions;

struct Outcome {
    passed: bool,
    detail: String,
}

fn report(id: usize, name: &str, limit: f64, start: Instant, o: Outcome) -> bool {
    let secs = start.elapsed().as_secs_f64();
    let ok = o.passed && secs < limit;
    println!(
        "[{}] criterion {id} {name}: {} ({secs:.2}s, limit {limit}s)",
        if ok { "PASS" } else { "FAIL" },
        o.detail
    );
    ok
}

fn suite(r: SuiteResult) -> Outcome {
    Outcome {
        passed: r.passed,
        detail: format!("{} cases; {}", r.cases, r.detail),
    }
}

fn two_target_run() -> (f64, MethodResult, MethodResult) {
    let s = builtin("two-target", Some(25)).expect("builtin");
    let tree = s.tree(TreeOptions::default()).expect("tree");
    let init = s.reference_trajectory();
    let init_rho = s.formula.robustness(&init, 0).expect("robustness");
    let opts = SolverOptions::default();
    let exact = app::run_method(&s, &tree, Method::Exact, 0.0, &init, false, &opts).expect("exact solve");
    let base = app::run_baseline(&s, &tree, None, &init, &opts).expect("baseline solve");
    (init_rho, exact, base)
}

fn linear_benchmark(run: &(f64, MethodResult, MethodResult)) -> Outcome {
    let (init_rho, exact, base) = run;
    let passed = *init_rho >= 0.0 && exact.robustness >= 0.0 && exact.objective <= base.objective + 1e-6;
    Outcome {
        passed,
        detail: format!(
            "start rho {init_rho:.4}; exact {} obj {:.6} rho {:.2e}; baseline k={} {} obj {:.6} rho {:.2e}",
            exact.status.as_str(),
            exact.objective,
            exact.robustness,
            base.k.unwrap_or(f64::NAN),
            base.status.as_str(),
            base.objective,
            base.robustness
        ),
    }
}

fn objective_equivalence() -> Outcome {
    let s = builtin("two-target", Some(25)).expect("builtin");
    let tree = s.tree(TreeOptions::default()).expect("tree");
    let r = reformulate(&tree);
    let p = s.assemble(Encoding::Exact(&r)).expect("assemble");
    let mut ws = Workspace::new();
    let mut worst: f64 = 0.0;
    let mut mismatches = 0;
    for seed in 0..100 {
        let x = app::initial_trajectory(&s, InitKind::Random, seed, 2.0);
        let z = p.pack(&x, Some(&r.warm_start(&x))).expect("pack");
        let nlp = p.objective_value(&z, &mut ws);
        let direct = independent_objective(
            &s.spec.alpha,
            &s.spec.q,
            &s.spec.r,
            &x,
            s.formula.robustness(&x, 0).unwrap(),
        );
        worst = worst.max((nlp - direct).abs());
        if nlp != direct {
            mismatches += 1;
        }
    }
    Outcome {
        passed: mismatches == 0,
        detail: format!("100 trajectories, {mismatches} mismatches, max difference {worst:.1e}"),
    }
}

/// `−α·ρ + Σₜ xₜᵀQxₜ + uₜᵀRuₜ`, summed term by term over nonzero weights.
fn independent_objective(alpha: &f64, q: &[Vec<f64>], r: &[Vec<f64>], x: &Trajectory, rho: f64) -> f64 {
    let quad = |m: &[Vec<f64>], v: &[f64]| -> Option<f64> {
        let mut acc = 0.0;
        let mut any = false;
        for (i, row) in m.iter().enumerate() {
            for (j, &c) in row.iter().enumerate() {
                if c != 0.0 {
                    any = true;
                    acc += c * (v[i] * v[j]);
                }
            }
        }
        any.then_some(acc)
    };
    let mut total = -alpha * rho;
    for t in 0..=x.horizon() {
        if let Some(v) = quad(q, x.state(t)) {
            total += v;
        }
        if let Some(v) = quad(r, x.input(t)) {
            total += v;
        }
    }
    total
}

fn unicycle_run() -> CompareSummary {
    let config = RunConfig {
        scenario: "unicycle".into(),
        method: Method::Exact,
        init: InitKind::Random,
        seed: 0,
        ..RunConfig::default()
    };
    app::cmd_compare(&config, 20).expect("compare")
}

fn nonlinear_case(run: &CompareSummary) -> Outcome {
    let best = run.rows.iter().map(|r| r.robustness).fold(f64::NEG_INFINITY, f64::max);
    let feasible: Vec<_> = run.rows.iter().filter(|r| r.status.is_success()).collect();
    let worst_feasible = feasible.iter().map(|r| r.robustness).fold(f64::INFINITY, f64::min);
    let positive = run.rows.iter().filter(|r| r.robustness > 0.0).count();
    Outcome {
        passed: best > 0.0 && worst_feasible >= -1e-6,
        detail: format!(
            "{positive}/{} runs with rho > 0 (best {best:.4}); {} feasible, lowest rho among them {worst_feasible:.4}",
            run.rows.len(),
            feasible.len()
        ),
    }
}

fn determinism(
    a7: &(f64, MethodResult, MethodResult),
    b7: &(f64, MethodResult, MethodResult),
    a9: &CompareSummary,
    b9: &CompareSummary,
) -> Outcome {
    let same_result =
        |x: &MethodResult, y: &MethodResult| x.status == y.status && x.objective.to_bits() == y.objective.to_bits();
    let ok7 = same_result(&a7.1, &b7.1) && same_result(&a7.2, &b7.2);
    let ok9 =
        a9.rows.len() == b9.rows.len()
            && a9.rows.iter().zip(&b9.rows).all(|(x, y)| {
                x.seed == y.seed && x.status == y.status && x.objective.to_bits() == y.objective.to_bits()
            });
    Outcome {
        passed: ok7 && ok9,
        detail: format!(
            "linear benchmark {}, nonlinear case {}",
            if ok7 { "identical" } else { "differs" },
            if ok9 { "identical" } else { "differs" }
        ),
    }
}

fn main() -> ExitCode {
    // `cargo test` passes harness flags such as `--nocapture`; only a name
    // filter that matches nothing skips the run.
    if std::env::args()
        .skip(1)
        .any(|a| !a.starts_with('-') && !"acceptance".contains(a.as_str()))
    {
        return ExitCode::SUCCESS;
    }
    let cfg = CheckConfig::default();
    let mut all = true;

    let t = Instant::now();
    all &= report(
        1,
        "operator equivalence",
        5.0,
        t,
        suite(checks::operator_equivalence(&cfg)),
    );
    let t = Instant::now();
    all &= report(2, "smooth error bounds", 5.0, t, suite(checks::error_bounds(&cfg)));
    let t = Instant::now();
    all &= report(
        3,
        "baseline soundness",
        10.0,
        t,
        suite(checks::baseline_soundness(&cfg)),
    );
    let t = Instant::now();
    all &= report(4, "tree oracle", 10.0, t, suite(checks::tree_oracle(&cfg)));
    let t = Instant::now();
    all &= report(
        5,
        "warm-start witness",
        20.0,
        t,
        suite(checks::warm_start_witness(&cfg)),
    );
    let t = Instant::now();
    let scenarios = builtin_scenarios();
    all &= report(6, "gradients", 30.0, t, suite(checks::gradients(&cfg, &scenarios)));

    let t = Instant::now();
    let run7 = two_target_run();
    all &= report(
        7,
        "linear benchmark (two-target, T=25)",
        120.0,
        t,
        linear_benchmark(&run7),
    );

    let t = Instant::now();
    all &= report(8, "objective equivalence", 5.0, t, objective_equivalence());

    let t = Instant::now();
    let run9 = unicycle_run();
    all &= report(
        9,
        "nonlinear case (unicycle, 20 seeds)",
        900.0,
        t,
        nonlinear_case(&run9),
    );

    let t = Instant::now();
    let rerun7 = two_target_run();
    let rerun9 = unicycle_run();
    all &= report(
        10,
        "determinism",
        f64::INFINITY,
        t,
        determinism(&run7, &rerun7, &run9, &rerun9),
    );

    if all {
        println!("all acceptance criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("some acceptance criteria failed");
        ExitCode::FAILURE
    }
}
