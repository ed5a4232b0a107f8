use stlopt::checks::{self, CheckConfig, SmoothOps};
use stlopt::scenario::builtin;
use stlopt::Result;

fn small() -> CheckConfig {
    CheckConfig {
        seed: 7,
        operator_vectors: 200,
        simplex_draws: 20,
        bound_samples: 2000,
        soundness_samples: 200,
        tree_samples: 100,
        witness_samples: 100,
        assignments_per_tree: 20,
        gradient_points: 3,
        ..CheckConfig::default()
    }
}

/// `smooth_min` with the sign of the log term flipped.
fn flipped_min(a: &[f64], k: f64) -> Result<f64> {
    let v = stlopt::smooth::smooth_min(a, k)?;
    let min = a.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(2.0 * min - v)
}

/// `smooth_max` that overshoots the true maximum.
fn inflated_max(a: &[f64], k: f64) -> Result<f64> {
    Ok(stlopt::smooth::smooth_max(a, k)? + 1.0 / k)
}

#[test]
fn every_suite_passes_on_a_small_budget() {
    let scenarios = vec![
        builtin("two-target", Some(12)).unwrap(),
        builtin("unicycle", None).unwrap(),
    ];
    for r in checks::run_all(&small(), &scenarios) {
        assert!(r.passed, "{r}");
        assert!(r.cases > 0, "{r}");
    }
}

#[test]
fn sign_error_in_smooth_min_fails_the_bound_suite() {
    let cfg = CheckConfig {
        ops: SmoothOps {
            min: flipped_min,
            ..SmoothOps::default()
        },
        ..small()
    };
    let r = checks::error_bounds(&cfg);
    assert!(!r.passed, "{r}");
    assert!(r.detail.contains("min error"), "{r}");
}

#[test]
fn overshooting_smooth_max_fails_soundness() {
    let cfg = CheckConfig {
        ops: SmoothOps {
            max: inflated_max,
            ..SmoothOps::default()
        },
        ..small()
    };
    assert!(!checks::error_bounds(&cfg).passed);
    assert!(!checks::baseline_soundness(&cfg).passed);
}

#[test]
fn suites_are_deterministic() {
    let a = checks::warm_start_witness(&small());
    let b = checks::warm_start_witness(&small());
    assert_eq!(a.detail, b.detail);
    assert_eq!(a.cases, b.cases);
}
