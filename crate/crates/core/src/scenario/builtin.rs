//! Built-in scenarios.
//!
//! The four linear scenarios use stand-in rectangle geometries on a 10 × 10
//! workspace; each rectangle is the conjunction of four half-plane
//! predicates named `<region>_w`, `_e`, `_s`, `_n`. Their waypoints give a
//! hand-made reference trajectory that satisfies the specification at
//! `T = 25` and is stretched in time for longer horizons.

use std::f64::consts::FRAC_PI_2;

use super::{double_integrator, unicycle, BoxBounds, PredicateEntry, Scenario, ScenarioSpec};
use crate::error::{Error, Result};
use crate::formula::PredicateShape;

const LINEAR: [&str; 4] = ["two-target", "many-target", "narrow-passage", "door-puzzle"];
const DEFAULT_LINEAR_HORIZON: usize = 25;

pub fn builtin_names() -> &'static [&'static str] {
    &["two-target", "many-target", "narrow-passage", "door-puzzle", "unicycle"]
}

/// All built-in scenarios at their default horizons.
pub fn builtin_scenarios() -> Vec<Scenario> {
    builtin_names()
        .iter()
        .map(|n| builtin(n, None).expect("built-in scenarios are valid"))
        .collect()
}

/// Built-in scenario by name. `horizon` overrides `T` for the linear
/// scenarios; the unicycle case study is fixed at `T = 50`.
pub fn builtin(name: &str, horizon: Option<usize>) -> Result<Scenario> {
    if LINEAR.contains(&name) {
        let t = horizon.unwrap_or(DEFAULT_LINEAR_HORIZON);
        if t < 10 {
            return Err(Error::Scenario(format!("{name} needs T >= 10, got {t}")));
        }
        let spec = match name {
            "two-target" => two_target(t),
            "many-target" => many_target(t),
            "narrow-passage" => narrow_passage(t),
            _ => door_puzzle(t),
        };
        return Scenario::new(spec);
    }
    if name == "unicycle" {
        let s = Scenario::new(unicycle_case())?;
        return match horizon {
            Some(t) if t != s.horizon() => s.with_horizon(t),
            _ => Ok(s),
        };
    }
    Err(Error::Scenario(format!(
        "unknown built-in scenario `{name}` (expected one of {})",
        builtin_names().join(", ")
    )))
}

struct Rect {
    name: &'static str,
    x: (f64, f64),
    y: (f64, f64),
}

impl Rect {
    fn predicates(&self, out: &mut Vec<PredicateEntry>) {
        let sides = [
            ("w", vec![1.0, 0.0], self.x.0),
            ("e", vec![-1.0, 0.0], -self.x.1),
            ("s", vec![0.0, 1.0], self.y.0),
            ("n", vec![0.0, -1.0], -self.y.1),
        ];
        for (side, normal, offset) in sides {
            out.push(PredicateEntry {
                name: format!("{}_{side}", self.name),
                shape: PredicateShape::Halfplane { normal, offset },
            });
        }
    }

    /// Formula text for "inside the rectangle".
    fn inside(&self) -> String {
        let n = self.name;
        format!("({n}_w and {n}_e and {n}_s and {n}_n)")
    }
}

fn diag(values: &[f64]) -> Vec<Vec<f64>> {
    (0..values.len())
        .map(|i| {
            (0..values.len())
                .map(|j| if i == j { values[i] } else { 0.0 })
                .collect()
        })
        .collect()
}

fn linear_spec(
    name: &str,
    horizon: usize,
    start: (f64, f64),
    rects: &[Rect],
    formula: String,
    waypoints: &[[f64; 3]],
) -> ScenarioSpec {
    let mut predicates = Vec::new();
    for r in rects {
        r.predicates(&mut predicates);
    }
    let stretch = horizon as f64 / DEFAULT_LINEAR_HORIZON as f64;
    let warm = waypoints
        .iter()
        .map(|w| [(w[0] * stretch).round(), w[1], w[2]])
        .collect();
    ScenarioSpec {
        name: name.to_string(),
        dynamics: double_integrator(),
        horizon,
        x0: vec![start.0, start.1, 0.0, 0.0],
        alpha: 1.0,
        q: diag(&[0.0, 0.0, 1.0, 1.0]),
        r: diag(&[1.0, 1.0]),
        input_box: BoxBounds::symmetric(2, 1.0),
        state_box: Some(BoxBounds {
            lower: vec![0.0, 0.0, -2.0, -2.0],
            upper: vec![10.0, 10.0, 2.0, 2.0],
        }),
        predicates,
        formula,
        warm_start: Some(warm),
    }
}

/// Visit one of two targets and dwell there, then reach the goal, avoiding a
/// central obstacle.
fn two_target(t: usize) -> ScenarioSpec {
    let goal = Rect {
        name: "goal",
        x: (7.0, 8.0),
        y: (8.0, 9.0),
    };
    let t1 = Rect {
        name: "target1",
        x: (1.0, 2.0),
        y: (6.0, 7.0),
    };
    let t2 = Rect {
        name: "target2",
        x: (7.0, 8.0),
        y: (4.5, 5.5),
    };
    let obs = Rect {
        name: "obstacle",
        x: (3.0, 5.0),
        y: (4.0, 6.0),
    };
    let formula = format!(
        "(F[0,{a}] G[0,5] {t1} or F[0,{a}] G[0,5] {t2}) and F[0,{t}] {goal} and G[0,{t}] not {obs}",
        a = t - 5,
        t1 = t1.inside(),
        t2 = t2.inside(),
        goal = goal.inside(),
        obs = obs.inside(),
    );
    let waypoints = [
        [0.0, 2.0, 2.0],
        [1.0, 2.0, 2.0],
        [7.0, 1.5, 6.5],
        [12.0, 1.5, 6.5],
        [20.0, 7.5, 8.5],
        [25.0, 7.5, 8.5],
    ];
    linear_spec("two-target", t, (2.0, 2.0), &[goal, t1, t2, obs], formula, &waypoints)
}

/// Three groups of two targets; one target of every group must be visited
/// for three consecutive steps.
fn many_target(t: usize) -> ScenarioSpec {
    let rects = [
        Rect {
            name: "a1",
            x: (2.0, 3.0),
            y: (6.0, 7.0),
        },
        Rect {
            name: "b1",
            x: (6.0, 7.0),
            y: (2.0, 3.0),
        },
        Rect {
            name: "a2",
            x: (4.0, 5.0),
            y: (8.0, 9.0),
        },
        Rect {
            name: "b2",
            x: (8.0, 9.0),
            y: (4.0, 5.0),
        },
        Rect {
            name: "a3",
            x: (8.0, 9.0),
            y: (8.0, 9.0),
        },
        Rect {
            name: "b3",
            x: (1.0, 2.0),
            y: (3.0, 4.0),
        },
        Rect {
            name: "obstacle",
            x: (4.0, 6.0),
            y: (4.0, 6.0),
        },
    ];
    let a = t - 2;
    let group = |i: usize| {
        format!(
            "F[0,{a}] G[0,2] ({} or {})",
            rects[2 * i].inside(),
            rects[2 * i + 1].inside()
        )
    };
    let formula = format!(
        "{} and {} and {} and G[0,{t}] not {}",
        group(0),
        group(1),
        group(2),
        rects[6].inside()
    );
    let waypoints = [
        [0.0, 1.0, 1.0],
        [1.0, 1.0, 1.0],
        [7.0, 6.5, 2.5],
        [10.0, 6.5, 2.5],
        [14.0, 8.5, 4.5],
        [17.0, 8.5, 4.5],
        [22.0, 8.5, 8.5],
        [25.0, 8.5, 8.5],
    ];
    linear_spec("many-target", t, (1.0, 1.0), &rects, formula, &waypoints)
}

/// A wall with a 0.8-wide gap separates the start from two goals.
fn narrow_passage(t: usize) -> ScenarioSpec {
    let rects = [
        Rect {
            name: "goal1",
            x: (8.0, 9.0),
            y: (8.0, 9.0),
        },
        Rect {
            name: "goal2",
            x: (8.0, 9.0),
            y: (1.0, 2.0),
        },
        Rect {
            name: "wall1",
            x: (4.0, 6.0),
            y: (0.0, 4.6),
        },
        Rect {
            name: "wall2",
            x: (4.0, 6.0),
            y: (5.4, 10.0),
        },
    ];
    let formula = format!(
        "F[0,{a}] G[0,3] ({} or {}) and G[0,{t}] (not {} and not {})",
        rects[0].inside(),
        rects[1].inside(),
        rects[2].inside(),
        rects[3].inside(),
        a = t - 3,
    );
    let waypoints = [
        [0.0, 1.0, 1.0],
        [1.0, 1.0, 1.0],
        [6.0, 3.0, 5.0],
        [12.0, 7.0, 5.0],
        [20.0, 8.5, 8.5],
        [25.0, 8.5, 8.5],
    ];
    linear_spec("narrow-passage", t, (1.0, 1.0), &rects, formula, &waypoints)
}

/// Each door stays closed until its key is collected; the second key is
/// only useful after the first.
fn door_puzzle(t: usize) -> ScenarioSpec {
    let rects = [
        Rect {
            name: "goal",
            x: (8.0, 9.0),
            y: (8.0, 9.0),
        },
        Rect {
            name: "key1",
            x: (1.0, 2.0),
            y: (4.0, 5.0),
        },
        Rect {
            name: "key2",
            x: (5.0, 6.0),
            y: (7.0, 8.0),
        },
        Rect {
            name: "door1",
            x: (3.0, 4.0),
            y: (0.0, 3.0),
        },
        Rect {
            name: "door2",
            x: (3.0, 4.0),
            y: (6.0, 9.0),
        },
        Rect {
            name: "obstacle",
            x: (6.5, 7.5),
            y: (0.0, 6.0),
        },
    ];
    let a = t / 2;
    let formula = format!(
        "F[0,{t}] {goal} and G[0,{t}] not {obs} and \
         ((not {door1}) U[0,{a}] ({key1} and ((not {door2}) U[0,{b}] {key2})))",
        goal = rects[0].inside(),
        key1 = rects[1].inside(),
        key2 = rects[2].inside(),
        door1 = rects[3].inside(),
        door2 = rects[4].inside(),
        obs = rects[5].inside(),
        b = t - a,
    );
    let waypoints = [
        [0.0, 1.0, 1.0],
        [1.0, 1.0, 1.0],
        [6.0, 1.5, 4.5],
        [7.0, 1.5, 4.5],
        [11.0, 4.5, 5.3],
        [14.0, 5.5, 7.5],
        [16.0, 5.5, 7.5],
        [21.0, 8.5, 8.5],
        [25.0, 8.5, 8.5],
    ];
    linear_spec("door-puzzle", t, (1.0, 1.0), &rects, formula, &waypoints)
}

/// Unicycle case study: five circular regions, the last-but-one an
/// obstacle.
fn unicycle_case() -> ScenarioSpec {
    let circle = |name: &str, center: [f64; 2], radius: f64| PredicateEntry {
        name: name.to_string(),
        shape: PredicateShape::Circle {
            center,
            radius,
            inside: true,
        },
    };
    ScenarioSpec {
        name: "unicycle".into(),
        dynamics: unicycle(0.5),
        horizon: 50,
        x0: vec![2.0, 3.0, -FRAC_PI_2],
        alpha: 10.0,
        q: diag(&[0.0, 0.0, 0.0]),
        r: diag(&[0.1, 1.0]),
        input_box: BoxBounds::symmetric(2, 1.0),
        state_box: None,
        predicates: vec![
            circle("mu1", [2.0, 0.5], 1.0),
            circle("mu2", [5.0, 1.0], 1.0),
            circle("mu3", [3.0, 2.0], 1.3),
            circle("mu4", [3.5, 0.8], 0.6),
            circle("mu5", [6.5, 3.5], 0.8),
        ],
        formula: "G[0,2] F[5,7] mu1 and F[15,17] G[2,5] mu2 and F[27,35] (mu3 U[2,10] mu1) \
                  and G[0,50] not mu4 and F[37,50] mu5"
            .into(),
        warm_start: Some(vec![
            [0.0, 2.0, 3.0],
            [5.0, 2.0, 0.6],
            [8.0, 2.0, 0.6],
            [11.0, 2.7, -0.3],
            [14.0, 4.2, -0.2],
            [17.0, 5.0, 0.9],
            [22.0, 5.0, 1.0],
            [25.0, 4.5, 2.6],
            [27.0, 3.3, 2.6],
            [30.0, 2.35, 1.0],
            [33.0, 2.35, 1.0],
            [36.0, 2.5, 2.0],
            [39.0, 3.7, 2.7],
            [45.0, 6.5, 3.5],
            [50.0, 6.5, 3.5],
        ]),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::{NodeKind, TreeOptions};

    #[test]
    fn all_builtins_load() {
        let all = builtin_scenarios();
        assert_eq!(all.len(), 5);
        assert!(builtin("nope", None).is_err());
    }

    #[test]
    fn case_study_parameters() {
        let s = builtin("unicycle", None).unwrap();
        assert_eq!(s.formula.horizon(), 50);
        assert_eq!(s.horizon(), 50);
        assert_eq!((s.state_dim(), s.input_dim()), (3, 2));
        assert_eq!(s.spec.alpha, 10.0);
        assert_eq!(s.spec.r, vec![vec![0.1, 0.0], vec![0.0, 1.0]]);
        assert_eq!(s.spec.x0, vec![2.0, 3.0, -FRAC_PI_2]);
    }

    #[test]
    fn references_satisfy_specifications() {
        for name in builtin_names() {
            let horizons: &[usize] = if *name == "unicycle" { &[50] } else { &[25, 50, 75] };
            for &t in horizons {
                let s = builtin(name, Some(t)).unwrap();
                let x = s.reference_trajectory();
                let rho = s.formula.robustness(&x, 0).unwrap();
                assert!(rho > 0.0, "{name} T={t}: reference robustness {rho}");
                let b = s.boxes();
                for k in 0..=t {
                    for (i, v) in x.state(k).iter().enumerate() {
                        assert!(*v >= b.state_lower[i] && *v <= b.state_upper[i], "{name} state box");
                    }
                    for (j, v) in x.input(k).iter().enumerate() {
                        assert!(
                            *v >= b.input_lower[j] && *v <= b.input_upper[j],
                            "{name} input box at {k}: {v}"
                        );
                    }
                }
                for k in 0..t {
                    let next = s.spec.dynamics.step(x.state(k), x.input(k));
                    for (a, b) in next.iter().zip(x.state(k + 1)) {
                        assert!((a - b).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn trees_have_min_max_internal_nodes() {
        for s in builtin_scenarios() {
            let tree = s.tree(TreeOptions::default()).unwrap();
            fn check(n: &crate::tree::TreeNode) {
                match n.kind {
                    NodeKind::Leaf { .. } => assert!(n.children.is_empty()),
                    _ => {
                        assert!(!n.children.is_empty());
                        n.children.iter().for_each(check);
                    }
                }
            }
            check(&tree);
        }
    }

    #[test]
    fn builtins_round_trip_through_json() {
        for s in builtin_scenarios() {
            let back = Scenario::from_json(&s.to_json()).unwrap();
            assert_eq!(back.spec, s.spec);
        }
    }

    #[test]
    fn horizon_override() {
        let s = builtin("two-target", Some(50)).unwrap();
        assert_eq!(s.horizon(), 50);
        assert_eq!(s.formula.horizon(), 50);
        assert!(builtin("two-target", Some(5)).is_err());
    }
}
