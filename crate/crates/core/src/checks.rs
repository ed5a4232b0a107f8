//! Randomized property suites over the operator rules, the smooth baseline,
//! tree construction, the warm-start witness and assembled gradients.
//!
//! Every suite is deterministic for a fixed seed.

use std::fmt;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::Serialize;

use crate::error::Result;
use crate::formula::{Formula, Interval, Predicate};
use crate::nlp::{Encoding, NlpProblem};
use crate::reform::{check_feasible, reformulate, AuxAssignment, ReformConstraint, Reformulation};
use crate::scenario::Scenario;
use crate::smooth;
use crate::trajectory::Trajectory;
use crate::tree::{build_tree, dedup_leaves, eval_tree, flatten, prepare_tree, NodeKind, TreeNode, TreeOptions};

/// Smooth operators under test; replaceable to check that a suite catches
/// a broken implementation.
#[derive(Clone, Copy)]
pub struct SmoothOps {
    pub max: fn(&[f64], f64) -> Result<f64>,
    pub min: fn(&[f64], f64) -> Result<f64>,
}

impl Default for SmoothOps {
    fn default() -> Self {
        Self {
            max: smooth::smooth_max,
            min: smooth::smooth_min,
        }
    }
}

impl fmt::Debug for SmoothOps {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("SmoothOps")
    }
}

/// Sample counts and seed for [`run_all`].
#[derive(Debug, Clone)]
pub struct CheckConfig {
    pub seed: u64,
    pub operator_vectors: usize,
    pub simplex_draws: usize,
    pub bound_samples: usize,
    pub soundness_samples: usize,
    pub tree_samples: usize,
    pub witness_samples: usize,
    pub assignments_per_tree: usize,
    pub gradient_points: usize,
    pub ops: SmoothOps,
}

impl Default for CheckConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            operator_vectors: 1000,
            simplex_draws: 100,
            bound_samples: 10_000,
            soundness_samples: 1000,
            tree_samples: 500,
            witness_samples: 500,
            assignments_per_tree: 100,
            gradient_points: 20,
            ops: SmoothOps::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteResult {
    pub name: String,
    pub passed: bool,
    pub cases: usize,
    pub detail: String,
    pub seconds: f64,
}

impl fmt::Display for SuiteResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} ({} cases, {:.2}s): {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.cases,
            self.seconds,
            self.detail
        )
    }
}

struct Suite {
    name: &'static str,
    start: Instant,
    cases: usize,
    failure: Option<String>,
}

impl Suite {
    fn new(name: &'static str) -> Self {
        Self {
            name,
            start: Instant::now(),
            cases: 0,
            failure: None,
        }
    }

    /// Records the first failing case.
    fn check(&mut self, ok: bool, msg: impl FnOnce() -> String) {
        if !ok && self.failure.is_none() {
            self.failure = Some(msg());
        }
    }

    fn finish(self, detail: String) -> SuiteResult {
        SuiteResult {
            name: self.name.to_string(),
            passed: self.failure.is_none(),
            cases: self.cases,
            detail: self.failure.unwrap_or(detail),
            seconds: self.start.elapsed().as_secs_f64(),
        }
    }
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn normal(rng: &mut impl Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Uniform draw from the probability simplex of dimension `m`; with
/// probability 1/4 a random vertex instead.
pub fn random_simplex(rng: &mut impl Rng, m: usize) -> Vec<f64> {
    if rng.random_bool(0.25) {
        let mut v = vec![0.0; m];
        v[rng.random_range(0..m)] = 1.0;
        return v;
    }
    let e: Vec<f64> = (0..m).map(|_| Exp1.sample(rng)).collect();
    let total: f64 = e.iter().sum();
    e.into_iter().map(|x| x / total).collect()
}

/// Vector of length `m` with entries in `[-5, 5]`, sometimes with ties.
fn random_vector(rng: &mut impl Rng, m: usize) -> Vec<f64> {
    let mut a: Vec<f64> = (0..m).map(|_| rng.random_range(-5.0..5.0)).collect();
    if rng.random_bool(0.2) {
        let i = rng.random_range(0..m);
        let j = rng.random_range(0..m);
        a[j] = a[i];
    }
    a
}

/// Random circle or half-plane predicate over a planar position.
pub fn random_predicate(rng: &mut impl Rng, name: &str) -> Predicate {
    if rng.random_bool(0.5) {
        let center = [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)];
        let radius = rng.random_range(0.3..2.0);
        Predicate::circle(name, center, radius, rng.random_bool(0.7)).expect("positive radius")
    } else {
        let angle: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let offset = rng.random_range(-1.5..1.5);
        Predicate::halfplane(name, vec![angle.cos(), angle.sin()], offset).expect("unit normal")
    }
}

/// Random formula in negation normal form over `preds`, with nesting depth
/// at most `depth` and horizon at most `budget`.
pub fn random_formula(rng: &mut impl Rng, preds: &[Predicate], depth: usize, budget: usize) -> Formula {
    let raw = random_raw_formula(rng, preds, depth, budget);
    raw.to_nnf().expect("negation is never placed over until")
}

fn random_interval(rng: &mut impl Rng, budget: usize) -> Interval {
    let hi = rng.random_range(0..=budget.min(6));
    let lo = rng.random_range(0..=hi);
    Interval::new(lo, hi).expect("lo <= hi")
}

/// Like [`random_formula`] but before normalization: negations may appear
/// above any operator except until.
pub fn random_raw_formula(rng: &mut impl Rng, preds: &[Predicate], depth: usize, budget: usize) -> Formula {
    if depth == 0 || rng.random_bool(0.2) {
        return Formula::Pred(preds[rng.random_range(0..preds.len())].clone());
    }
    let d = depth - 1;
    match rng.random_range(0..7) {
        0 => {
            let inner = random_raw_formula(rng, preds, d, budget);
            if contains_until(&inner) {
                inner
            } else {
                Formula::not(inner)
            }
        }
        1 | 2 => {
            let n = rng.random_range(2..=3);
            let parts = (0..n).map(|_| random_raw_formula(rng, preds, d, budget)).collect();
            if rng.random_bool(0.5) {
                Formula::And(parts)
            } else {
                Formula::Or(parts)
            }
        }
        3 => {
            let i = random_interval(rng, budget);
            Formula::always(i, random_raw_formula(rng, preds, d, budget - i.hi()))
        }
        4 => {
            let i = random_interval(rng, budget);
            Formula::eventually(i, random_raw_formula(rng, preds, d, budget - i.hi()))
        }
        5 => {
            let i = random_interval(rng, budget);
            let rest = budget - i.hi();
            Formula::until(
                i,
                random_raw_formula(rng, preds, d, rest),
                random_raw_formula(rng, preds, d, rest),
            )
        }
        _ => Formula::Pred(preds[rng.random_range(0..preds.len())].clone()),
    }
}

fn contains_until(f: &Formula) -> bool {
    match f {
        Formula::Pred(_) => false,
        Formula::Until(..) => true,
        Formula::Not(g) | Formula::Always(_, g) | Formula::Eventually(_, g) => contains_until(g),
        Formula::And(fs) | Formula::Or(fs) => fs.iter().any(contains_until),
    }
}

/// Planar trajectory (`n = 2`, `m = 1`) with standard normal samples scaled
/// by 1.5.
pub fn random_trajectory(rng: &mut impl Rng, horizon: usize) -> Trajectory {
    let states: Vec<Vec<f64>> = (0..=horizon)
        .map(|_| vec![1.5 * normal(rng), 1.5 * normal(rng)])
        .collect();
    let inputs = vec![vec![0.0]; horizon + 1];
    Trajectory::from_rows(&states, &inputs).expect("uniform rows")
}

/// Random formula (depth ≤ 4, horizon ≤ 20), its prepared tree and a
/// trajectory long enough to evaluate it.
pub fn random_case(rng: &mut impl Rng) -> (Formula, TreeNode, Trajectory) {
    let preds: Vec<Predicate> = (0..4).map(|i| random_predicate(rng, &format!("p{i}"))).collect();
    let f = random_formula(rng, &preds, 4, 20);
    let horizon = f.horizon();
    let opts = TreeOptions {
        flatten: rng.random_bool(0.7),
        dedup: rng.random_bool(0.7),
    };
    let tree = prepare_tree(&f, horizon, opts).expect("horizon fits");
    let x = random_trajectory(rng, horizon);
    (f, tree, x)
}

/// Single-level tree of one node type over leaves with values `a` on a
/// one-step trajectory: leaf `i` is `x − a_i·(−1)` evaluated at `x = 0`.
fn one_level(min: bool, a: &[f64]) -> (TreeNode, Trajectory) {
    let leaves = a
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let p = Predicate::halfplane(format!("a{i}"), vec![1.0], -v).expect("nonzero normal");
            TreeNode::leaf(p, 0)
        })
        .collect();
    let ty = if min {
        crate::tree::NodeType::Min
    } else {
        crate::tree::NodeType::Max
    };
    let tree = TreeNode::internal(ty, leaves, "op".into(), 0);
    let x = Trajectory::from_rows(&[vec![0.0]], &[vec![0.0]]).expect("single row");
    (tree, x)
}

/// Largest violation over every constraint except the root bound.
fn violation_without_root(r: &Reformulation, a: &AuxAssignment, x: &Trajectory) -> f64 {
    r.constraints
        .iter()
        .filter(|c| !matches!(c, ReformConstraint::RootNonneg { .. }))
        .map(|c| c.violation(a, x))
        .fold(0.0, f64::max)
}

/// Max and min rules on random vectors `a` and thresholds `δ`, checked on
/// the constraints produced for a one-level tree over leaves `aᵢ − δ`.
pub fn operator_equivalence(cfg: &CheckConfig) -> SuiteResult {
    let mut s = Suite::new("operator-equivalence");
    let mut rng = rng_for(cfg.seed, 1);
    for _ in 0..cfg.operator_vectors {
        let m = rng.random_range(2..=8);
        let a = random_vector(&mut rng, m);
        let delta = if rng.random_bool(0.2) {
            a[rng.random_range(0..m)]
        } else {
            rng.random_range(-6.0..6.0)
        };
        let shifted: Vec<f64> = a.iter().map(|v| v - delta).collect();
        let max_a = a.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min_a = a.iter().copied().fold(f64::INFINITY, f64::min);
        s.cases += 1;

        // Max rule: the indicator witness is feasible iff max(a) ≥ δ.
        let (tree, x) = one_level(false, &shifted);
        let r = reformulate(&tree);
        let w = r.warm_start(&x);
        let feasible = check_feasible(&r, &w, &x, 0.0).map(|f| f.feasible).unwrap_or(false);
        s.check(feasible == (max_a >= delta), || {
            format!("max rule: a={a:?} delta={delta} witness feasible={feasible}")
        });
        // Any simplex weights stay below the max.
        for _ in 0..cfg.simplex_draws {
            let lambda = random_simplex(&mut rng, m);
            let combo: f64 = lambda.iter().zip(&a).map(|(l, v)| l * v).sum();
            s.check(combo <= max_a + 1e-12, || {
                format!("simplex bound: a={a:?} lambda={lambda:?}")
            });
            let p = r.propagate(&x, lambda).expect("sized lambda");
            let root_ok = p.rho[r.root] <= max_a - delta + 1e-12;
            s.check(root_ok, || format!("propagated root above max: a={a:?} delta={delta}"));
        }

        // Min rule: ρ_root = 0 with leaves at aᵢ − δ is feasible iff all aᵢ ≥ δ.
        let (tree, x) = one_level(true, &shifted);
        let r = reformulate(&tree);
        let mut asg = r.warm_start(&x);
        asg.rho[r.root] = 0.0;
        let feasible = check_feasible(&r, &asg, &x, 0.0).map(|f| f.feasible).unwrap_or(false);
        s.check(feasible == (min_a >= delta), || {
            format!("min rule: a={a:?} delta={delta} feasible={feasible}")
        });
    }
    s.finish("max/min rules agree with the exact operators".into())
}

/// Smooth operator errors against their lower bounds.
pub fn error_bounds(cfg: &CheckConfig) -> SuiteResult {
    let mut s = Suite::new("smooth-error-bounds");
    let mut rng = rng_for(cfg.seed, 2);
    let mut tightest = f64::INFINITY;
    for _ in 0..cfg.bound_samples {
        let m = if rng.random_bool(0.3) {
            2
        } else {
            rng.random_range(2..=8)
        };
        let a = random_vector(&mut rng, m);
        let k = 10f64.powf(rng.random_range(-1.0..2.0));
        s.cases += 1;
        let (Ok(smax), Ok(smin), Ok(lb)) = (
            (cfg.ops.max)(&a, k),
            (cfg.ops.min)(&a, k),
            smooth::error_lower_bounds(&a, k),
        ) else {
            s.check(false, || format!("operator error on a={a:?} k={k}"));
            continue;
        };
        let max_a = a.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min_a = a.iter().copied().fold(f64::INFINITY, f64::min);
        let d_max = max_a - smax;
        let d_min = min_a - smin;
        tightest = tightest.min(d_max - lb.max).min(d_min - lb.min);
        s.check(d_max >= lb.max - 1e-12, || {
            format!("max error {d_max} below bound {} (a={a:?}, k={k})", lb.max)
        });
        s.check(d_min >= lb.min - 1e-12, || {
            format!("min error {d_min} below bound {} (a={a:?}, k={k})", lb.min)
        });
        // Strictly positive in exact arithmetic; checkable once the bound
        // exceeds the rounding resolution of min(a).
        let resolution = 4.0 * f64::EPSILON * min_a.abs().max(1.0);
        if lb.min > resolution {
            s.check(d_min > 0.0, || {
                format!("min error {d_min} not positive (a={a:?}, k={k})")
            });
        }
        if m == 2 {
            s.check((d_max - lb.max).abs() <= 1e-12, || {
                format!("m=2 max: error {d_max} vs bound {}", lb.max)
            });
            s.check((d_min - lb.min).abs() <= 1e-12, || {
                format!("m=2 min: error {d_min} vs bound {}", lb.min)
            });
        }
    }
    s.finish(format!("smallest slack {tightest:.3e}"))
}

fn smooth_eval(node: &TreeNode, x: &Trajectory, k: f64, ops: &SmoothOps) -> Result<f64> {
    match &node.kind {
        NodeKind::Leaf { pred, t } => Ok(pred.eval(x.state(*t))),
        NodeKind::Min | NodeKind::Max => {
            let vals = node
                .children
                .iter()
                .map(|c| smooth_eval(c, x, k, ops))
                .collect::<Result<Vec<f64>>>()?;
            if matches!(node.kind, NodeKind::Min) {
                (ops.min)(&vals, k)
            } else {
                (ops.max)(&vals, k)
            }
        }
    }
}

/// Surrogate robustness never exceeds the exact robustness.
pub fn baseline_soundness(cfg: &CheckConfig) -> SuiteResult {
    let mut s = Suite::new("baseline-soundness");
    let mut rng = rng_for(cfg.seed, 3);
    let mut gap = f64::INFINITY;
    for _ in 0..cfg.soundness_samples {
        let (_, tree, x) = random_case(&mut rng);
        let k = 10f64.powf(rng.random_range(-0.5..2.0));
        s.cases += 1;
        let exact = eval_tree(&tree, &x);
        match smooth_eval(&tree, &x, k, &cfg.ops) {
            Ok(approx) => {
                gap = gap.min(exact - approx);
                s.check(approx <= exact + 1e-12, || {
                    format!("surrogate {approx} above exact {exact} (k={k})")
                });
            }
            Err(e) => s.check(false, || format!("surrogate failed: {e}")),
        }
    }
    s.finish(format!("smallest gap {gap:.3e}"))
}

/// Tree evaluation equals direct robustness evaluation, before and after
/// flattening and leaf deduplication.
pub fn tree_oracle(cfg: &CheckConfig) -> SuiteResult {
    let mut s = Suite::new("tree-oracle");
    let mut rng = rng_for(cfg.seed, 4);
    for _ in 0..cfg.tree_samples {
        let preds: Vec<Predicate> = (0..4).map(|i| random_predicate(&mut rng, &format!("p{i}"))).collect();
        let f = random_formula(&mut rng, &preds, 4, 20);
        let horizon = f.horizon();
        let x = random_trajectory(&mut rng, horizon);
        s.cases += 1;
        let direct = match f.robustness(&x, 0) {
            Ok(v) => v,
            Err(e) => {
                s.check(false, || format!("robustness failed: {e}"));
                continue;
            }
        };
        let tree = match build_tree(&f, 0, horizon) {
            Ok(t) => t,
            Err(e) => {
                s.check(false, || format!("build_tree failed on {f}: {e}"));
                continue;
            }
        };
        let raw = eval_tree(&tree, &x);
        let flat = eval_tree(&flatten(&tree), &x);
        let dedup = eval_tree(&dedup_leaves(&tree), &x);
        s.check(raw == direct, || format!("tree {raw} != direct {direct} for {f}"));
        s.check(flat == direct, || {
            format!("flattened {flat} != direct {direct} for {f}")
        });
        s.check(dedup == direct, || {
            format!("deduplicated {dedup} != direct {direct} for {f}")
        });
    }
    s.finish("bitwise equal".into())
}

/// Tightest assignment for the given simplex weights, then lowered by
/// random nonnegative slack node by node (children before parents).
fn random_feasible_assignment(r: &Reformulation, x: &Trajectory, rng: &mut impl Rng) -> AuxAssignment {
    let mut lambda = vec![0.0; r.lambda_count()];
    for node in &r.nodes {
        if let Some(b) = node.lambda {
            lambda[b.range()].copy_from_slice(&random_simplex(rng, b.len));
        }
    }
    let mut rho = vec![0.0; r.rho_count()];
    for (v, node) in r.nodes.iter().enumerate().rev() {
        let tight = match &node.kind {
            NodeKind::Leaf { pred, t } => pred.eval(x.state(*t)),
            NodeKind::Min => node.children.iter().map(|&c| rho[c]).fold(f64::INFINITY, f64::min),
            NodeKind::Max => {
                let b = node.lambda.expect("max node owns a lambda block");
                lambda[b.range()]
                    .iter()
                    .zip(&node.children)
                    .map(|(l, &c)| l * rho[c])
                    .sum()
            }
        };
        let slack = if rng.random_bool(0.5) {
            0.0
        } else {
            rng.random_range(0.0..0.5)
        };
        rho[v] = tight - slack;
    }
    AuxAssignment { rho, lambda }
}

/// The witness satisfies every constraint and reproduces the exact root
/// value; no feasible assignment puts the root above it.
pub fn warm_start_witness(cfg: &CheckConfig) -> SuiteResult {
    let mut s = Suite::new("warm-start-witness");
    let mut rng = rng_for(cfg.seed, 5);
    let mut satisfied = 0;
    let mut worst: f64 = 0.0;
    for _ in 0..cfg.witness_samples {
        let (_, tree, x) = random_case(&mut rng);
        let r = reformulate(&tree);
        let w = r.warm_start(&x);
        let exact = eval_tree(&tree, &x);
        s.cases += 1;
        let v = violation_without_root(&r, &w, &x);
        worst = worst.max(v);
        s.check(v <= 1e-12, || format!("witness violates a constraint by {v}"));
        s.check(w.rho[r.root] == exact, || {
            format!("witness root {} != exact {exact}", w.rho[r.root])
        });
        if exact >= 0.0 {
            satisfied += 1;
            let ok = check_feasible(&r, &w, &x, 1e-9).map(|f| f.feasible).unwrap_or(false);
            s.check(ok, || "witness of a satisfying trajectory is infeasible".into());
        }
        for _ in 0..cfg.assignments_per_tree {
            let a = random_feasible_assignment(&r, &x, &mut rng);
            let v = violation_without_root(&r, &a, &x);
            s.check(v <= 1e-9, || format!("sampled assignment violates a constraint by {v}"));
            s.check(a.rho[r.root] <= exact + 1e-9, || {
                format!("feasible root {} above exact {exact}", a.rho[r.root])
            });
        }
    }
    s.finish(format!(
        "{satisfied} satisfying samples, worst witness violation {worst:.1e}"
    ))
}

fn random_point(p: &NlpProblem, rng: &mut impl Rng) -> Vec<f64> {
    (0..p.vars.len())
        .map(|i| {
            let (lo, hi) = (p.vars.lower[i], p.vars.upper[i]);
            if lo.is_finite() && hi.is_finite() && hi - lo < 50.0 {
                rng.random_range(lo..=hi)
            } else {
                2.0 * normal(rng)
            }
        })
        .collect()
}

/// Finite-difference check of every assembled function of every scenario,
/// for the exact encoding and the smooth surrogate with `k = 25`.
pub fn gradients(cfg: &CheckConfig, scenarios: &[Scenario]) -> SuiteResult {
    let mut s = Suite::new("gradients");
    let mut rng = rng_for(cfg.seed, 6);
    let mut worst = (0.0, String::new());
    for sc in scenarios {
        let tree = match sc.tree(TreeOptions::default()) {
            Ok(t) => t,
            Err(e) => {
                s.check(false, || format!("{}: {e}", sc.name()));
                continue;
            }
        };
        let r = reformulate(&tree);
        let problems = [
            sc.assemble(Encoding::Exact(&r)),
            sc.assemble(Encoding::Smooth { tree: &tree, k: 25.0 }),
        ];
        for p in problems {
            let p = match p {
                Ok(p) => p,
                Err(e) => {
                    s.check(false, || format!("{}: {e}", sc.name()));
                    continue;
                }
            };
            for _ in 0..cfg.gradient_points {
                let z = random_point(&p, &mut rng);
                let (err, label) = p.max_gradient_error(&z, 1e-6);
                s.cases += 1;
                if err > worst.0 {
                    worst = (err, format!("{}: {label}", sc.name()));
                }
                s.check(err <= 1e-5, || {
                    format!("{}: {label} relative error {err:.2e}", sc.name())
                });
            }
        }
    }
    s.finish(format!("max relative error {:.2e} ({})", worst.0, worst.1))
}

/// Every suite; the gradient suite runs over `scenarios`.
pub fn run_all(cfg: &CheckConfig, scenarios: &[Scenario]) -> Vec<SuiteResult> {
    vec![
        operator_equivalence(cfg),
        error_bounds(cfg),
        baseline_soundness(cfg),
        tree_oracle(cfg),
        warm_start_witness(cfg),
        gradients(cfg, scenarios),
    ]
}
