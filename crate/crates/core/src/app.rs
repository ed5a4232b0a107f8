//! Run configuration and the `solve` / `compare` pipelines behind the CLI.

use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nlp::{solve, Encoding, SolveStatus, SolverOptions};
use crate::reform::reformulate;
use crate::scenario::{builtin, builtin_names, Dynamics, Scenario};
use crate::trajectory::Trajectory;
use crate::tree::{TreeNode, TreeOptions};

/// Sharpness grid searched for the smooth baseline on linear scenarios.
pub const K_GRID: [f64; 7] = [1.0, 2.0, 5.0, 10.0, 25.0, 50.0, 100.0];
/// Sharpness used for the smooth baseline on nonlinear scenarios.
pub const DEFAULT_K: f64 = 25.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Exact,
    SmoothApprox,
    Both,
}

impl Method {
    fn expand(self) -> &'static [Method] {
        match self {
            Method::Exact => &[Method::Exact],
            Method::SmoothApprox => &[Method::SmoothApprox],
            Method::Both => &[Method::Exact, Method::SmoothApprox],
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Exact => "exact",
            Method::SmoothApprox => "smooth-approx",
            Method::Both => "both",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "exact" => Ok(Method::Exact),
            "smooth-approx" | "smooth" => Ok(Method::SmoothApprox),
            "both" => Ok(Method::Both),
            _ => Err(format!("unknown method `{s}` (expected exact, smooth-approx or both)")),
        }
    }
}

/// Source of the initial trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitKind {
    /// The scenario's reference trajectory; auxiliaries from its warm start.
    Reference,
    /// States and inputs drawn from a seeded normal distribution.
    Random,
    /// Zero-input rollout from `x0` with uniform simplex weights.
    Zero,
}

impl FromStr for InitKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "reference" => Ok(InitKind::Reference),
            "random" => Ok(InitKind::Random),
            "zero" => Ok(InitKind::Zero),
            _ => Err(format!("unknown init `{s}` (expected reference, random or zero)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    /// Built-in scenario name or path to a scenario JSON file.
    pub scenario: String,
    pub method: Method,
    /// Smooth-baseline sharpness; chosen automatically when absent.
    pub k: Option<f64>,
    pub horizon: Option<usize>,
    pub seed: u64,
    pub init: InitKind,
    /// Standard deviation of random initial guesses.
    pub init_scale: f64,
    pub solver: SolverOptions,
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            scenario: "two-target".into(),
            method: Method::Both,
            k: None,
            horizon: None,
            seed: 0,
            init: InitKind::Reference,
            init_scale: 1.0,
            solver: SolverOptions::default(),
            out: None,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if let Some(k) = self.k {
            if !(k > 0.0 && k.is_finite()) {
                return Err(Error::Sharpness(k));
            }
        }
        if !(self.init_scale >= 0.0 && self.init_scale.is_finite()) {
            return Err(Error::Scenario(format!(
                "init scale must be nonnegative, got {}",
                self.init_scale
            )));
        }
        Ok(())
    }
}

/// Loads a built-in scenario by name or a scenario file by path.
pub fn load_scenario(source: &str, horizon: Option<usize>) -> Result<Scenario> {
    if builtin_names().contains(&source) {
        return builtin(source, horizon);
    }
    let s = Scenario::load(Path::new(source))?;
    match horizon {
        Some(t) if t != s.horizon() => s.with_horizon(t),
        _ => Ok(s),
    }
}

/// Initial trajectory for `kind`. Random guesses keep `x_0` at the
/// scenario's initial state.
pub fn initial_trajectory(s: &Scenario, kind: InitKind, seed: u64, scale: f64) -> Trajectory {
    match kind {
        InitKind::Reference => s.reference_trajectory(),
        InitKind::Zero => s.rollout(&vec![vec![0.0; s.input_dim()]; s.horizon() + 1]),
        InitKind::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut x = Trajectory::zeros(s.state_dim(), s.input_dim(), s.horizon());
            for t in 0..=s.horizon() {
                for v in x.state_mut(t) {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    *v = scale * z;
                }
                for v in x.input_mut(t) {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    *v = scale * z;
                }
            }
            x.state_mut(0).copy_from_slice(&s.spec.x0);
            x
        }
    }
}

/// Result of one method on one initial guess.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MethodResult {
    pub method: Method,
    /// Sharpness, for the smooth baseline.
    pub k: Option<f64>,
    pub status: SolveStatus,
    /// `−α·ρ + Σ xᵀQx + uᵀRu` with the discrete robustness `ρ`.
    pub objective: f64,
    /// Objective of the solved program.
    pub nlp_objective: f64,
    /// Discrete robustness of the returned trajectory.
    pub robustness: f64,
    pub max_violation: f64,
    pub kkt_residual: f64,
    pub outer_iterations: usize,
    pub inner_iterations: usize,
    pub solve_time: f64,
    pub message: String,
    pub trajectory: Trajectory,
}

impl MethodResult {
    /// Solver success with a trajectory that satisfies the specification.
    pub fn satisfies(&self) -> bool {
        self.status.is_success() && self.robustness >= 0.0
    }
}

/// Solves the scenario with one concrete method from `init`.
///
/// The exact encoding starts its auxiliaries from the warm start of `init`,
/// or from uniform simplex weights when `uniform` is set.
pub fn run_method(
    s: &Scenario,
    tree: &TreeNode,
    method: Method,
    k: f64,
    init: &Trajectory,
    uniform: bool,
    opts: &SolverOptions,
) -> Result<MethodResult> {
    let (p, z, k) = match method {
        Method::Exact => {
            let r = reformulate(tree);
            let aux = if uniform {
                r.uniform_start(init)
            } else {
                r.warm_start(init)
            };
            let p = s.assemble(Encoding::Exact(&r))?;
            let z = p.pack(init, Some(&aux))?;
            (p, z, None)
        }
        Method::SmoothApprox => {
            let p = s.assemble(Encoding::Smooth { tree, k })?;
            let z = p.pack(init, None)?;
            (p, z, Some(k))
        }
        Method::Both => return Err(Error::Scenario("run_method needs a single method".into())),
    };
    let report = solve(&p, &z, opts)?;
    let trajectory = p.trajectory(&report.x);
    let robustness = s.formula.robustness(&trajectory, 0)?;
    Ok(MethodResult {
        method,
        k,
        status: report.status,
        objective: s.original_objective_with(&trajectory, robustness),
        nlp_objective: report.objective,
        robustness,
        max_violation: report.max_violation,
        kkt_residual: report.kkt_residual,
        outer_iterations: report.outer_iterations,
        inner_iterations: report.inner_iterations,
        solve_time: report.wall_time,
        message: report.message,
        trajectory,
    })
}

/// Smooth baseline. With `k` unset, linear scenarios try every value of
/// [`K_GRID`] and keep the best satisfying result (lowest objective, lowest
/// `k` on ties); nonlinear scenarios use [`DEFAULT_K`].
pub fn run_baseline(
    s: &Scenario,
    tree: &TreeNode,
    k: Option<f64>,
    init: &Trajectory,
    opts: &SolverOptions,
) -> Result<MethodResult> {
    let grid: Vec<f64> = match k {
        Some(k) => vec![k],
        None if s.spec.dynamics.is_affine() => K_GRID.to_vec(),
        None => vec![DEFAULT_K],
    };
    let mut best: Option<MethodResult> = None;
    for k in grid {
        let r = run_method(s, tree, Method::SmoothApprox, k, init, false, opts)?;
        let better = match &best {
            None => true,
            Some(b) => match (r.satisfies(), b.satisfies()) {
                (true, false) => true,
                (false, true) => false,
                _ => r.objective < b.objective,
            },
        };
        if better {
            best = Some(r);
        }
    }
    Ok(best.expect("grid is never empty"))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub version: String,
    pub config: RunConfig,
    pub scenario: String,
    pub horizon: usize,
    pub results: Vec<MethodResult>,
}

/// Full pipeline for one configuration. Every method starts from the same
/// initial trajectory. Writes `report.json` and one CSV per method when
/// `config.out` is set.
pub fn cmd_solve(config: &RunConfig) -> Result<RunReport> {
    config.validate()?;
    let s = load_scenario(&config.scenario, config.horizon)?;
    let tree = s.tree(TreeOptions::default())?;
    let init = initial_trajectory(&s, config.init, config.seed, config.init_scale);
    let uniform = config.init == InitKind::Zero;
    let mut results = Vec::new();
    for &method in config.method.expand() {
        let r = match method {
            Method::Exact => run_method(&s, &tree, method, 0.0, &init, uniform, &config.solver)?,
            _ => run_baseline(&s, &tree, config.k, &init, &config.solver)?,
        };
        results.push(r);
    }
    let report = RunReport {
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: config.clone(),
        scenario: s.name().to_string(),
        horizon: s.horizon(),
        results,
    };
    if let Some(dir) = &config.out {
        write_outputs(dir, &s, &report)?;
    }
    Ok(report)
}

fn write_outputs(dir: &Path, s: &Scenario, report: &RunReport) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    for r in &report.results {
        let path = dir.join(format!("{}.csv", r.method.as_str()));
        std::fs::write(path, trajectory_csv(&s.spec.dynamics, &r.trajectory))?;
    }
    std::fs::write(dir.join("report.json"), serde_json::to_string_pretty(report)?)?;
    Ok(())
}

/// Column names for the state vector.
pub fn state_names(d: &Dynamics) -> Vec<String> {
    let n = d.state_dim();
    let mut names: Vec<String> = match d {
        Dynamics::Unicycle { .. } => vec!["px".into(), "py".into(), "theta".into()],
        Dynamics::Lti { .. } if n == 4 => vec!["px".into(), "py".into(), "vx".into(), "vy".into()],
        Dynamics::Lti { .. } => Vec::new(),
    };
    if names.is_empty() {
        names = (0..n)
            .map(|i| match i {
                0 => "px".to_string(),
                1 => "py".to_string(),
                _ => format!("x{}", i + 1),
            })
            .collect();
    }
    names
}

/// `t,px,py,...,u1,...` with one row per step.
pub fn trajectory_csv(d: &Dynamics, x: &Trajectory) -> String {
    let mut out = String::from("t");
    for name in state_names(d) {
        out.push(',');
        out.push_str(&name);
    }
    for j in 0..x.input_dim() {
        let _ = write!(out, ",u{}", j + 1);
    }
    out.push('\n');
    for t in 0..=x.horizon() {
        let _ = write!(out, "{t}");
        for v in x.state(t).iter().chain(x.input(t)) {
            let _ = write!(out, ",{v:?}");
        }
        out.push('\n');
    }
    out
}

/// Parses a CSV written by [`trajectory_csv`] back into a trajectory.
pub fn parse_trajectory_csv(text: &str, n: usize) -> Result<Trajectory> {
    let mut states = Vec::new();
    let mut inputs = Vec::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        let cols: Vec<f64> = line
            .split(',')
            .skip(1)
            .map(|c| c.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Scenario(format!("csv line {}: {e}", i + 1)))?;
        if cols.len() < n {
            return Err(Error::Dimension(format!(
                "csv line {} has {} values",
                i + 1,
                cols.len()
            )));
        }
        states.push(cols[..n].to_vec());
        inputs.push(cols[n..].to_vec());
    }
    Trajectory::from_rows(&states, &inputs)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CompareRow {
    pub seed: u64,
    pub method: Method,
    pub k: Option<f64>,
    pub status: SolveStatus,
    pub objective: f64,
    pub robustness: f64,
    pub solve_time: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: Method,
    /// Best objective over satisfying runs.
    pub best_objective: Option<f64>,
    /// Robustness of the run with the best objective.
    pub best_robustness: Option<f64>,
    pub median_solve_time: f64,
    /// Runs the solver did not finish as optimal or feasible.
    pub infeasible: usize,
    pub satisfied: usize,
    pub runs: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CompareSummary {
    pub version: String,
    pub config: RunConfig,
    pub seeds: Vec<u64>,
    pub rows: Vec<CompareRow>,
    pub summary: Vec<MethodSummary>,
}

impl CompareSummary {
    /// Plain-text table of the aggregate columns.
    pub fn table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<14} {:>14} {:>12} {:>12} {:>11} {:>10}",
            "method", "best objective", "robustness", "median time", "infeasible", "satisfied"
        );
        for m in &self.summary {
            let fmt_opt = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.4}"));
            let _ = writeln!(
                out,
                "{:<14} {:>14} {:>12} {:>11.3}s {:>11} {:>10}",
                m.method.as_str(),
                fmt_opt(m.best_objective),
                fmt_opt(m.best_robustness),
                m.median_solve_time,
                format!("{}/{}", m.infeasible, m.runs),
                m.satisfied
            );
        }
        out
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    if v.len() % 2 == 1 {
        v[mid]
    } else {
        0.5 * (v[mid - 1] + v[mid])
    }
}

/// Seeds `config.seed .. config.seed + seeds`, each solved by every method
/// from the same initial guess (random unless configured otherwise). Seeds
/// run in parallel; rows are sorted by seed.
pub fn cmd_compare(config: &RunConfig, seeds: usize) -> Result<CompareSummary> {
    config.validate()?;
    if seeds == 0 {
        return Err(Error::Scenario("compare needs at least one seed".into()));
    }
    let s = load_scenario(&config.scenario, config.horizon)?;
    let tree = s.tree(TreeOptions::default())?;
    let seed_list: Vec<u64> = (0..seeds as u64).map(|i| config.seed.wrapping_add(i)).collect();
    let per_seed: Vec<Result<Vec<CompareRow>>> = seed_list
        .par_iter()
        .map(|&seed| {
            let init = initial_trajectory(&s, config.init, seed, config.init_scale);
            let uniform = config.init == InitKind::Zero;
            let mut rows = Vec::new();
            for &method in config.method.expand() {
                let r = match method {
                    Method::Exact => run_method(&s, &tree, method, 0.0, &init, uniform, &config.solver)?,
                    _ => run_baseline(&s, &tree, config.k, &init, &config.solver)?,
                };
                rows.push(CompareRow {
                    seed,
                    method,
                    k: r.k,
                    status: r.status,
                    objective: r.objective,
                    robustness: r.robustness,
                    solve_time: r.solve_time,
                });
            }
            Ok(rows)
        })
        .collect();
    let mut rows = Vec::new();
    for r in per_seed {
        rows.extend(r?);
    }
    rows.sort_by_key(|r| (r.seed, r.method != Method::Exact));
    let summary = config
        .method
        .expand()
        .iter()
        .map(|&method| {
            let mine: Vec<&CompareRow> = rows.iter().filter(|r| r.method == method).collect();
            let best = mine
                .iter()
                .filter(|r| r.status.is_success() && r.robustness >= 0.0)
                .min_by(|a, b| a.objective.total_cmp(&b.objective));
            MethodSummary {
                method,
                best_objective: best.map(|r| r.objective),
                best_robustness: best.map(|r| r.robustness),
                median_solve_time: median(mine.iter().map(|r| r.solve_time).collect()),
                infeasible: mine.iter().filter(|r| !r.status.is_success()).count(),
                satisfied: mine
                    .iter()
                    .filter(|r| r.status.is_success() && r.robustness >= 0.0)
                    .count(),
                runs: mine.len(),
            }
        })
        .collect();
    let out = CompareSummary {
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: config.clone(),
        seeds: seed_list,
        rows,
        summary,
    };
    if let Some(dir) = &config.out {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("compare.json"), serde_json::to_string_pretty(&out)?)?;
    }
    Ok(out)
}
