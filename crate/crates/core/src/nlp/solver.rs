//! Augmented-Lagrangian solver with a projected L-BFGS inner minimizer.
//!
//! Equalities `c(z) = 0` and inequalities `g(z) ≥ 0` enter the
//! Powell–Hestenes–Rockafellar function
//!
//! ```text
//! L(z) = f(z) − yᵀc + (μ/2)‖c‖² + (1/2μ) Σ (max(0, wⱼ − μ gⱼ)² − wⱼ²)
//! ```
//!
//! which is minimized over the variable box; multipliers are then updated by
//! `y ← y − μ c` and `w ← max(0, w − μ g)`.

use std::collections::VecDeque;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::{NlpProblem, VarSpace};
use crate::error::{Error, Result};
use crate::expr::{DiffFunction, Workspace};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub kkt_tol: f64,
    pub feas_tol: f64,
    pub max_outer: usize,
    /// Inner iterations per outer iteration.
    pub max_inner: usize,
    /// L-BFGS history length.
    pub memory: usize,
    pub initial_penalty: f64,
    pub max_penalty: f64,
    /// Wall-clock budget in seconds.
    pub time_limit: f64,
    /// Print one line per outer iteration to stderr.
    #[serde(default)]
    pub verbose: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            kkt_tol: 1e-6,
            feas_tol: 1e-6,
            max_outer: 50,
            max_inner: 1000,
            memory: 10,
            initial_penalty: 10.0,
            max_penalty: 1e8,
            time_limit: 600.0,
            verbose: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    /// KKT and feasibility tolerances met.
    Optimal,
    /// Feasible within tolerance but not certified stationary.
    Feasible,
    /// Violation stalled above tolerance.
    Infeasible,
    /// Iteration or time budget exhausted while still infeasible.
    MaxIter,
}

impl SolveStatus {
    pub fn is_success(self) -> bool {
        matches!(self, SolveStatus::Optimal | SolveStatus::Feasible)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::Feasible => "feasible",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::MaxIter => "max_iter",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveReport {
    pub status: SolveStatus,
    pub objective: f64,
    pub max_violation: f64,
    pub kkt_residual: f64,
    pub outer_iterations: usize,
    pub inner_iterations: usize,
    pub wall_time: f64,
    pub message: String,
    pub x: Vec<f64>,
}

struct Evaluator<'p> {
    p: &'p NlpProblem,
    ws: Workspace,
    local: Vec<f64>,
    c: Vec<f64>,
    g: Vec<f64>,
    /// Gauss-Newton diagonal of the penalty terms from the last gradient.
    diag: Vec<f64>,
    /// Inequalities are solved as `g(z) ≥ margin`.
    margin: f64,
}

impl<'p> Evaluator<'p> {
    fn new(p: &'p NlpProblem, margin: f64) -> Self {
        Self {
            p,
            ws: Workspace::new(),
            local: Vec::new(),
            c: vec![0.0; p.eq.len()],
            g: vec![0.0; p.ineq.len()],
            diag: vec![0.0; p.vars.len()],
            margin,
        }
    }

    /// Fills `self.c` and `self.g`; returns the objective.
    fn values(&mut self, z: &[f64]) -> f64 {
        for (ci, con) in self.c.iter_mut().zip(&self.p.eq) {
            *ci = con.f.value(z, &mut self.ws);
        }
        for (gi, con) in self.g.iter_mut().zip(&self.p.ineq) {
            *gi = con.f.value(z, &mut self.ws) - self.margin;
        }
        self.p.objective_value(z, &mut self.ws)
    }

    fn violation(&self) -> f64 {
        let eq = self.c.iter().map(|v| v.abs());
        let ineq = self.g.iter().map(|v| (-v).max(0.0));
        eq.chain(ineq).fold(0.0, f64::max)
    }

    fn worst_label(&self) -> &str {
        let mut worst = (0.0, "");
        for (v, con) in self.c.iter().zip(&self.p.eq) {
            if v.abs() > worst.0 {
                worst = (v.abs(), &con.label);
            }
        }
        for (v, con) in self.g.iter().zip(&self.p.ineq) {
            if -v > worst.0 {
                worst = (-v, &con.label);
            }
        }
        worst.1
    }

    fn al_value(&mut self, z: &[f64], m: &Multipliers) -> f64 {
        let f = self.values(z);
        m.combine(f, &self.c, &self.g)
    }

    /// Adds `coef·∇f` to `grad` and `curv·(∂f)²` to the diagonal.
    fn scatter(&mut self, f: &DiffFunction, z: &[f64], coef: f64, curv: f64, grad: &mut [f64]) -> f64 {
        self.local.clear();
        self.local.resize(f.arity(), 0.0);
        let v = f.value_grad(z, &mut self.ws, &mut self.local);
        if coef != 0.0 || curv != 0.0 {
            for (&i, d) in f.vars().iter().zip(&self.local) {
                grad[i] += coef * d;
                self.diag[i] += curv * d * d;
            }
        }
        v
    }

    fn al_grad(&mut self, z: &[f64], m: &Multipliers, grad: &mut [f64]) -> f64 {
        grad.fill(0.0);
        self.diag.fill(0.0);
        let p = self.p;
        let mut f = 0.0;
        for term in &p.objective {
            f += self.scatter(term, z, 1.0, 0.0, grad);
        }
        // Constraint values first, then gradients scaled by the AL coefficient.
        for i in 0..p.eq.len() {
            self.c[i] = p.eq[i].f.value(z, &mut self.ws);
            let coef = -m.y[i] + m.mu * self.c[i];
            self.scatter(&p.eq[i].f, z, coef, m.mu, grad);
        }
        for j in 0..p.ineq.len() {
            self.g[j] = p.ineq[j].f.value(z, &mut self.ws) - self.margin;
            let coef = -(m.w[j] - m.mu * self.g[j]).max(0.0);
            let curv = if coef < 0.0 { m.mu } else { 0.0 };
            self.scatter(&p.ineq[j].f, z, coef, curv, grad);
        }
        m.combine(f, &self.c, &self.g)
    }
}

struct Multipliers {
    y: Vec<f64>,
    w: Vec<f64>,
    mu: f64,
}

impl Multipliers {
    fn combine(&self, f: f64, c: &[f64], g: &[f64]) -> f64 {
        let mut v = f;
        for (ci, yi) in c.iter().zip(&self.y) {
            v += -yi * ci + 0.5 * self.mu * ci * ci;
        }
        for (gj, wj) in g.iter().zip(&self.w) {
            let s = (wj - self.mu * gj).max(0.0);
            v += (s * s - wj * wj) / (2.0 * self.mu);
        }
        v
    }
}

/// `‖P(z − g) − z‖∞` for the projection `P` onto the feasible box and
/// simplices.
fn projected_gradient_norm(z: &[f64], g: &[f64], vars: &VarSpace) -> f64 {
    let mut w: Vec<f64> = z.iter().zip(g).map(|(a, b)| a - b).collect();
    vars.project(&mut w);
    w.iter().zip(z).fold(0.0, |acc, (a, b)| acc.max((a - b).abs()))
}

/// Coordinates a descent step may move. Box coordinates at a bound with the
/// gradient pointing outward are fixed; a simplex coordinate at zero is
/// fixed when its gradient is no smaller than that of any positive entry of
/// its block.
fn free_set(z: &[f64], grad: &[f64], vars: &VarSpace) -> Vec<bool> {
    let (lo, hi) = (&vars.lower, &vars.upper);
    let mut free: Vec<bool> = (0..z.len())
        .map(|i| !((z[i] <= lo[i] && grad[i] > 0.0) || (z[i] >= hi[i] && grad[i] < 0.0)))
        .collect();
    for blk in &vars.simplices {
        let g_min = blk
            .clone()
            .filter(|&i| z[i] > 0.0)
            .map(|i| grad[i])
            .fold(f64::INFINITY, f64::min);
        for i in blk.clone() {
            free[i] = z[i] > 0.0 || grad[i] < g_min;
        }
    }
    free
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

struct Inner {
    iterations: usize,
    pg: f64,
    stalled: bool,
    timed_out: bool,
}

struct Lbfgs {
    pairs: VecDeque<(Vec<f64>, Vec<f64>, f64)>,
    memory: usize,
}

impl Lbfgs {
    /// `−H·grad` restricted to the coordinates in `free`, with the initial
    /// matrix `γ·diag(1/d)`.
    fn direction(&self, grad: &[f64], free: &[bool], d: &[f64]) -> Vec<f64> {
        let mut q: Vec<f64> = grad.iter().zip(free).map(|(g, f)| if *f { -g } else { 0.0 }).collect();
        let mut alphas = Vec::with_capacity(self.pairs.len());
        for (s, y, rho) in self.pairs.iter().rev() {
            let a = rho * dot(s, &q);
            for (qi, yi) in q.iter_mut().zip(y) {
                *qi -= a * yi;
            }
            alphas.push(a);
        }
        if let Some((s, y, _)) = self.pairs.back() {
            let yhy: f64 = y.iter().zip(d).map(|(yi, di)| yi * yi / di).sum();
            let gamma = dot(s, y) / yhy;
            q.iter_mut().zip(d).for_each(|(v, di)| *v *= gamma / di);
        }
        for ((s, y, rho), a) in self.pairs.iter().zip(alphas.iter().rev()) {
            let b = rho * dot(y, &q);
            for (qi, si) in q.iter_mut().zip(s) {
                *qi += (a - b) * si;
            }
        }
        for (qi, f) in q.iter_mut().zip(free) {
            if !f {
                *qi = 0.0;
            }
        }
        q
    }

    fn push(&mut self, s: Vec<f64>, y: Vec<f64>) {
        let sy = dot(&s, &y);
        let yy = dot(&y, &y);
        if sy > f64::EPSILON * yy && sy > 0.0 {
            if self.pairs.len() == self.memory {
                self.pairs.pop_front();
            }
            self.pairs.push_back((s, y, 1.0 / sy));
        }
    }
}

/// Curvature added to every diagonal entry of the initial L-BFGS matrix.
const DIAG_FLOOR: f64 = 1.0;

fn minimize(
    ev: &mut Evaluator<'_>,
    z: &mut [f64],
    m: &Multipliers,
    tol: f64,
    opts: &SolverOptions,
    deadline: Instant,
) -> Inner {
    let vars = &ev.p.vars;
    let n = z.len();
    let mut grad = vec![0.0; n];
    let mut f = ev.al_grad(z, m, &mut grad);
    let mut mem = Lbfgs {
        pairs: VecDeque::new(),
        memory: opts.memory.max(1),
    };
    let mut trial = vec![0.0; n];
    let mut out = Inner {
        iterations: 0,
        pg: projected_gradient_norm(z, &grad, vars),
        stalled: false,
        timed_out: false,
    };
    while out.pg > tol && out.iterations < opts.max_inner {
        if Instant::now() >= deadline {
            out.timed_out = true;
            break;
        }
        let free = free_set(z, &grad, vars);
        let mut accepted = None;
        for attempt in 0..2 {
            let d = if attempt == 0 && !mem.pairs.is_empty() {
                let scale: Vec<f64> = ev.diag.iter().map(|v| v + DIAG_FLOOR).collect();
                let mut d = mem.direction(&grad, &free, &scale);
                // Keep the mass of every simplex block constant.
                for blk in &vars.simplices {
                    let moving: Vec<usize> = blk.clone().filter(|&i| free[i]).collect();
                    if !moving.is_empty() {
                        let mean = moving.iter().map(|&i| d[i]).sum::<f64>() / moving.len() as f64;
                        moving.iter().for_each(|&i| d[i] -= mean);
                    }
                }
                d
            } else {
                // Projected steepest descent: P(z − g/‖g‖∞) − z.
                mem.pairs.clear();
                let gmax = grad.iter().fold(0.0f64, |a, g| a.max(g.abs())).max(1.0);
                let mut target: Vec<f64> = z.iter().zip(&grad).map(|(zi, g)| zi - g / gmax).collect();
                vars.project(&mut target);
                target.iter().zip(z.iter()).map(|(t, zi)| t - zi).collect()
            };
            if dot(&d, &grad) >= 0.0 || d.iter().any(|v| !v.is_finite()) {
                continue;
            }
            let mut step = 1.0;
            for _ in 0..60 {
                for i in 0..n {
                    trial[i] = z[i] + step * d[i];
                }
                vars.project(&mut trial);
                let ft = ev.al_value(&trial, m);
                let decrease: f64 = (0..n).map(|i| grad[i] * (trial[i] - z[i])).sum();
                if ft.is_finite() && ft < f && ft <= f + 1e-4 * decrease.min(0.0) {
                    accepted = Some(ft);
                    break;
                }
                step *= 0.5;
            }
            if accepted.is_some() {
                break;
            }
        }
        if accepted.is_none() {
            out.stalled = true;
            break;
        }
        let mut new_grad = vec![0.0; n];
        f = ev.al_grad(&trial, m, &mut new_grad);
        let s: Vec<f64> = (0..n).map(|i| trial[i] - z[i]).collect();
        let y: Vec<f64> = (0..n).map(|i| new_grad[i] - grad[i]).collect();
        mem.push(s, y);
        z.copy_from_slice(&trial);
        grad = new_grad;
        out.iterations += 1;
        out.pg = projected_gradient_norm(z, &grad, vars);
    }
    out
}

/// Solves `p` from `init`. The run is deterministic for fixed inputs.
pub fn solve(p: &NlpProblem, init: &[f64], opts: &SolverOptions) -> Result<SolveReport> {
    let start = Instant::now();
    let deadline = start + Duration::from_secs_f64(opts.time_limit.clamp(0.0, 1e9));
    if init.len() != p.vars.len() {
        return Err(Error::Dimension(format!(
            "initial point has {} entries, problem has {} variables",
            init.len(),
            p.vars.len()
        )));
    }
    let mut z = init.to_vec();
    p.vars.project(&mut z);
    // Tightening by the feasibility tolerance makes a point accepted as
    // feasible satisfy every inequality exactly.
    let mut ev = Evaluator::new(p, opts.feas_tol.max(0.0));
    let f0 = ev.values(&z);
    if !f0.is_finite() || ev.c.iter().chain(&ev.g).any(|v| !v.is_finite()) {
        return Err(Error::Solver("non-finite function value at the initial point".into()));
    }

    let mut m = Multipliers {
        y: vec![0.0; p.eq.len()],
        w: vec![0.0; p.ineq.len()],
        mu: opts.initial_penalty,
    };
    let mut viol = ev.violation();
    // Violations after each outer iteration spent at the maximum penalty.
    let mut history = Vec::new();
    let mut kkt = f64::INFINITY;
    let mut status = None;
    let mut inner_total = 0;
    let mut outer = 0;
    let mut message = String::new();
    let mut progress_prev = f64::INFINITY;
    // Lowest-objective iterate within the feasibility tolerance.
    let mut best_feasible: Option<(f64, Vec<f64>)> = None;

    while outer < opts.max_outer {
        outer += 1;
        let tol = opts.kkt_tol.max(0.1f64.powi(outer as i32));
        let inner = minimize(&mut ev, &mut z, &m, tol, opts, deadline);
        inner_total += inner.iterations;

        let f = ev.values(&z);
        viol = ev.violation();
        // Feasibility-complementarity measure that drives the penalty.
        let mut progress = ev.c.iter().fold(0.0f64, |a, c| a.max(c.abs()));
        for (wj, gj) in m.w.iter().zip(&ev.g) {
            progress = progress.max(gj.min(wj / m.mu).abs());
        }
        if viol <= opts.feas_tol && best_feasible.as_ref().is_none_or(|(bf, _)| f < *bf) {
            best_feasible = Some((f, z.clone()));
        }
        let mut compl: f64 = 0.0;
        for (wj, gj) in m.w.iter_mut().zip(&ev.g) {
            *wj = (*wj - m.mu * gj).clamp(0.0, 1e12);
            compl = compl.max(gj.min(*wj).abs());
        }
        for (yi, ci) in m.y.iter_mut().zip(&ev.c) {
            *yi = (*yi - m.mu * ci).clamp(-1e12, 1e12);
        }
        kkt = inner.pg.max(compl);
        if m.mu >= opts.max_penalty {
            history.push(viol);
        }
        if opts.verbose {
            let worst = ev.worst_label().to_string();
            eprintln!(
                "outer {outer:3} f {:.6e} viol {viol:.3e} ({worst}) pg {:.3e} compl {compl:.3e} mu {:.1e} inner {}{}",
                p.objective_value(&z, &mut ev.ws),
                inner.pg,
                m.mu,
                inner.iterations,
                if inner.stalled { " stalled" } else { "" }
            );
        }

        if kkt <= opts.kkt_tol && viol <= opts.feas_tol {
            status = Some(SolveStatus::Optimal);
            break;
        }
        if inner.timed_out {
            message = "time limit reached".into();
            break;
        }
        if inner.stalled {
            message = format!("line search stalled in outer iteration {outer}");
        }
        if progress > 0.5 * progress_prev {
            m.mu = (m.mu * 10.0).min(opts.max_penalty);
        }
        progress_prev = progress;
        if m.mu >= opts.max_penalty && viol > opts.feas_tol && stalled(&history) {
            status = Some(SolveStatus::Infeasible);
            message = "constraint violation stalled at maximum penalty".into();
            break;
        }
    }

    if viol > opts.feas_tol {
        if let Some((_, best)) = best_feasible {
            z = best;
            ev.values(&z);
            viol = ev.violation();
            message = format!("returning the best feasible iterate; {message}");
            status = Some(SolveStatus::Feasible);
        }
    }
    let status = status.unwrap_or(if viol <= opts.feas_tol {
        SolveStatus::Feasible
    } else if stalled(&history) {
        SolveStatus::Infeasible
    } else {
        SolveStatus::MaxIter
    });
    let objective = p.objective_value(&z, &mut ev.ws);
    let max_violation = p.max_violation(&z, &mut ev.ws);
    Ok(SolveReport {
        status,
        objective,
        max_violation,
        kkt_residual: kkt,
        outer_iterations: outer,
        inner_iterations: inner_total,
        wall_time: start.elapsed().as_secs_f64(),
        message,
        x: z,
    })
}

/// Less than `1e-10` improvement of the violation over the last five outer
/// iterations.
fn stalled(history: &[f64]) -> bool {
    if history.len() < 6 {
        return false;
    }
    let recent = &history[history.len() - 6..];
    let best_recent = recent[1..].iter().copied().fold(f64::INFINITY, f64::min);
    recent[0] - best_recent < 1e-10
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::TapeBuilder;
    use crate::nlp::Constraint;

    fn problem(
        names: &[&str],
        lower: Vec<f64>,
        upper: Vec<f64>,
        objective: Vec<DiffFunction>,
        eq: Vec<DiffFunction>,
        ineq: Vec<DiffFunction>,
    ) -> NlpProblem {
        let label = |fs: Vec<DiffFunction>| {
            fs.into_iter()
                .enumerate()
                .map(|(i, f)| Constraint {
                    label: format!("c{i}"),
                    f,
                })
                .collect()
        };
        let k = names.len();
        NlpProblem {
            vars: VarSpace {
                names: names.iter().map(|s| s.to_string()).collect(),
                lower,
                upper,
                states: 0..k,
                inputs: k..k,
                rho: k..k,
                lambda: k..k,
                simplices: Vec::new(),
            },
            objective,
            eq: label(eq),
            ineq: label(ineq),
            n: k,
            m: 0,
            horizon: 0,
        }
    }

    fn shifted_square(i: usize, c: f64) -> DiffFunction {
        let mut b = TapeBuilder::new();
        let x = b.var(i);
        let d = b.affine(vec![(x, 1.0)], -c);
        let out = b.square(d);
        b.finish(out)
    }

    fn linear(terms: &[(usize, f64)], offset: f64) -> DiffFunction {
        let mut b = TapeBuilder::new();
        let t = terms.iter().map(|(i, c)| (b.var(*i), *c)).collect();
        let out = b.affine(t, offset);
        b.finish(out)
    }

    #[test]
    fn inequality_active_at_optimum() {
        let inf = f64::INFINITY;
        let p = problem(
            &["x"],
            vec![-inf],
            vec![inf],
            vec![shifted_square(0, 0.0)],
            vec![],
            vec![linear(&[(0, 1.0)], -1.0)],
        );
        let r = solve(&p, &[5.0], &SolverOptions::default()).unwrap();
        assert_eq!(r.status, SolveStatus::Optimal);
        assert!((r.x[0] - 1.0).abs() < 1e-6);
        assert!(r.x[0] >= 1.0, "accepted point must satisfy the inequality exactly");
        assert!((r.objective - 1.0).abs() < 1e-5);
    }

    #[test]
    fn simplex_block_stays_on_simplex() {
        // min (a - 0.2)² + (b - 0.9)² + (c + 1)² over the simplex.
        let p = {
            let mut p = problem(
                &["a", "b", "c"],
                vec![0.0; 3],
                vec![1.0; 3],
                vec![shifted_square(0, 0.2), shifted_square(1, 0.9), shifted_square(2, -1.0)],
                vec![linear(&[(0, 1.0), (1, 1.0), (2, 1.0)], -1.0)],
                vec![],
            );
            p.vars.simplices = std::iter::once(0..3).collect();
            p
        };
        let r = solve(&p, &[1.0, 0.0, 0.0], &SolverOptions::default()).unwrap();
        assert_eq!(r.status, SolveStatus::Optimal);
        assert!(r.x.iter().all(|&v| v >= 0.0));
        assert!((r.x.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!((r.x[0] - 0.15).abs() < 1e-5 && (r.x[1] - 0.85).abs() < 1e-5 && r.x[2] < 1e-12);
    }

    #[test]
    fn equality_projection() {
        let inf = f64::INFINITY;
        let p = problem(
            &["x", "y"],
            vec![-inf; 2],
            vec![inf; 2],
            vec![shifted_square(0, 2.0), shifted_square(1, -1.0)],
            vec![linear(&[(0, 1.0), (1, 1.0)], 0.0)],
            vec![],
        );
        let r = solve(&p, &[0.0, 0.0], &SolverOptions::default()).unwrap();
        assert_eq!(r.status, SolveStatus::Optimal);
        assert!((r.x[0] - 1.5).abs() < 1e-6 && (r.x[1] + 1.5).abs() < 1e-6);
    }

    #[test]
    fn bounds_are_honored() {
        let p = problem(
            &["x"],
            vec![2.0],
            vec![3.0],
            vec![shifted_square(0, 0.0)],
            vec![],
            vec![],
        );
        let r = solve(&p, &[2.5], &SolverOptions::default()).unwrap();
        assert_eq!(r.status, SolveStatus::Optimal);
        assert_eq!(r.x[0], 2.0);
    }

    #[test]
    fn contradictory_constraints_are_infeasible() {
        let inf = f64::INFINITY;
        let p = problem(
            &["x"],
            vec![-inf],
            vec![inf],
            vec![shifted_square(0, 0.0)],
            vec![],
            vec![linear(&[(0, 1.0)], -1.0), linear(&[(0, -1.0)], -1.0)],
        );
        let r = solve(&p, &[0.0], &SolverOptions::default()).unwrap();
        assert!(!r.status.is_success());
        assert!(r.max_violation > 0.5);
    }

    #[test]
    fn deterministic() {
        let inf = f64::INFINITY;
        let p = problem(
            &["x", "y"],
            vec![-inf; 2],
            vec![inf; 2],
            vec![shifted_square(0, 2.0), shifted_square(1, -1.0)],
            vec![linear(&[(0, 1.0), (1, 1.0)], 0.0)],
            vec![linear(&[(0, -1.0)], 1.0)],
        );
        let a = solve(&p, &[0.3, 0.1], &SolverOptions::default()).unwrap();
        let b = solve(&p, &[0.3, 0.1], &SolverOptions::default()).unwrap();
        assert_eq!(a.x, b.x);
        assert_eq!(a.objective.to_bits(), b.objective.to_bits());
        assert_eq!(a.status, b.status);
        assert!((a.x[0] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn rejects_bad_init() {
        let p = problem(
            &["x"],
            vec![0.0],
            vec![1.0],
            vec![shifted_square(0, 0.0)],
            vec![],
            vec![],
        );
        assert!(solve(&p, &[0.0, 1.0], &SolverOptions::default()).is_err());
    }
}
