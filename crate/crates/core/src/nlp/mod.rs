//! Smooth nonlinear programs with exact gradients, their assembly from a
//! trajectory-optimization problem, and an augmented-Lagrangian solver.

mod assemble;
mod solver;

use std::fmt::Write as _;
use std::ops::Range;

pub use assemble::{assemble, Boxes, Encoding, Weights};
pub use solver::{solve, SolveReport, SolveStatus, SolverOptions};

use crate::expr::{fd_check, DiffFunction, Workspace};

/// Ordered decision variables with bounds.
#[derive(Debug, Clone, Default)]
pub struct VarSpace {
    pub names: Vec<String>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub states: Range<usize>,
    pub inputs: Range<usize>,
    pub rho: Range<usize>,
    pub lambda: Range<usize>,
    /// Disjoint blocks whose entries are nonnegative and sum to one. The
    /// matching equalities stay in the problem; the solver also keeps these
    /// blocks on the simplex by projection.
    pub simplices: Vec<Range<usize>>,
}

impl VarSpace {
    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    fn push(&mut self, name: String, lower: f64, upper: f64) -> usize {
        self.names.push(name);
        self.lower.push(lower);
        self.upper.push(upper);
        self.names.len() - 1
    }

    /// Clamps `x` into the bounds and projects every simplex block onto
    /// the simplex, in place.
    pub fn project(&self, x: &mut [f64]) {
        // Simplex blocks first: their bounds contain the simplex, so the
        // clamp below leaves them unchanged.
        for blk in &self.simplices {
            project_simplex(&mut x[blk.clone()]);
        }
        for ((v, lo), hi) in x.iter_mut().zip(&self.lower).zip(&self.upper) {
            *v = v.clamp(*lo, *hi);
        }
    }
}

/// Euclidean projection onto `{v ≥ 0, Σv = 1}`.
pub fn project_simplex(v: &mut [f64]) {
    if v.is_empty() {
        return;
    }
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (i, &s) in sorted.iter().enumerate() {
        cumulative += s;
        let t = (cumulative - 1.0) / (i + 1) as f64;
        if s - t > 0.0 {
            theta = t;
        }
    }
    for x in v.iter_mut() {
        *x = (*x - theta).max(0.0);
    }
}

/// A labelled scalar constraint function.
#[derive(Debug, Clone)]
pub struct Constraint {
    pub label: String,
    pub f: DiffFunction,
}

/// `min Σ objective terms` subject to `eq = 0`, `ineq ≥ 0` and variable bounds.
#[derive(Debug, Clone)]
pub struct NlpProblem {
    pub vars: VarSpace,
    /// Summed left to right.
    pub objective: Vec<DiffFunction>,
    pub eq: Vec<Constraint>,
    pub ineq: Vec<Constraint>,
    /// Trajectory shape.
    pub n: usize,
    pub m: usize,
    pub horizon: usize,
}

impl NlpProblem {
    pub fn objective_value(&self, x: &[f64], ws: &mut Workspace) -> f64 {
        self.objective.iter().fold(0.0, |acc, f| acc + f.value(x, ws))
    }

    /// Largest violation of any constraint or bound at `x`.
    pub fn max_violation(&self, x: &[f64], ws: &mut Workspace) -> f64 {
        let mut worst: f64 = 0.0;
        for c in &self.eq {
            worst = worst.max(c.f.value(x, ws).abs());
        }
        for c in &self.ineq {
            worst = worst.max(-c.f.value(x, ws));
        }
        for ((v, lo), hi) in x.iter().zip(&self.vars.lower).zip(&self.vars.upper) {
            worst = worst.max(lo - v).max(v - hi);
        }
        worst
    }

    /// Every function of the problem with a display label.
    pub fn functions(&self) -> impl Iterator<Item = (String, &DiffFunction)> {
        let obj = self
            .objective
            .iter()
            .enumerate()
            .map(|(i, f)| (format!("objective[{i}]"), f));
        let eq = self.eq.iter().map(|c| (c.label.clone(), &c.f));
        let ineq = self.ineq.iter().map(|c| (c.label.clone(), &c.f));
        obj.chain(eq).chain(ineq)
    }

    /// Worst [`fd_check`] error over every function at `x`.
    pub fn max_gradient_error(&self, x: &[f64], step: f64) -> (f64, String) {
        let mut worst = (0.0, String::new());
        for (label, f) in self.functions() {
            let e = fd_check(f, x, step);
            if e > worst.0 {
                worst = (e, label);
            }
        }
        worst
    }

    /// Splits a full point into its state and input trajectory.
    pub fn trajectory(&self, x: &[f64]) -> crate::trajectory::Trajectory {
        crate::trajectory::Trajectory::from_flat(
            self.n,
            self.m,
            x[self.vars.states.clone()].to_vec(),
            x[self.vars.inputs.clone()].to_vec(),
        )
        .expect("layout matches the problem shape")
    }

    /// Human-readable listing of variables and constraints.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "variables {} (states {}, inputs {}, rho {}, lambda {})",
            self.vars.len(),
            self.vars.states.len(),
            self.vars.inputs.len(),
            self.vars.rho.len(),
            self.vars.lambda.len()
        );
        for i in 0..self.vars.len() {
            let _ = writeln!(
                out,
                "  {} in [{}, {}]",
                self.vars.names[i], self.vars.lower[i], self.vars.upper[i]
            );
        }
        let _ = writeln!(out, "objective terms {}", self.objective.len());
        let _ = writeln!(out, "equalities {}", self.eq.len());
        for c in &self.eq {
            let _ = writeln!(out, "  {} = 0", c.label);
        }
        let _ = writeln!(out, "inequalities {}", self.ineq.len());
        for c in &self.ineq {
            let _ = writeln!(out, "  {} >= 0", c.label);
        }
        out
    }
}
