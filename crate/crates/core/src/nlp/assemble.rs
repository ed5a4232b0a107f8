use std::collections::HashMap;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::{Constraint, NlpProblem, VarSpace};
use crate::error::{Error, Result};
use crate::expr::{NodeId, TapeBuilder};
use crate::formula::Predicate;
use crate::reform::{AuxAssignment, ReformConstraint, Reformulation};
use crate::scenario::Dynamics;
use crate::trajectory::Trajectory;
use crate::tree::{NodeKind, TreeNode};

/// Objective weights `−α ρ + Σ xᵀQx + uᵀRu`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Weights {
    pub alpha: f64,
    pub q: Vec<Vec<f64>>,
    pub r: Vec<Vec<f64>>,
}

impl Weights {
    pub fn validate(&self, n: usize, m: usize) -> Result<()> {
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return Err(Error::Scenario(format!("alpha must be positive, got {}", self.alpha)));
        }
        check_psd("Q", &self.q, n)?;
        check_psd("R", &self.r, m)
    }
}

fn check_psd(name: &str, rows: &[Vec<f64>], dim: usize) -> Result<()> {
    if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
        return Err(Error::Dimension(format!("{name} must be {dim}x{dim}")));
    }
    let mat = DMatrix::from_fn(dim, dim, |i, j| rows[i][j]);
    if mat.iter().any(|v| !v.is_finite()) {
        return Err(Error::Scenario(format!("{name} has non-finite entries")));
    }
    let scale = mat.amax().max(1.0);
    if (&mat - mat.transpose()).amax() > 1e-12 * scale {
        return Err(Error::Scenario(format!("{name} is not symmetric")));
    }
    if dim > 0 && SymmetricEigen::new(mat).eigenvalues.min() < -1e-12 * scale {
        return Err(Error::Scenario(format!("{name} is not positive semidefinite")));
    }
    Ok(())
}

/// Componentwise bounds on states and inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Boxes {
    pub state_lower: Vec<f64>,
    pub state_upper: Vec<f64>,
    pub input_lower: Vec<f64>,
    pub input_upper: Vec<f64>,
}

impl Boxes {
    fn validate(&self, n: usize, m: usize) -> Result<()> {
        let pairs = [
            ("state", &self.state_lower, &self.state_upper, n),
            ("input", &self.input_lower, &self.input_upper, m),
        ];
        for (what, lo, hi, dim) in pairs {
            if lo.len() != dim || hi.len() != dim {
                return Err(Error::Dimension(format!("{what} box must have {dim} entries")));
            }
            if lo.iter().zip(hi).any(|(l, h)| l.is_nan() || h.is_nan() || l > h) {
                return Err(Error::Scenario(format!("{what} box has lower > upper")));
            }
        }
        Ok(())
    }
}

/// How the specification enters the program.
#[derive(Debug, Clone, Copy)]
pub enum Encoding<'a> {
    /// No specification; only dynamics and cost.
    None,
    /// The exact reformulation with auxiliary `ρ` and `λ` variables.
    Exact(&'a Reformulation),
    /// The smooth surrogate `ρ̃` with sharpness `k`, used both in the
    /// objective and in `ρ̃ ≥ 0`.
    Smooth { tree: &'a TreeNode, k: f64 },
}

struct Layout {
    n: usize,
    m: usize,
    inputs: usize,
    rho: usize,
    lambda: usize,
}

impl Layout {
    fn x(&self, t: usize, i: usize) -> usize {
        t * self.n + i
    }

    fn u(&self, t: usize, j: usize) -> usize {
        self.inputs + t * self.m + j
    }
}

/// Transcribes the trajectory-optimization problem into an [`NlpProblem`].
pub fn assemble(
    dynamics: &Dynamics,
    x0: &[f64],
    horizon: usize,
    weights: &Weights,
    boxes: &Boxes,
    encoding: Encoding<'_>,
) -> Result<NlpProblem> {
    dynamics.validate()?;
    let n = dynamics.state_dim();
    let m = dynamics.input_dim();
    if x0.len() != n {
        return Err(Error::Dimension(format!(
            "x0 has {} entries, dynamics need {n}",
            x0.len()
        )));
    }
    weights.validate(n, m)?;
    boxes.validate(n, m)?;
    let needed = match encoding {
        Encoding::None => 0,
        Encoding::Exact(r) => r
            .nodes
            .iter()
            .filter_map(|nd| match nd.kind {
                NodeKind::Leaf { t, .. } => Some(t),
                _ => None,
            })
            .max()
            .unwrap_or(0),
        Encoding::Smooth { tree, k } => {
            crate::smooth::SmoothParams::new(k)?;
            tree.max_time()
        }
    };
    if needed > horizon {
        return Err(Error::Horizon {
            needed,
            available: horizon,
        });
    }

    let steps = horizon + 1;
    let mut vars = VarSpace::default();
    for t in 0..steps {
        for i in 0..n {
            vars.push(format!("x[{t}][{i}]"), boxes.state_lower[i], boxes.state_upper[i]);
        }
    }
    let inputs = vars.len();
    for t in 0..steps {
        for j in 0..m {
            vars.push(format!("u[{t}][{j}]"), boxes.input_lower[j], boxes.input_upper[j]);
        }
    }
    let rho = vars.len();
    let (n_rho, n_lambda) = match encoding {
        Encoding::Exact(r) => (r.rho_count(), r.lambda_count()),
        _ => (0, 0),
    };
    for v in 0..n_rho {
        vars.push(format!("rho[{v}]"), f64::NEG_INFINITY, f64::INFINITY);
    }
    let lambda = vars.len();
    for j in 0..n_lambda {
        vars.push(format!("lambda[{j}]"), 0.0, 1.0);
    }
    vars.states = 0..inputs;
    vars.inputs = inputs..rho;
    vars.rho = rho..lambda;
    vars.lambda = lambda..vars.len();
    if let Encoding::Exact(r) = encoding {
        vars.simplices = r
            .nodes
            .iter()
            .filter_map(|node| node.lambda)
            .map(|blk| lambda + blk.start..lambda + blk.start + blk.len)
            .collect();
    }
    let lay = Layout {
        n,
        m,
        inputs,
        rho,
        lambda,
    };

    let mut eq = Vec::new();
    let mut ineq = Vec::new();
    let mut objective = Vec::new();

    for (i, &v) in x0.iter().enumerate() {
        let mut b = TapeBuilder::new();
        let xi = b.var(lay.x(0, i));
        let out = b.affine(vec![(xi, 1.0)], -v);
        eq.push(Constraint {
            label: format!("x0[{i}]"),
            f: b.finish(out),
        });
    }
    for t in 0..horizon {
        for i in 0..n {
            let mut b = TapeBuilder::new();
            let xs: Vec<NodeId> = (0..n).map(|k| b.var(lay.x(t, k))).collect();
            let us: Vec<NodeId> = (0..m).map(|j| b.var(lay.u(t, j))).collect();
            let next = b.var(lay.x(t + 1, i));
            let fi = dynamics.emit_row(&mut b, i, &xs, &us);
            let out = b.affine(vec![(next, 1.0), (fi, -1.0)], 0.0);
            eq.push(Constraint {
                label: format!("dyn[{t}][{i}]"),
                f: b.finish(out),
            });
        }
    }

    match encoding {
        Encoding::None => {}
        Encoding::Exact(r) => {
            let mut b = TapeBuilder::new();
            let root = b.var(lay.rho + r.root);
            let out = b.affine(vec![(root, -weights.alpha)], 0.0);
            objective.push(b.finish(out));
            exact_constraints(r, &lay, &mut eq, &mut ineq);
        }
        Encoding::Smooth { tree, k } => {
            objective.push(smooth_tape(tree, k, &lay, Some(-weights.alpha)));
            ineq.push(Constraint {
                label: "smooth_rho".into(),
                f: smooth_tape(tree, k, &lay, None),
            });
        }
    }

    for t in 0..steps {
        if let Some(f) = quadratic(&weights.q, |i| lay.x(t, i)) {
            objective.push(f);
        }
        if let Some(f) = quadratic(&weights.r, |j| lay.u(t, j)) {
            objective.push(f);
        }
    }

    Ok(NlpProblem {
        vars,
        objective,
        eq,
        ineq,
        n,
        m,
        horizon,
    })
}

/// `Σᵢⱼ qᵢⱼ·(vᵢ·vⱼ)` over the nonzero entries, row-major, or `None` when
/// `q` vanishes.
fn quadratic(q: &[Vec<f64>], index: impl Fn(usize) -> usize) -> Option<crate::expr::DiffFunction> {
    let mut b = TapeBuilder::new();
    let mut terms = Vec::new();
    for (i, row) in q.iter().enumerate() {
        for (j, &c) in row.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            let vi = b.var(index(i));
            let node = if i == j {
                b.square(vi)
            } else {
                let vj = b.var(index(j));
                b.mul(vi, vj)
            };
            terms.push((node, c));
        }
    }
    if terms.is_empty() {
        return None;
    }
    let out = b.affine(terms, 0.0);
    Some(b.finish(out))
}

fn emit_leaf(b: &mut TapeBuilder, pred: &Predicate, t: usize, lay: &Layout) -> NodeId {
    let mut state = vec![NodeId::MAX; lay.n];
    for &i in pred.function().vars() {
        state[i] = b.var(lay.x(t, i));
    }
    pred.emit(b, &state)
}

fn exact_constraints(r: &Reformulation, lay: &Layout, eq: &mut Vec<Constraint>, ineq: &mut Vec<Constraint>) {
    let rho = |v: usize| lay.rho + v;
    for c in &r.constraints {
        let mut b = TapeBuilder::new();
        let (label, out, is_eq) = match c {
            ReformConstraint::LeafLower { pred, t, rho: v } => {
                let h = emit_leaf(&mut b, pred, *t, lay);
                let rv = b.var(rho(*v));
                (
                    format!("leaf[{v}]: {pred}@{t}"),
                    b.affine(vec![(h, 1.0), (rv, -1.0)], 0.0),
                    false,
                )
            }
            ReformConstraint::MinChild { child, parent } => {
                let u = b.var(rho(*child));
                let v = b.var(rho(*parent));
                (
                    format!("min[{parent}<-{child}]"),
                    b.affine(vec![(u, 1.0), (v, -1.0)], 0.0),
                    false,
                )
            }
            // Implied by the [0, 1] bounds on every λ.
            ReformConstraint::SimplexNonneg { .. } => continue,
            ReformConstraint::SimplexSum { lambda } => {
                let terms = lambda.range().map(|j| (b.var(lay.lambda + j), 1.0)).collect();
                (format!("simplex[{}]", lambda.start), b.affine(terms, -1.0), true)
            }
            ReformConstraint::MaxCombo {
                lambda,
                children,
                parent,
            } => {
                let mut terms: Vec<(NodeId, f64)> = lambda
                    .range()
                    .zip(children)
                    .map(|(j, &u)| {
                        let l = b.var(lay.lambda + j);
                        let ru = b.var(rho(u));
                        (b.mul(l, ru), 1.0)
                    })
                    .collect();
                terms.push((b.var(rho(*parent)), -1.0));
                (format!("max[{parent}]"), b.affine(terms, 0.0), false)
            }
            ReformConstraint::RootNonneg { root } => {
                let v = b.var(rho(*root));
                ("root".to_string(), b.affine(vec![(v, 1.0)], 0.0), false)
            }
        };
        let con = Constraint {
            label,
            f: b.finish(out),
        };
        if is_eq {
            eq.push(con);
        } else {
            ineq.push(con);
        }
    }
}

/// One tape for the smooth surrogate over the whole tree, optionally scaled.
/// Leaves with the same predicate and step share a node.
fn smooth_tape(tree: &TreeNode, k: f64, lay: &Layout, scale: Option<f64>) -> crate::expr::DiffFunction {
    fn go(
        node: &TreeNode,
        k: f64,
        lay: &Layout,
        b: &mut TapeBuilder,
        cache: &mut HashMap<(String, bool, usize), NodeId>,
    ) -> NodeId {
        match &node.kind {
            NodeKind::Leaf { pred, t } => {
                let (name, neg) = pred.key();
                let key = (name.to_string(), neg, *t);
                if let Some(&id) = cache.get(&key) {
                    return id;
                }
                let id = emit_leaf(b, pred, *t, lay);
                cache.insert(key, id);
                id
            }
            NodeKind::Min | NodeKind::Max => {
                let args: Vec<NodeId> = node.children.iter().map(|c| go(c, k, lay, b, cache)).collect();
                if matches!(node.kind, NodeKind::Min) {
                    b.smooth_min(args, k)
                } else {
                    b.smooth_max(args, k)
                }
            }
        }
    }
    let mut b = TapeBuilder::new();
    let root = go(tree, k, lay, &mut b, &mut HashMap::new());
    let out = match scale {
        Some(c) => b.affine(vec![(root, c)], 0.0),
        None => root,
    };
    b.finish(out)
}

impl NlpProblem {
    /// Full point from a trajectory and, for exact encodings, auxiliary
    /// values. Missing auxiliaries are left at zero.
    pub fn pack(&self, x: &Trajectory, aux: Option<&AuxAssignment>) -> Result<Vec<f64>> {
        if x.state_dim() != self.n || x.input_dim() != self.m || x.horizon() != self.horizon {
            return Err(Error::Dimension(format!(
                "trajectory is {}x{} over {} steps, problem is {}x{} over {}",
                x.state_dim(),
                x.input_dim(),
                x.horizon(),
                self.n,
                self.m,
                self.horizon
            )));
        }
        let mut z = vec![0.0; self.vars.len()];
        z[self.vars.states.clone()].copy_from_slice(x.states_flat());
        z[self.vars.inputs.clone()].copy_from_slice(x.inputs_flat());
        if let Some(a) = aux {
            if a.rho.len() != self.vars.rho.len() || a.lambda.len() != self.vars.lambda.len() {
                return Err(Error::MissingAssignment(format!(
                    "expected {} rho and {} lambda values",
                    self.vars.rho.len(),
                    self.vars.lambda.len()
                )));
            }
            z[self.vars.rho.clone()].copy_from_slice(&a.rho);
            z[self.vars.lambda.clone()].copy_from_slice(&a.lambda);
        }
        Ok(z)
    }
}
