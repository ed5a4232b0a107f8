//! Exact smooth reformulation of the robustness constraint `ρ(x) ≥ 0`.
//!
//! A depth-first pass over the robustness tree assigns one variable `ρ_v` to
//! every node. Leaves bound `ρ_v` by the predicate value, min nodes bound it by
//! each child, and max nodes bound it by a simplex-weighted combination of the
//! children. The root variable is then required to be non-negative.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::formula::Predicate;
use crate::trajectory::Trajectory;
use crate::tree::{NodeKind, NodeType, TreeNode};

/// Index of a `ρ` variable; equal to the preorder index of its tree node.
pub type RhoId = usize;

/// Contiguous run of `λ` components belonging to one max node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LambdaBlock {
    pub start: usize,
    pub len: usize,
}

impl LambdaBlock {
    pub fn range(&self) -> std::ops::Range<usize> {
        self.start..self.start + self.len
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RhoVar {
    /// Preorder index of the originating node.
    pub node: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LambdaVar {
    /// Preorder index of the owning max node.
    pub node: usize,
    /// Child position within that node.
    pub index: usize,
}

/// Flattened copy of a tree node, addressable by preorder index.
#[derive(Debug, Clone)]
pub struct NodeEntry {
    pub kind: NodeKind,
    pub children: Vec<usize>,
    pub label: String,
    pub t: usize,
    pub lambda: Option<LambdaBlock>,
}

#[derive(Debug, Clone)]
pub enum ReformConstraint {
    /// `h(x_t) ≥ ρ`.
    LeafLower { pred: Predicate, t: usize, rho: RhoId },
    /// `ρ_child ≥ ρ_parent`.
    MinChild { child: RhoId, parent: RhoId },
    /// `λ ≥ 0` componentwise.
    SimplexNonneg { lambda: LambdaBlock },
    /// `1ᵀλ = 1`.
    SimplexSum { lambda: LambdaBlock },
    /// `Σⱼ λⱼ ρ_{childⱼ} ≥ ρ_parent`.
    MaxCombo {
        lambda: LambdaBlock,
        children: Vec<RhoId>,
        parent: RhoId,
    },
    /// `ρ_root ≥ 0`.
    RootNonneg { root: RhoId },
}

impl ReformConstraint {
    pub fn is_equality(&self) -> bool {
        matches!(self, ReformConstraint::SimplexSum { .. })
    }

    /// Amount by which the constraint is violated at `(a, x)`; zero when it
    /// holds.
    pub fn violation(&self, a: &AuxAssignment, x: &Trajectory) -> f64 {
        let rho = &a.rho;
        let lam = &a.lambda;
        match self {
            ReformConstraint::LeafLower { pred, t, rho: v } => (rho[*v] - pred.eval(x.state(*t))).max(0.0),
            ReformConstraint::MinChild { child, parent } => (rho[*parent] - rho[*child]).max(0.0),
            ReformConstraint::SimplexNonneg { lambda } => lam[lambda.range()].iter().fold(0.0, |acc, &l| acc.max(-l)),
            ReformConstraint::SimplexSum { lambda } => {
                let s: f64 = lam[lambda.range()].iter().sum();
                (s - 1.0).abs()
            }
            ReformConstraint::MaxCombo {
                lambda,
                children,
                parent,
            } => {
                let combo: f64 = lam[lambda.range()].iter().zip(children).map(|(l, &c)| l * rho[c]).sum();
                (rho[*parent] - combo).max(0.0)
            }
            ReformConstraint::RootNonneg { root } => (-rho[*root]).max(0.0),
        }
    }
}

/// Constraint set with its auxiliary variable registries.
#[derive(Debug, Clone)]
pub struct Reformulation {
    pub constraints: Vec<ReformConstraint>,
    pub rho_vars: Vec<RhoVar>,
    pub lambda_vars: Vec<LambdaVar>,
    pub root: RhoId,
    pub nodes: Vec<NodeEntry>,
}

/// Values for every `ρ` and `λ` variable.
#[derive(Debug, Clone, PartialEq)]
pub struct AuxAssignment {
    pub rho: Vec<f64>,
    pub lambda: Vec<f64>,
}

/// Builds the constraint set for `root` in depth-first order.
pub fn reformulate(root: &TreeNode) -> Reformulation {
    let mut r = Reformulation {
        constraints: Vec::new(),
        rho_vars: Vec::new(),
        lambda_vars: Vec::new(),
        root: 0,
        nodes: Vec::new(),
    };
    visit(root, &mut r);
    r.constraints.push(ReformConstraint::RootNonneg { root: 0 });
    r
}

fn visit(node: &TreeNode, r: &mut Reformulation) -> RhoId {
    let v = r.rho_vars.len();
    r.rho_vars.push(RhoVar { node: v });
    r.nodes.push(NodeEntry {
        kind: node.kind.clone(),
        children: Vec::new(),
        label: node.label.to_string(),
        t: node.t,
        lambda: None,
    });
    match (&node.kind, node.node_type()) {
        (NodeKind::Leaf { pred, t }, _) => {
            r.constraints.push(ReformConstraint::LeafLower {
                pred: pred.clone(),
                t: *t,
                rho: v,
            });
        }
        (_, Some(NodeType::Min)) => {
            let kids: Vec<RhoId> = node.children.iter().map(|c| visit(c, r)).collect();
            for &u in &kids {
                r.constraints.push(ReformConstraint::MinChild { child: u, parent: v });
            }
            r.nodes[v].children = kids;
        }
        _ => {
            let kids: Vec<RhoId> = node.children.iter().map(|c| visit(c, r)).collect();
            let lambda = LambdaBlock {
                start: r.lambda_vars.len(),
                len: kids.len(),
            };
            r.lambda_vars
                .extend((0..kids.len()).map(|index| LambdaVar { node: v, index }));
            r.constraints.push(ReformConstraint::SimplexNonneg { lambda });
            r.constraints.push(ReformConstraint::SimplexSum { lambda });
            r.constraints.push(ReformConstraint::MaxCombo {
                lambda,
                children: kids.clone(),
                parent: v,
            });
            r.nodes[v].children = kids;
            r.nodes[v].lambda = Some(lambda);
        }
    }
    v
}

impl Reformulation {
    pub fn rho_count(&self) -> usize {
        self.rho_vars.len()
    }

    pub fn lambda_count(&self) -> usize {
        self.lambda_vars.len()
    }

    /// Tightest `ρ` values for fixed `λ`: leaves take the predicate value,
    /// min nodes the smallest child, max nodes the `λ`-weighted child sum.
    pub fn propagate(&self, x: &Trajectory, lambda: Vec<f64>) -> Result<AuxAssignment> {
        if lambda.len() != self.lambda_count() {
            return Err(Error::MissingAssignment(format!(
                "expected {} lambda values, got {}",
                self.lambda_count(),
                lambda.len()
            )));
        }
        let mut rho = vec![0.0; self.rho_count()];
        // Children always follow their parent in preorder.
        for (v, node) in self.nodes.iter().enumerate().rev() {
            rho[v] = match &node.kind {
                NodeKind::Leaf { pred, t } => pred.eval(x.state(*t)),
                NodeKind::Min => node.children.iter().map(|&c| rho[c]).fold(f64::INFINITY, f64::min),
                NodeKind::Max => {
                    let block = node.lambda.expect("max node owns a lambda block");
                    lambda[block.range()]
                        .iter()
                        .zip(&node.children)
                        .map(|(l, &c)| l * rho[c])
                        .sum()
                }
            };
        }
        Ok(AuxAssignment { rho, lambda })
    }

    /// Witness built from a reference trajectory: every `ρ_v` is the exact
    /// robustness of its node and every `λ` is the indicator of the first
    /// maximizing child.
    pub fn warm_start(&self, x_ref: &Trajectory) -> AuxAssignment {
        let mut rho = vec![0.0; self.rho_count()];
        let mut lambda = vec![0.0; self.lambda_count()];
        for (v, node) in self.nodes.iter().enumerate().rev() {
            rho[v] = match &node.kind {
                NodeKind::Leaf { pred, t } => pred.eval(x_ref.state(*t)),
                NodeKind::Min => node.children.iter().map(|&c| rho[c]).fold(f64::INFINITY, f64::min),
                NodeKind::Max => {
                    let mut best = 0;
                    for (j, &c) in node.children.iter().enumerate() {
                        if rho[c] > rho[node.children[best]] {
                            best = j;
                        }
                    }
                    let block = node.lambda.expect("max node owns a lambda block");
                    lambda[block.start + best] = 1.0;
                    rho[node.children[best]]
                }
            };
        }
        AuxAssignment { rho, lambda }
    }

    /// Assignment with uniform `λ = 1/m` on every max node and `ρ` propagated
    /// from `x`.
    pub fn uniform_start(&self, x: &Trajectory) -> AuxAssignment {
        let mut lambda = vec![0.0; self.lambda_count()];
        for node in &self.nodes {
            if let Some(b) = node.lambda {
                lambda[b.range()].fill(1.0 / b.len as f64);
            }
        }
        self.propagate(x, lambda).expect("lambda sized from the registry")
    }

    /// One constraint per line.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for c in &self.constraints {
            let _ = match c {
                ReformConstraint::LeafLower { pred, t, rho } => writeln!(out, "h[{pred}](x_{t}) >= rho_{rho}"),
                ReformConstraint::MinChild { child, parent } => writeln!(out, "rho_{child} >= rho_{parent}"),
                ReformConstraint::SimplexNonneg { lambda } => {
                    writeln!(out, "lambda_{}..{} >= 0", lambda.start, lambda.start + lambda.len)
                }
                ReformConstraint::SimplexSum { lambda } => {
                    writeln!(out, "sum lambda_{}..{} = 1", lambda.start, lambda.start + lambda.len)
                }
                ReformConstraint::MaxCombo {
                    lambda,
                    children,
                    parent,
                } => {
                    let terms: Vec<String> = children
                        .iter()
                        .enumerate()
                        .map(|(j, c)| format!("lambda_{}*rho_{c}", lambda.start + j))
                        .collect();
                    writeln!(out, "{} >= rho_{parent}", terms.join(" + "))
                }
                ReformConstraint::RootNonneg { root } => writeln!(out, "rho_{root} >= 0"),
            };
        }
        out
    }
}

/// Outcome of [`check_feasible`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Feasibility {
    pub feasible: bool,
    pub max_violation: f64,
}

/// Evaluates every constraint of `r` at `(a, x)`.
pub fn check_feasible(r: &Reformulation, a: &AuxAssignment, x: &Trajectory, tol: f64) -> Result<Feasibility> {
    if a.rho.len() != r.rho_count() {
        return Err(Error::MissingAssignment(format!(
            "expected {} rho values, got {}",
            r.rho_count(),
            a.rho.len()
        )));
    }
    if a.lambda.len() != r.lambda_count() {
        return Err(Error::MissingAssignment(format!(
            "expected {} lambda values, got {}",
            r.lambda_count(),
            a.lambda.len()
        )));
    }
    if let Some(t) = r
        .nodes
        .iter()
        .filter_map(|n| match n.kind {
            NodeKind::Leaf { t, .. } => Some(t),
            _ => None,
        })
        .find(|&t| t > x.horizon())
    {
        return Err(Error::Horizon {
            needed: t,
            available: x.horizon(),
        });
    }
    let max_violation = r.constraints.iter().map(|c| c.violation(a, x)).fold(0.0, f64::max);
    Ok(Feasibility {
        feasible: max_violation <= tol,
        max_violation,
    })
}
