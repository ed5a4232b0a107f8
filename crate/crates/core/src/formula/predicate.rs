use std::cell::RefCell;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::expr::{DiffFunction, NodeId, TapeBuilder, Workspace};

/// Geometric description of a predicate function `h(x)`, as written in
/// scenario files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "params", rename_all = "lowercase")]
pub enum PredicateShape {
    /// `h = r² − ‖p − c‖²` over the planar position `p = (x₀, x₁)`;
    /// negated when `inside` is false.
    Circle {
        center: [f64; 2],
        radius: f64,
        #[serde(default = "default_inside")]
        inside: bool,
    },
    /// `h = normalᵀ·p − offset`, where `p` is the leading `normal.len()`
    /// state components.
    Halfplane { normal: Vec<f64>, offset: f64 },
}

fn default_inside() -> bool {
    true
}

impl PredicateShape {
    /// Number of leading state components the shape reads.
    pub fn min_state_dim(&self) -> usize {
        match self {
            PredicateShape::Circle { .. } => 2,
            PredicateShape::Halfplane { normal, .. } => normal.len(),
        }
    }

    fn validate(&self) -> Result<(), String> {
        match self {
            PredicateShape::Circle { center, radius, .. } => {
                if !(radius.is_finite() && *radius > 0.0) {
                    return Err(format!("circle radius must be positive, got {radius}"));
                }
                if center.iter().any(|c| !c.is_finite()) {
                    return Err("circle center must be finite".into());
                }
            }
            PredicateShape::Halfplane { normal, offset } => {
                if normal.is_empty() || normal.iter().all(|c| *c == 0.0) {
                    return Err("half-plane normal must be non-zero".into());
                }
                if normal.iter().any(|c| !c.is_finite()) || !offset.is_finite() {
                    return Err("half-plane coefficients must be finite".into());
                }
            }
        }
        Ok(())
    }

    fn emit(&self, b: &mut TapeBuilder) -> NodeId {
        match self {
            PredicateShape::Circle { center, radius, inside } => {
                let px = b.var(0);
                let py = b.var(1);
                let dx = b.affine(vec![(px, 1.0)], -center[0]);
                let dy = b.affine(vec![(py, 1.0)], -center[1]);
                let sx = b.square(dx);
                let sy = b.square(dy);
                let sign = if *inside { 1.0 } else { -1.0 };
                b.affine(vec![(sx, -sign), (sy, -sign)], sign * radius * radius)
            }
            PredicateShape::Halfplane { normal, offset } => {
                let terms = normal
                    .iter()
                    .enumerate()
                    .filter(|(_, c)| **c != 0.0)
                    .map(|(i, c)| (b.var(i), *c))
                    .collect();
                b.affine(terms, -offset)
            }
        }
    }
}

#[derive(Debug)]
struct Inner {
    name: String,
    shape: PredicateShape,
    negated: bool,
    func: DiffFunction,
}

/// An atomic proposition `h(x) ≥ 0` with smooth `h` and exact gradient.
///
/// Cheap to clone. Two predicates are the same atom when their names and
/// polarity agree; names are unique within a scenario.
#[derive(Debug, Clone)]
pub struct Predicate(Arc<Inner>);

impl Predicate {
    pub fn new(name: impl Into<String>, shape: PredicateShape) -> Result<Self, String> {
        shape.validate()?;
        Ok(Self::build(name.into(), shape, false))
    }

    /// `h = r² − ‖p − c‖²` (inside) or its negation.
    pub fn circle(name: impl Into<String>, center: [f64; 2], radius: f64, inside: bool) -> Result<Self, String> {
        Self::new(name, PredicateShape::Circle { center, radius, inside })
    }

    /// `h = normalᵀ·p − offset`.
    pub fn halfplane(name: impl Into<String>, normal: Vec<f64>, offset: f64) -> Result<Self, String> {
        Self::new(name, PredicateShape::Halfplane { normal, offset })
    }

    fn build(name: String, shape: PredicateShape, negated: bool) -> Self {
        let mut b = TapeBuilder::new();
        let h = shape.emit(&mut b);
        let out = if negated { b.neg(h) } else { h };
        let func = b.finish(out);
        Predicate(Arc::new(Inner {
            name,
            shape,
            negated,
            func,
        }))
    }

    /// The predicate with function `−h`.
    pub fn negate(&self) -> Self {
        Self::build(self.0.name.clone(), self.0.shape.clone(), !self.0.negated)
    }

    pub fn name(&self) -> &str {
        &self.0.name
    }

    pub fn shape(&self) -> &PredicateShape {
        &self.0.shape
    }

    pub fn is_negated(&self) -> bool {
        self.0.negated
    }

    /// Identity used for leaf deduplication.
    pub fn key(&self) -> (&str, bool) {
        (&self.0.name, self.0.negated)
    }

    /// `h` as a tape over the state vector.
    pub fn function(&self) -> &DiffFunction {
        &self.0.func
    }

    pub fn eval(&self, state: &[f64]) -> f64 {
        thread_local! {
            static WS: RefCell<Workspace> = RefCell::new(Workspace::new());
        }
        WS.with(|ws| self.0.func.value(state, &mut ws.borrow_mut()))
    }

    /// Dense gradient of `h` with respect to the state.
    pub fn grad(&self, state: &[f64]) -> Vec<f64> {
        let f = &self.0.func;
        let mut local = vec![0.0; f.arity()];
        f.value_grad(state, &mut Workspace::new(), &mut local);
        let mut g = vec![0.0; state.len()];
        for (slot, &i) in f.vars().iter().enumerate() {
            g[i] = local[slot];
        }
        g
    }

    /// Inlines `h` into `b`, reading the state from `state_nodes`.
    pub fn emit(&self, b: &mut TapeBuilder, state_nodes: &[NodeId]) -> NodeId {
        b.inline(&self.0.func, state_nodes)
    }
}

impl PartialEq for Predicate {
    fn eq(&self, other: &Self) -> bool {
        self.key() == other.key()
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.negated {
            write!(f, "not {}", self.0.name)
        } else {
            f.write_str(&self.0.name)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::fd_check;

    #[test]
    fn circle_values() {
        let p = Predicate::circle("c", [0.0, 0.0], 1.0, true).unwrap();
        assert_eq!(p.eval(&[0.0, 0.0, 9.0]), 1.0);
        assert_eq!(p.eval(&[1.0, 0.0, 9.0]), 0.0);
        assert!(p.eval(&[0.6, 0.8]).abs() < 1e-15);
        let out = Predicate::circle("c", [0.0, 0.0], 1.0, false).unwrap();
        assert_eq!(out.eval(&[0.0, 0.0]), -1.0);
        assert_eq!(p.negate().eval(&[0.5, 0.0]), -0.75);
    }

    #[test]
    fn halfplane_values() {
        let p = Predicate::halfplane("h", vec![1.0, 0.0], 2.0).unwrap();
        assert_eq!(p.eval(&[3.0, 0.0]), 1.0);
        assert_eq!(p.eval(&[2.0, 7.0]), 0.0);
        assert!(Predicate::halfplane("z", vec![0.0, 0.0], 1.0).is_err());
        assert!(Predicate::circle("z", [0.0, 0.0], 0.0, true).is_err());
    }

    #[test]
    fn double_negation_restores_identity() {
        let p = Predicate::circle("c", [1.0, 2.0], 0.5, true).unwrap();
        let q = p.negate().negate();
        assert_eq!(p, q);
        assert_eq!(p.eval(&[1.2, 2.1]), q.eval(&[1.2, 2.1]));
        assert_ne!(p, p.negate());
        assert_eq!(p.negate().to_string(), "not c");
    }

    #[test]
    fn gradients_match_finite_differences() {
        let p = Predicate::circle("c", [1.0, -2.0], 1.5, false).unwrap();
        let g = p.grad(&[0.3, 0.4, 1.0]);
        assert_eq!(g.len(), 3);
        assert!((g[0] - 2.0 * (0.3 - 1.0)).abs() < 1e-15);
        assert_eq!(g[2], 0.0);
        assert!(fd_check(p.function(), &[0.3, 0.4, 1.0], 1e-6) < 1e-6);
    }
}
