//! Time-bounded STL formulas, their robustness semantics, and negation
//! normal form.

mod parse;
mod predicate;

use std::collections::HashMap;
use std::fmt;

pub use parse::{parse, ParseError, ParseErrorKind};
pub use predicate::{Predicate, PredicateShape};

use crate::error::{Error, Result};
use crate::trajectory::Trajectory;

/// Inclusive integer step range `[lo, hi]`, `lo ≤ hi`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Interval {
    lo: usize,
    hi: usize,
}

impl Interval {
    pub fn new(lo: usize, hi: usize) -> Option<Self> {
        (lo <= hi).then_some(Self { lo, hi })
    }

    pub fn lo(&self) -> usize {
        self.lo
    }

    pub fn hi(&self) -> usize {
        self.hi
    }

    pub fn steps(&self) -> std::ops::RangeInclusive<usize> {
        self.lo..=self.hi
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{}]", self.lo, self.hi)
    }
}

/// STL abstract syntax tree, generic over the atom type: parsing yields
/// `Formula<String>`, binding names to predicates yields `Formula`.
#[derive(Debug, Clone, PartialEq)]
pub enum Formula<P = Predicate> {
    Pred(P),
    Not(Box<Formula<P>>),
    And(Vec<Formula<P>>),
    Or(Vec<Formula<P>>),
    Always(Interval, Box<Formula<P>>),
    Eventually(Interval, Box<Formula<P>>),
    Until(Interval, Box<Formula<P>>, Box<Formula<P>>),
}

impl<P> Formula<P> {
    pub fn always(i: Interval, f: Self) -> Self {
        Formula::Always(i, Box::new(f))
    }

    pub fn eventually(i: Interval, f: Self) -> Self {
        Formula::Eventually(i, Box::new(f))
    }

    pub fn until(i: Interval, lhs: Self, rhs: Self) -> Self {
        Formula::Until(i, Box::new(lhs), Box::new(rhs))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Self) -> Self {
        Formula::Not(Box::new(f))
    }

    /// Largest step offset the formula can reference when evaluated at 0.
    pub fn horizon(&self) -> usize {
        match self {
            Formula::Pred(_) => 0,
            Formula::Not(f) => f.horizon(),
            Formula::And(fs) | Formula::Or(fs) => fs.iter().map(Self::horizon).max().unwrap_or(0),
            Formula::Always(i, f) | Formula::Eventually(i, f) => i.hi + f.horizon(),
            Formula::Until(i, a, b) => i.hi + a.horizon().max(b.horizon()),
        }
    }

    /// Checks n-ary arity. Parsed formulas always pass.
    pub fn validate(&self) -> Result<()> {
        match self {
            Formula::Pred(_) => Ok(()),
            Formula::Not(f) | Formula::Always(_, f) | Formula::Eventually(_, f) => f.validate(),
            Formula::And(fs) if fs.len() < 2 => Err(Error::Arity("conjunction")),
            Formula::Or(fs) if fs.len() < 2 => Err(Error::Arity("disjunction")),
            Formula::And(fs) | Formula::Or(fs) => fs.iter().try_for_each(Self::validate),
            Formula::Until(_, a, b) => {
                a.validate()?;
                b.validate()
            }
        }
    }

    /// Rebuilds the formula with every atom mapped through `f`.
    pub fn try_map_atoms<Q, E>(&self, f: &mut impl FnMut(&P) -> Result<Q, E>) -> Result<Formula<Q>, E> {
        Ok(match self {
            Formula::Pred(p) => Formula::Pred(f(p)?),
            Formula::Not(g) => Formula::Not(Box::new(g.try_map_atoms(f)?)),
            Formula::And(gs) => Formula::And(gs.iter().map(|g| g.try_map_atoms(f)).collect::<Result<_, _>>()?),
            Formula::Or(gs) => Formula::Or(gs.iter().map(|g| g.try_map_atoms(f)).collect::<Result<_, _>>()?),
            Formula::Always(i, g) => Formula::Always(*i, Box::new(g.try_map_atoms(f)?)),
            Formula::Eventually(i, g) => Formula::Eventually(*i, Box::new(g.try_map_atoms(f)?)),
            Formula::Until(i, a, b) => Formula::Until(*i, Box::new(a.try_map_atoms(f)?), Box::new(b.try_map_atoms(f)?)),
        })
    }

    pub fn is_nnf(&self) -> bool {
        match self {
            Formula::Pred(_) => true,
            Formula::Not(_) => false,
            Formula::And(fs) | Formula::Or(fs) => fs.iter().all(Self::is_nnf),
            Formula::Always(_, f) | Formula::Eventually(_, f) => f.is_nnf(),
            Formula::Until(_, a, b) => a.is_nnf() && b.is_nnf(),
        }
    }
}

impl Formula<String> {
    /// Resolves predicate names against `preds`.
    pub fn bind(&self, preds: &HashMap<String, Predicate>) -> Result<Formula> {
        self.try_map_atoms(&mut |name: &String| {
            preds
                .get(name)
                .cloned()
                .ok_or_else(|| Error::UnknownPredicate(name.clone()))
        })
    }
}

impl Formula {
    /// Pushes negations down to the predicates. `¬μ` becomes the predicate
    /// with function `−h`. Negating an until is rejected.
    pub fn to_nnf(&self) -> Result<Formula> {
        self.nnf(false)
    }

    fn nnf(&self, neg: bool) -> Result<Formula> {
        Ok(match (self, neg) {
            (Formula::Pred(p), false) => Formula::Pred(p.clone()),
            (Formula::Pred(p), true) => Formula::Pred(p.negate()),
            (Formula::Not(f), _) => f.nnf(!neg)?,
            (Formula::And(fs), false) => Formula::And(fs.iter().map(|f| f.nnf(false)).collect::<Result<_>>()?),
            (Formula::And(fs), true) => Formula::Or(fs.iter().map(|f| f.nnf(true)).collect::<Result<_>>()?),
            (Formula::Or(fs), false) => Formula::Or(fs.iter().map(|f| f.nnf(false)).collect::<Result<_>>()?),
            (Formula::Or(fs), true) => Formula::And(fs.iter().map(|f| f.nnf(true)).collect::<Result<_>>()?),
            (Formula::Always(i, f), false) => Formula::Always(*i, Box::new(f.nnf(false)?)),
            (Formula::Always(i, f), true) => Formula::Eventually(*i, Box::new(f.nnf(true)?)),
            (Formula::Eventually(i, f), false) => Formula::Eventually(*i, Box::new(f.nnf(false)?)),
            (Formula::Eventually(i, f), true) => Formula::Always(*i, Box::new(f.nnf(true)?)),
            (Formula::Until(i, a, b), false) => Formula::Until(*i, Box::new(a.nnf(false)?), Box::new(b.nnf(false)?)),
            (u @ Formula::Until(..), true) => return Err(Error::NegatedUntil(u.to_string())),
        })
    }

    /// Robustness `ρ^φ(x, t)` with exact min/max. Until uses the tree
    /// convention: its `t′`-th term is the min of `ψ₂` at `t+t′` and `ψ₁` at
    /// `t, …, t+t′−1`.
    pub fn robustness(&self, x: &Trajectory, t: usize) -> Result<f64> {
        let needed = t + self.horizon();
        if needed > x.horizon() {
            return Err(Error::Horizon {
                needed,
                available: x.horizon(),
            });
        }
        Ok(self.rho(x, t))
    }

    fn rho(&self, x: &Trajectory, t: usize) -> f64 {
        match self {
            Formula::Pred(p) => p.eval(x.state(t)),
            Formula::Not(f) => -f.rho(x, t),
            Formula::And(fs) => fs.iter().map(|f| f.rho(x, t)).fold(f64::INFINITY, f64::min),
            Formula::Or(fs) => fs.iter().map(|f| f.rho(x, t)).fold(f64::NEG_INFINITY, f64::max),
            Formula::Always(i, f) => i.steps().map(|s| f.rho(x, t + s)).fold(f64::INFINITY, f64::min),
            Formula::Eventually(i, f) => i.steps().map(|s| f.rho(x, t + s)).fold(f64::NEG_INFINITY, f64::max),
            Formula::Until(i, a, b) => {
                let mut prefix = f64::INFINITY;
                let mut best = f64::NEG_INFINITY;
                for s in 0..=i.hi {
                    if s >= i.lo {
                        best = best.max(prefix.min(b.rho(x, t + s)));
                    }
                    if s < i.hi {
                        prefix = prefix.min(a.rho(x, t + s));
                    }
                }
                best
            }
        }
    }
}

/// `ρ^φ(x, t)`; see [`Formula::robustness`].
pub fn eval_robustness(f: &Formula, x: &Trajectory, t: usize) -> Result<f64> {
    f.robustness(x, t)
}

/// Atoms that know how to print themselves inside a formula.
pub trait Atom {
    fn write_atom(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result;
}

impl Atom for String {
    fn write_atom(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self)
    }
}

impl Atom for Predicate {
    fn write_atom(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Prints in the concrete grammar accepted by [`parse`].
impl<P: Atom> fmt::Display for Formula<P> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::Pred(p) => p.write_atom(f),
            Formula::Not(g) => {
                f.write_str("not ")?;
                g.fmt_operand(f)
            }
            Formula::And(gs) | Formula::Or(gs) => {
                let sep = if matches!(self, Formula::And(_)) {
                    " and "
                } else {
                    " or "
                };
                for (k, g) in gs.iter().enumerate() {
                    if k > 0 {
                        f.write_str(sep)?;
                    }
                    g.fmt_operand(f)?;
                }
                Ok(())
            }
            Formula::Always(i, g) => {
                write!(f, "G{i} ")?;
                g.fmt_operand(f)
            }
            Formula::Eventually(i, g) => {
                write!(f, "F{i} ")?;
                g.fmt_operand(f)
            }
            Formula::Until(i, a, b) => {
                a.fmt_operand(f)?;
                write!(f, " U{i} ")?;
                b.fmt_operand(f)
            }
        }
    }
}

impl<P: Atom> Formula<P> {
    fn fmt_operand(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::And(_) | Formula::Or(_) | Formula::Until(..) => write!(f, "({self})"),
            _ => write!(f, "{self}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp_pred(name: &str) -> Predicate {
        // h(x) = x₁
        Predicate::halfplane(name, vec![1.0], 0.0).unwrap()
    }

    fn scalar_traj(vals: &[f64]) -> Trajectory {
        let rows: Vec<Vec<f64>> = vals.iter().map(|v| vec![*v]).collect();
        Trajectory::from_rows(&rows, &vec![vec![]; vals.len()]).unwrap()
    }

    fn two_signal(a: &[f64], b: &[f64]) -> (Trajectory, Predicate, Predicate) {
        let rows: Vec<Vec<f64>> = a.iter().zip(b).map(|(x, y)| vec![*x, *y]).collect();
        let x = Trajectory::from_rows(&rows, &vec![vec![]; a.len()]).unwrap();
        let pa = Predicate::halfplane("a", vec![1.0, 0.0], 0.0).unwrap();
        let pb = Predicate::halfplane("b", vec![0.0, 1.0], 0.0).unwrap();
        (x, pa, pb)
    }

    #[test]
    fn leaf_value() {
        let f = Formula::Pred(ramp_pred("mu"));
        assert_eq!(f.robustness(&scalar_traj(&[3.0]), 0).unwrap(), 3.0);
    }

    #[test]
    fn and_is_min() {
        let (x, a, b) = two_signal(&[2.0], &[-1.0]);
        let f = Formula::And(vec![Formula::Pred(a), Formula::Pred(b)]);
        assert_eq!(f.robustness(&x, 0).unwrap(), -1.0);
    }

    #[test]
    fn eventually_is_max() {
        let f = Formula::eventually(Interval::new(0, 2).unwrap(), Formula::Pred(ramp_pred("mu")));
        assert_eq!(f.robustness(&scalar_traj(&[-1.0, 4.0, 2.0]), 0).unwrap(), 4.0);
    }

    #[test]
    fn until_brute_force() {
        let (x, a, b) = two_signal(&[3.0, 2.0, 1.0], &[-5.0, 0.0, -1.0]);
        let f = Formula::until(Interval::new(0, 2).unwrap(), Formula::Pred(a), Formula::Pred(b));
        assert_eq!(f.robustness(&x, 0).unwrap(), 0.0);
    }

    #[test]
    fn until_with_offset_interval_uses_prefix_from_t() {
        // t′ = 2 only: min(b₂, a₀, a₁).
        let (x, a, b) = two_signal(&[0.5, 7.0, -9.0], &[9.0, 9.0, 4.0]);
        let f = Formula::until(Interval::new(2, 2).unwrap(), Formula::Pred(a), Formula::Pred(b));
        assert_eq!(f.robustness(&x, 0).unwrap(), 0.5);
    }

    #[test]
    fn horizon_recursion() {
        let mu = || Formula::Pred(ramp_pred("mu"));
        assert_eq!(mu().horizon(), 0);
        let f = Formula::always(
            Interval::new(0, 2).unwrap(),
            Formula::eventually(Interval::new(5, 7).unwrap(), mu()),
        );
        assert_eq!(f.horizon(), 9);
        let u = Formula::until(Interval::new(2, 10).unwrap(), mu(), f.clone());
        assert_eq!(u.horizon(), 19);
        assert!(matches!(
            f.robustness(&scalar_traj(&[0.0; 9]), 0),
            Err(Error::Horizon {
                needed: 9,
                available: 8
            })
        ));
    }

    #[test]
    fn nnf_negated_predicate() {
        let mu = ramp_pred("mu");
        let f = Formula::not(Formula::Pred(mu.clone())).to_nnf().unwrap();
        match &f {
            Formula::Pred(p) => {
                assert!(p.is_negated());
                assert_eq!(p.eval(&[2.5]), -2.5);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn nnf_duality() {
        let mu = ramp_pred("mu4");
        let i = Interval::new(0, 50).unwrap();
        let f = Formula::not(Formula::always(i, Formula::Pred(mu.clone())));
        assert_eq!(f.to_nnf().unwrap(), Formula::eventually(i, Formula::Pred(mu.negate())));
        let g = Formula::not(Formula::not(Formula::Pred(mu.clone())));
        assert_eq!(g.to_nnf().unwrap(), Formula::Pred(mu));
    }

    #[test]
    fn nnf_rejects_negated_until() {
        let i = Interval::new(2, 10).unwrap();
        let f = Formula::not(Formula::until(
            i,
            Formula::Pred(ramp_pred("mu3")),
            Formula::Pred(ramp_pred("mu1")),
        ));
        assert!(matches!(f.to_nnf(), Err(Error::NegatedUntil(_))));
    }

    #[test]
    fn display_round_trips_through_parser() {
        let text = "G[0,2] F[5,7] mu1 and not (a or b) and F[27,35] (mu3 U[2,10] mu1)";
        let f = parse(text).unwrap();
        let again = parse(&f.to_string()).unwrap();
        assert_eq!(f, again);
    }

    #[test]
    fn bind_reports_unknown_names() {
        let f = parse("a and b").unwrap();
        let mut preds = HashMap::new();
        preds.insert("a".to_string(), ramp_pred("a"));
        assert!(matches!(f.bind(&preds), Err(Error::UnknownPredicate(n)) if n == "b"));
    }

    #[test]
    fn arity_validation() {
        let f: Formula<String> = Formula::And(vec![Formula::Pred("a".into())]);
        assert!(f.validate().is_err());
        assert!(parse("a or b or c").unwrap().validate().is_ok());
    }
}
