//! Smooth under-approximations of max/min and their error lower bounds.
//!
//! These implement the baseline surrogate robustness: every max is replaced
//! by a softmax-weighted mean and every min by a scaled log-sum-exp. Both
//! never exceed the exact operator, so a non-negative surrogate certifies
//! satisfaction, at the cost of an error that does not vanish in general.

use crate::error::{Error, Result};
use crate::trajectory::Trajectory;
use crate::tree::{NodeKind, TreeNode};

/// Smoothing sharpness `k > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothParams {
    k: f64,
}

impl SmoothParams {
    pub fn new(k: f64) -> Result<Self> {
        if k.is_finite() && k > 0.0 {
            Ok(Self { k })
        } else {
            Err(Error::Sharpness(k))
        }
    }

    pub fn k(&self) -> f64 {
        self.k
    }
}

/// `Σ aᵢ e^{k aᵢ} / Σ e^{k aᵢ}`, evaluated with exponents shifted by `max(a)`.
pub fn smooth_max(a: &[f64], k: f64) -> Result<f64> {
    let k = SmoothParams::new(k)?.k;
    if a.is_empty() {
        return Err(Error::Empty("smooth_max input"));
    }
    Ok(smooth_max_unchecked(a, k))
}

/// `−(1/k) log Σ e^{−k aᵢ}`, evaluated with exponents shifted by `min(a)`.
pub fn smooth_min(a: &[f64], k: f64) -> Result<f64> {
    let k = SmoothParams::new(k)?.k;
    if a.is_empty() {
        return Err(Error::Empty("smooth_min input"));
    }
    Ok(smooth_min_unchecked(a, k))
}

fn smooth_max_unchecked(a: &[f64], k: f64) -> f64 {
    let top = a.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (mut num, mut den) = (0.0, 0.0);
    for &ai in a {
        let w = (k * (ai - top)).exp();
        num += ai * w;
        den += w;
    }
    num / den
}

fn smooth_min_unchecked(a: &[f64], k: f64) -> f64 {
    let bottom = a.iter().copied().fold(f64::INFINITY, f64::min);
    let sum: f64 = a.iter().map(|&ai| (-k * (ai - bottom)).exp()).sum();
    bottom - sum.ln() / k
}

/// Lower bounds on `max(a) − smooth_max(a)` and `min(a) − smooth_min(a)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorBounds {
    pub max: f64,
    pub min: f64,
}

/// Error lower bounds for the smooth operators on `a` (length ≥ 2).
///
/// With `a` sorted descending, `r` entries tied at the top and `s` tied at
/// the bottom, and softmax weights `wᵢ`:
/// `max ≥ (a₁ − a_{r+1})·Σ_{i>r} wᵢ` (zero when every entry ties), and
/// `min ≥ (1/k)·log(s + Σ_{i≤m−s} e^{−k(aᵢ − a_m)})`.
pub fn error_lower_bounds(a: &[f64], k: f64) -> Result<ErrorBounds> {
    let k = SmoothParams::new(k)?.k;
    if a.len() < 2 {
        return Err(Error::Dimension(format!(
            "error bounds need at least two entries, got {}",
            a.len()
        )));
    }
    let mut sorted = a.to_vec();
    sorted.sort_by(|x, y| y.total_cmp(x));
    let m = sorted.len();
    let top = sorted[0];
    let bottom = sorted[m - 1];
    let r = sorted.iter().take_while(|&&v| v == top).count();
    let s = sorted.iter().rev().take_while(|&&v| v == bottom).count();

    let max_bound = if r == m {
        0.0
    } else {
        let den: f64 = sorted.iter().map(|&v| (k * (v - top)).exp()).sum();
        let tail: f64 = sorted[r..].iter().map(|&v| (k * (v - top)).exp()).sum();
        (top - sorted[r]) * tail / den
    };
    let rest: f64 = sorted[..m - s].iter().map(|&v| (-k * (v - bottom)).exp()).sum();
    let min_bound = (s as f64 + rest).ln() / k;
    Ok(ErrorBounds {
        max: max_bound,
        min: min_bound,
    })
}

/// Surrogate robustness: the tree evaluated with [`smooth_max`] and
/// [`smooth_min`] in place of the exact operators.
pub fn smooth_robustness(root: &TreeNode, x: &Trajectory, k: f64) -> Result<f64> {
    let k = SmoothParams::new(k)?.k;
    Ok(smooth_eval(root, x, k))
}

fn smooth_eval(node: &TreeNode, x: &Trajectory, k: f64) -> f64 {
    match &node.kind {
        NodeKind::Leaf { pred, t } => pred.eval(x.state(*t)),
        NodeKind::Min | NodeKind::Max => {
            let vals: Vec<f64> = node.children.iter().map(|c| smooth_eval(c, x, k)).collect();
            if matches!(node.kind, NodeKind::Min) {
                smooth_min_unchecked(&vals, k)
            } else {
                smooth_max_unchecked(&vals, k)
            }
        }
    }
}
