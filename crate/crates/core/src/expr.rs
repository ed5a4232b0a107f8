//! Expression tapes with exact forward-mode derivatives.
//!
//! A [`DiffFunction`] is a straight-line program over a handful of scalar
//! variables drawn from some larger vector (a state, or the full NLP point).
//! Each tape carries one tangent per local variable, so a single forward sweep
//! yields the value and the dense local gradient. Constraints in the
//! transcribed problems touch few variables, which keeps the sweep cheap.

use std::collections::HashMap;

/// Index of a node inside a [`TapeBuilder`] or [`DiffFunction`].
pub type NodeId = u32;

#[derive(Debug, Clone, PartialEq)]
enum Op {
    Const(f64),
    Var(u32),
    Add(NodeId, NodeId),
    Sub(NodeId, NodeId),
    Mul(NodeId, NodeId),
    Neg(NodeId),
    Square(NodeId),
    Sin(NodeId),
    Cos(NodeId),
    Affine { terms: Vec<(NodeId, f64)>, offset: f64 },
    SmoothMax { args: Vec<NodeId>, k: f64 },
    SmoothMin { args: Vec<NodeId>, k: f64 },
}

/// Incrementally records operations into a tape.
#[derive(Debug, Default)]
pub struct TapeBuilder {
    ops: Vec<Op>,
    vars: Vec<usize>,
    var_nodes: HashMap<usize, NodeId>,
}

impl TapeBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    fn push(&mut self, op: Op) -> NodeId {
        self.ops.push(op);
        (self.ops.len() - 1) as NodeId
    }

    /// Node reading variable `index` of the enclosing vector. Repeated calls
    /// with the same index return the same node.
    pub fn var(&mut self, index: usize) -> NodeId {
        if let Some(&id) = self.var_nodes.get(&index) {
            return id;
        }
        let slot = self.vars.len() as u32;
        self.vars.push(index);
        let id = self.push(Op::Var(slot));
        self.var_nodes.insert(index, id);
        id
    }

    pub fn constant(&mut self, c: f64) -> NodeId {
        self.push(Op::Const(c))
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.push(Op::Add(a, b))
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.push(Op::Sub(a, b))
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.push(Op::Mul(a, b))
    }

    pub fn neg(&mut self, a: NodeId) -> NodeId {
        self.push(Op::Neg(a))
    }

    pub fn square(&mut self, a: NodeId) -> NodeId {
        self.push(Op::Square(a))
    }

    pub fn sin(&mut self, a: NodeId) -> NodeId {
        self.push(Op::Sin(a))
    }

    pub fn cos(&mut self, a: NodeId) -> NodeId {
        self.push(Op::Cos(a))
    }

    /// `offset + Σ cᵢ·nodeᵢ`.
    pub fn affine(&mut self, terms: Vec<(NodeId, f64)>, offset: f64) -> NodeId {
        self.push(Op::Affine { terms, offset })
    }

    pub fn scale(&mut self, a: NodeId, c: f64) -> NodeId {
        self.affine(vec![(a, c)], 0.0)
    }

    /// Softmax-weighted mean `Σ aᵢ e^{k aᵢ} / Σ e^{k aᵢ}`.
    pub fn smooth_max(&mut self, args: Vec<NodeId>, k: f64) -> NodeId {
        assert!(!args.is_empty(), "smooth_max needs at least one argument");
        self.push(Op::SmoothMax { args, k })
    }

    /// Log-sum-exp under-approximation `−(1/k) log Σ e^{−k aᵢ}`.
    pub fn smooth_min(&mut self, args: Vec<NodeId>, k: f64) -> NodeId {
        assert!(!args.is_empty(), "smooth_min needs at least one argument");
        self.push(Op::SmoothMin { args, k })
    }

    /// Copies `f` into this tape, substituting `inputs[i]` for variable `i`
    /// of `f`'s own vector. Returns the node holding `f`'s output.
    pub fn inline(&mut self, f: &DiffFunction, inputs: &[NodeId]) -> NodeId {
        let mut remap: Vec<NodeId> = Vec::with_capacity(f.ops.len());
        for op in &f.ops {
            let m = |id: &NodeId| remap[*id as usize];
            let new = match op {
                // Var nodes forward to the caller's node; nothing is pushed.
                Op::Var(slot) => {
                    remap.push(inputs[f.vars[*slot as usize]]);
                    continue;
                }
                Op::Const(c) => Op::Const(*c),
                Op::Add(a, b) => Op::Add(m(a), m(b)),
                Op::Sub(a, b) => Op::Sub(m(a), m(b)),
                Op::Mul(a, b) => Op::Mul(m(a), m(b)),
                Op::Neg(a) => Op::Neg(m(a)),
                Op::Square(a) => Op::Square(m(a)),
                Op::Sin(a) => Op::Sin(m(a)),
                Op::Cos(a) => Op::Cos(m(a)),
                Op::Affine { terms, offset } => Op::Affine {
                    terms: terms.iter().map(|(a, c)| (m(a), *c)).collect(),
                    offset: *offset,
                },
                Op::SmoothMax { args, k } => Op::SmoothMax {
                    args: args.iter().map(m).collect(),
                    k: *k,
                },
                Op::SmoothMin { args, k } => Op::SmoothMin {
                    args: args.iter().map(m).collect(),
                    k: *k,
                },
            };
            remap.push(self.push(new));
        }
        remap[f.out as usize]
    }

    pub fn finish(self, out: NodeId) -> DiffFunction {
        DiffFunction {
            ops: self.ops,
            vars: self.vars,
            out,
        }
    }
}

/// Scratch buffers for tape evaluation. One per thread of work.
#[derive(Debug, Default, Clone)]
pub struct Workspace {
    vals: Vec<f64>,
    tans: Vec<f64>,
    weights: Vec<f64>,
}

impl Workspace {
    pub fn new() -> Self {
        Self::default()
    }
}

/// A smooth scalar function of a sparse subset of some vector, with exact
/// gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffFunction {
    ops: Vec<Op>,
    vars: Vec<usize>,
    out: NodeId,
}

impl DiffFunction {
    /// Indices (in the enclosing vector) of the variables the function reads,
    /// in local-slot order. Gradients are reported in this order.
    pub fn vars(&self) -> &[usize] {
        &self.vars
    }

    pub fn arity(&self) -> usize {
        self.vars.len()
    }

    pub fn node_count(&self) -> usize {
        self.ops.len()
    }

    pub fn constant(c: f64) -> Self {
        let mut b = TapeBuilder::new();
        let out = b.constant(c);
        b.finish(out)
    }

    /// Value at the point `x` (the full enclosing vector).
    pub fn value(&self, x: &[f64], ws: &mut Workspace) -> f64 {
        let vals = &mut ws.vals;
        vals.clear();
        vals.reserve(self.ops.len());
        for op in &self.ops {
            let v = match op {
                Op::Const(c) => *c,
                Op::Var(slot) => x[self.vars[*slot as usize]],
                Op::Add(a, b) => vals[*a as usize] + vals[*b as usize],
                Op::Sub(a, b) => vals[*a as usize] - vals[*b as usize],
                Op::Mul(a, b) => vals[*a as usize] * vals[*b as usize],
                Op::Neg(a) => -vals[*a as usize],
                Op::Square(a) => vals[*a as usize] * vals[*a as usize],
                Op::Sin(a) => vals[*a as usize].sin(),
                Op::Cos(a) => vals[*a as usize].cos(),
                Op::Affine { terms, offset } => terms.iter().fold(*offset, |acc, (a, c)| acc + c * vals[*a as usize]),
                Op::SmoothMax { args, k } => {
                    let (v, _) = smooth_max_weights(args, *k, vals, &mut ws.weights);
                    v
                }
                Op::SmoothMin { args, k } => {
                    let (v, _) = smooth_min_weights(args, *k, vals, &mut ws.weights);
                    v
                }
            };
            vals.push(v);
        }
        vals[self.out as usize]
    }

    /// Value and local gradient at `x`. `grad` must have length [`arity`].
    ///
    /// [`arity`]: DiffFunction::arity
    pub fn value_grad(&self, x: &[f64], ws: &mut Workspace, grad: &mut [f64]) -> f64 {
        let k = self.vars.len();
        assert_eq!(grad.len(), k, "gradient buffer has wrong length");
        let n = self.ops.len();
        ws.vals.clear();
        ws.vals.resize(n, 0.0);
        ws.tans.clear();
        ws.tans.resize(n * k, 0.0);
        let Workspace { vals, tans, weights } = ws;

        for (i, op) in self.ops.iter().enumerate() {
            let (done, rest) = tans.split_at_mut(i * k);
            let tan = &mut rest[..k];
            let t = |id: &NodeId| &done[*id as usize * k..(*id as usize + 1) * k];
            let v = match op {
                Op::Const(c) => *c,
                Op::Var(slot) => {
                    tan[*slot as usize] = 1.0;
                    x[self.vars[*slot as usize]]
                }
                Op::Add(a, b) => {
                    for ((o, p), q) in tan.iter_mut().zip(t(a)).zip(t(b)) {
                        *o = p + q;
                    }
                    vals[*a as usize] + vals[*b as usize]
                }
                Op::Sub(a, b) => {
                    for ((o, p), q) in tan.iter_mut().zip(t(a)).zip(t(b)) {
                        *o = p - q;
                    }
                    vals[*a as usize] - vals[*b as usize]
                }
                Op::Mul(a, b) => {
                    let (va, vb) = (vals[*a as usize], vals[*b as usize]);
                    for ((o, p), q) in tan.iter_mut().zip(t(a)).zip(t(b)) {
                        *o = vb * p + va * q;
                    }
                    va * vb
                }
                Op::Neg(a) => {
                    for (o, p) in tan.iter_mut().zip(t(a)) {
                        *o = -p;
                    }
                    -vals[*a as usize]
                }
                Op::Square(a) => {
                    let va = vals[*a as usize];
                    for (o, p) in tan.iter_mut().zip(t(a)) {
                        *o = 2.0 * va * p;
                    }
                    va * va
                }
                Op::Sin(a) => {
                    let va = vals[*a as usize];
                    let d = va.cos();
                    for (o, p) in tan.iter_mut().zip(t(a)) {
                        *o = d * p;
                    }
                    va.sin()
                }
                Op::Cos(a) => {
                    let va = vals[*a as usize];
                    let d = -va.sin();
                    for (o, p) in tan.iter_mut().zip(t(a)) {
                        *o = d * p;
                    }
                    va.cos()
                }
                Op::Affine { terms, offset } => {
                    let mut v = *offset;
                    for (a, c) in terms {
                        v += c * vals[*a as usize];
                        for (o, p) in tan.iter_mut().zip(t(a)) {
                            *o += c * p;
                        }
                    }
                    v
                }
                Op::SmoothMax { args, k: sharp } => {
                    let (v, partials) = smooth_max_weights(args, *sharp, vals, weights);
                    for (a, w) in args.iter().zip(partials) {
                        for (o, p) in tan.iter_mut().zip(t(a)) {
                            *o += w * p;
                        }
                    }
                    v
                }
                Op::SmoothMin { args, k: sharp } => {
                    let (v, partials) = smooth_min_weights(args, *sharp, vals, weights);
                    for (a, w) in args.iter().zip(partials) {
                        for (o, p) in tan.iter_mut().zip(t(a)) {
                            *o += w * p;
                        }
                    }
                    v
                }
            };
            vals[i] = v;
        }
        let out = self.out as usize;
        grad.copy_from_slice(&tans[out * k..(out + 1) * k]);
        vals[out]
    }
}

/// Value of the softmax-weighted mean and its partials w.r.t. each argument.
/// Exponents are shifted by the max, which leaves the value unchanged.
fn smooth_max_weights<'w>(args: &[NodeId], k: f64, vals: &[f64], weights: &'w mut Vec<f64>) -> (f64, &'w [f64]) {
    let top = args.iter().map(|a| vals[*a as usize]).fold(f64::NEG_INFINITY, f64::max);
    weights.clear();
    let mut denom = 0.0;
    let mut numer = 0.0;
    for a in args {
        let ai = vals[*a as usize];
        let w = (k * (ai - top)).exp();
        denom += w;
        numer += ai * w;
        weights.push(w);
    }
    let v = numer / denom;
    for (w, a) in weights.iter_mut().zip(args) {
        let ai = vals[*a as usize];
        *w = *w / denom * (1.0 + k * (ai - v));
    }
    (v, weights)
}

fn smooth_min_weights<'w>(args: &[NodeId], k: f64, vals: &[f64], weights: &'w mut Vec<f64>) -> (f64, &'w [f64]) {
    let bottom = args.iter().map(|a| vals[*a as usize]).fold(f64::INFINITY, f64::min);
    weights.clear();
    let mut sum = 0.0;
    for a in args {
        let w = (-k * (vals[*a as usize] - bottom)).exp();
        sum += w;
        weights.push(w);
    }
    for w in weights.iter_mut() {
        *w /= sum;
    }
    (bottom - sum.ln() / k, weights)
}

/// Largest relative discrepancy between the tape gradient of `f` at `point`
/// and central finite differences. Coordinate `i` uses the step
/// `step·(1 + |xᵢ|)`; the error is `|fd − g| / max(1, |g|)`.
pub fn fd_check(f: &DiffFunction, point: &[f64], step: f64) -> f64 {
    let mut ws = Workspace::new();
    let mut grad = vec![0.0; f.arity()];
    f.value_grad(point, &mut ws, &mut grad);
    let mut x = point.to_vec();
    let mut worst: f64 = 0.0;
    for (slot, &idx) in f.vars().iter().enumerate() {
        let h = step * (1.0 + point[idx].abs());
        x[idx] = point[idx] + h;
        let up = f.value(&x, &mut ws);
        x[idx] = point[idx] - h;
        let down = f.value(&x, &mut ws);
        x[idx] = point[idx];
        let fd = (up - down) / (2.0 * h);
        let err = (fd - grad[slot]).abs() / grad[slot].abs().max(1.0);
        worst = worst.max(err);
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eval_both(f: &DiffFunction, x: &[f64]) -> (f64, Vec<f64>) {
        let mut ws = Workspace::new();
        let mut g = vec![0.0; f.arity()];
        let v = f.value_grad(x, &mut ws, &mut g);
        assert_eq!(v, f.value(x, &mut ws));
        (v, g)
    }

    #[test]
    fn product_rule_and_trig() {
        let mut b = TapeBuilder::new();
        let x = b.var(3);
        let y = b.var(0);
        let s = b.sin(x);
        let p = b.mul(s, y);
        let c = b.cos(y);
        let out = b.add(p, c);
        let f = b.finish(out);
        assert_eq!(f.vars(), &[3, 0]);
        let point = [0.7, 0.0, 0.0, 1.3];
        let (v, g) = eval_both(&f, &point);
        assert!((v - (1.3f64.sin() * 0.7 + 0.7f64.cos())).abs() < 1e-15);
        assert!((g[0] - 1.3f64.cos() * 0.7).abs() < 1e-15);
        assert!((g[1] - (1.3f64.sin() - 0.7f64.sin())).abs() < 1e-15);
    }

    #[test]
    fn var_nodes_are_shared() {
        let mut b = TapeBuilder::new();
        let a = b.var(5);
        let a2 = b.var(5);
        assert_eq!(a, a2);
        let out = b.square(a);
        let f = b.finish(out);
        assert_eq!(f.arity(), 1);
        let mut x = vec![0.0; 6];
        x[5] = -3.0;
        let (v, g) = eval_both(&f, &x);
        assert_eq!(v, 9.0);
        assert_eq!(g, vec![-6.0]);
    }

    #[test]
    fn fd_exact_for_linear() {
        let mut b = TapeBuilder::new();
        let x = b.var(0);
        let y = b.var(1);
        let out = b.affine(vec![(x, 2.0), (y, -3.0)], 0.25);
        let f = b.finish(out);
        assert!(fd_check(&f, &[0.3, -0.2], 1e-3) <= 1e-10);
    }

    #[test]
    fn smooth_ops_match_fd() {
        let mut b = TapeBuilder::new();
        let xs: Vec<_> = (0..4).map(|i| b.var(i)).collect();
        let lo = b.smooth_min(xs.clone(), 25.0);
        let hi = b.smooth_max(xs, 3.0);
        let out = b.mul(lo, hi);
        let f = b.finish(out);
        let p = [0.1, 0.15, -0.4, 0.9];
        assert!(fd_check(&f, &p, 1e-6) <= 1e-5);
    }

    #[test]
    fn smooth_ops_survive_large_arguments() {
        let mut b = TapeBuilder::new();
        let xs: Vec<_> = (0..2).map(|i| b.var(i)).collect();
        let out = b.smooth_min(xs, 100.0);
        let f = b.finish(out);
        let (v, g) = eval_both(&f, &[1000.0, 1000.0]);
        assert!((v - (1000.0 - 2f64.ln() / 100.0)).abs() < 1e-9);
        assert!((g[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn inline_substitutes_inputs() {
        // g(s) = s0² − s1 over a two-vector.
        let mut b = TapeBuilder::new();
        let s0 = b.var(0);
        let s1 = b.var(1);
        let sq = b.square(s0);
        let out = b.sub(sq, s1);
        let g = b.finish(out);

        // f(z) = g(z4, z2) + z4.
        let mut b = TapeBuilder::new();
        let z4 = b.var(4);
        let z2 = b.var(2);
        let inner = b.inline(&g, &[z4, z2]);
        let out = b.add(inner, z4);
        let f = b.finish(out);
        let z = [0.0, 0.0, 5.0, 0.0, 3.0];
        let (v, grad) = eval_both(&f, &z);
        assert_eq!(v, 9.0 - 5.0 + 3.0);
        assert_eq!(grad, vec![7.0, -1.0]);
    }
}
