//! Robustness trees: min/max internal nodes over predicate-at-time leaves.

use std::collections::{HashMap, HashSet};
use std::fmt::{self, Write as _};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::formula::{Formula, Predicate};
use crate::trajectory::Trajectory;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeType {
    Min,
    Max,
}

#[derive(Debug, Clone)]
pub enum NodeKind {
    Leaf { pred: Predicate, t: usize },
    Min,
    Max,
}

/// Node labelled by the subformula and time step it was expanded from.
#[derive(Debug, Clone)]
pub struct TreeNode {
    pub kind: NodeKind,
    pub children: Vec<TreeNode>,
    /// Text of the originating subformula.
    pub label: Arc<str>,
    /// Time step of the originating `(subformula, t)` pair.
    pub t: usize,
}

impl TreeNode {
    pub fn leaf(pred: Predicate, t: usize) -> Self {
        let label: Arc<str> = Arc::from(pred.to_string());
        TreeNode {
            kind: NodeKind::Leaf { pred, t },
            children: Vec::new(),
            label,
            t,
        }
    }

    pub fn internal(ty: NodeType, children: Vec<TreeNode>, label: Arc<str>, t: usize) -> Self {
        let kind = match ty {
            NodeType::Min => NodeKind::Min,
            NodeType::Max => NodeKind::Max,
        };
        TreeNode {
            kind,
            children,
            label,
            t,
        }
    }

    pub fn node_type(&self) -> Option<NodeType> {
        match self.kind {
            NodeKind::Leaf { .. } => None,
            NodeKind::Min => Some(NodeType::Min),
            NodeKind::Max => Some(NodeType::Max),
        }
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self.kind, NodeKind::Leaf { .. })
    }

    pub fn node_count(&self) -> usize {
        1 + self.children.iter().map(TreeNode::node_count).sum::<usize>()
    }

    pub fn leaf_count(&self) -> usize {
        if self.is_leaf() {
            1
        } else {
            self.children.iter().map(TreeNode::leaf_count).sum()
        }
    }

    pub fn depth(&self) -> usize {
        1 + self.children.iter().map(TreeNode::depth).max().unwrap_or(0)
    }

    /// Largest leaf time step.
    pub fn max_time(&self) -> usize {
        match &self.kind {
            NodeKind::Leaf { t, .. } => *t,
            _ => self.children.iter().map(TreeNode::max_time).max().unwrap_or(0),
        }
    }

    /// Same shape, types, leaves and order; labels are ignored.
    pub fn same_structure(&self, other: &TreeNode) -> bool {
        let kinds_match = match (&self.kind, &other.kind) {
            (NodeKind::Leaf { pred: a, t: s }, NodeKind::Leaf { pred: b, t: u }) => a == b && s == u,
            (NodeKind::Min, NodeKind::Min) | (NodeKind::Max, NodeKind::Max) => true,
            _ => false,
        };
        kinds_match
            && self.children.len() == other.children.len()
            && self
                .children
                .iter()
                .zip(&other.children)
                .all(|(a, b)| a.same_structure(b))
    }

    /// Indented human-readable dump, one node per line.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        self.dump_into(&mut out, 0);
        out
    }

    fn dump_into(&self, out: &mut String, depth: usize) {
        let pad = "  ".repeat(depth);
        let _ = match &self.kind {
            NodeKind::Leaf { pred, t } => writeln!(out, "{pad}leaf {pred} @ {t}"),
            NodeKind::Min => writeln!(out, "{pad}min ({} @ {})", self.label, self.t),
            NodeKind::Max => writeln!(out, "{pad}max ({} @ {})", self.label, self.t),
        };
        for c in &self.children {
            c.dump_into(out, depth + 1);
        }
    }
}

impl fmt::Display for TreeNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.dump())
    }
}

/// Expands `f` at step `t` into its robustness tree. `f` must be in negation
/// normal form and `t + horizon(f)` must not exceed `horizon`.
pub fn build_tree(f: &Formula, t: usize, horizon: usize) -> Result<TreeNode> {
    if !f.is_nnf() {
        return Err(Error::NotNnf);
    }
    let needed = t + f.horizon();
    if needed > horizon {
        return Err(Error::Horizon {
            needed,
            available: horizon,
        });
    }
    let mut labels = HashMap::new();
    Ok(expand(f, t, &mut labels))
}

fn label_of(f: &Formula, labels: &mut HashMap<*const Formula, Arc<str>>) -> Arc<str> {
    labels
        .entry(f as *const Formula)
        .or_insert_with(|| Arc::from(f.to_string()))
        .clone()
}

fn expand(f: &Formula, t: usize, labels: &mut HashMap<*const Formula, Arc<str>>) -> TreeNode {
    match f {
        Formula::Pred(p) => TreeNode::leaf(p.clone(), t),
        Formula::Not(_) => unreachable!("checked by is_nnf"),
        Formula::And(fs) => {
            let children = fs.iter().map(|g| expand(g, t, labels)).collect();
            TreeNode::internal(NodeType::Min, children, label_of(f, labels), t)
        }
        Formula::Or(fs) => {
            let children = fs.iter().map(|g| expand(g, t, labels)).collect();
            TreeNode::internal(NodeType::Max, children, label_of(f, labels), t)
        }
        Formula::Always(i, g) => {
            let children = i.steps().map(|s| expand(g, t + s, labels)).collect();
            TreeNode::internal(NodeType::Min, children, label_of(f, labels), t)
        }
        Formula::Eventually(i, g) => {
            let children = i.steps().map(|s| expand(g, t + s, labels)).collect();
            TreeNode::internal(NodeType::Max, children, label_of(f, labels), t)
        }
        Formula::Until(i, a, b) => {
            let label = label_of(f, labels);
            let children = i
                .steps()
                .map(|s| {
                    let mut block: Vec<TreeNode> = (0..s).map(|j| expand(a, t + j, labels)).collect();
                    block.push(expand(b, t + s, labels));
                    TreeNode::internal(NodeType::Min, block, label.clone(), t)
                })
                .collect();
            TreeNode::internal(NodeType::Max, children, label, t)
        }
    }
}

/// Splices same-typed children into their parent and collapses single-child
/// internal nodes. The value of the tree is unchanged.
pub fn flatten(root: &TreeNode) -> TreeNode {
    let Some(ty) = root.node_type() else {
        return root.clone();
    };
    let mut children = Vec::with_capacity(root.children.len());
    for c in &root.children {
        let c = flatten(c);
        if c.node_type() == Some(ty) {
            children.extend(c.children);
        } else {
            children.push(c);
        }
    }
    if children.len() == 1 {
        return children.pop().unwrap();
    }
    TreeNode {
        kind: root.kind.clone(),
        children,
        label: root.label.clone(),
        t: root.t,
    }
}

/// Drops repeated leaves (same predicate, same step) among the children of
/// each internal node, keeping the first occurrence. Min and max are
/// idempotent, so the value is unchanged.
pub fn dedup_leaves(root: &TreeNode) -> TreeNode {
    if root.is_leaf() {
        return root.clone();
    }
    let mut seen: HashSet<(String, bool, usize)> = HashSet::new();
    let mut children = Vec::with_capacity(root.children.len());
    for c in &root.children {
        if let NodeKind::Leaf { pred, t } = &c.kind {
            let (name, neg) = pred.key();
            if !seen.insert((name.to_string(), neg, *t)) {
                continue;
            }
            children.push(c.clone());
        } else {
            children.push(dedup_leaves(c));
        }
    }
    if children.len() == 1 {
        return children.pop().unwrap();
    }
    TreeNode {
        kind: root.kind.clone(),
        children,
        label: root.label.clone(),
        t: root.t,
    }
}

/// Options for [`prepare_tree`].
#[derive(Debug, Clone, Copy)]
pub struct TreeOptions {
    pub flatten: bool,
    pub dedup: bool,
}

impl Default for TreeOptions {
    fn default() -> Self {
        Self {
            flatten: true,
            dedup: true,
        }
    }
}

/// NNF formula at step 0 → tree, then optional flattening and leaf
/// deduplication.
pub fn prepare_tree(f: &Formula, horizon: usize, opts: TreeOptions) -> Result<TreeNode> {
    let mut tree = build_tree(f, 0, horizon)?;
    if opts.flatten {
        tree = flatten(&tree);
    }
    if opts.dedup {
        tree = dedup_leaves(&tree);
        if opts.flatten {
            // A node reduced to one child may expose a same-typed grandchild.
            tree = flatten(&tree);
        }
    }
    Ok(tree)
}

/// Exact min/max evaluation of the tree on `x`.
pub fn eval_tree(root: &TreeNode, x: &Trajectory) -> f64 {
    match &root.kind {
        NodeKind::Leaf { pred, t } => pred.eval(x.state(*t)),
        NodeKind::Min => root
            .children
            .iter()
            .map(|c| eval_tree(c, x))
            .fold(f64::INFINITY, f64::min),
        NodeKind::Max => root
            .children
            .iter()
            .map(|c| eval_tree(c, x))
            .fold(f64::NEG_INFINITY, f64::max),
    }
}
