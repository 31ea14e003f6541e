//! Decision trees, their unlabeled skeletons, and leaf bookkeeping.
//!
//! A [`Node<L>`] is a full binary tree whose internal vertices query a
//! variable and whose leaves carry an `L`. Two instantiations matter:
//! [`DecisionTree`] (`L = bool`, the output bit) and [`Structure`]
//! (`L = ()`, leaves still open). [`Shape`] drops variable labels as well.
//!
//! Leaves are always enumerated depth-first with the `on0` subtree before the
//! `on1` subtree; [`LeafAssignment`] indexes into that order.

use std::fmt;

use crate::dyadic::Dyadic;
use crate::error::{Error, Result};

/// A full binary tree with variable-labeled internal vertices and `L` at the
/// leaves.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Node<L> {
    Leaf(L),
    Query {
        var: usize,
        on0: Box<Node<L>>,
        on1: Box<Node<L>>,
    },
}

/// A boolean decision tree.
pub type DecisionTree = Node<bool>;

/// Internal vertices labeled, leaves not yet assigned.
pub type Structure = Node<()>;

impl<L> Node<L> {
    pub fn query(var: usize, on0: Node<L>, on1: Node<L>) -> Self {
        Node::Query {
            var,
            on0: Box::new(on0),
            on1: Box::new(on1),
        }
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self, Node::Leaf(_))
    }

    /// Largest leaf depth; the root has depth 0.
    pub fn depth(&self) -> usize {
        match self {
            Node::Leaf(_) => 0,
            Node::Query { on0, on1, .. } => 1 + on0.depth().max(on1.depth()),
        }
    }

    pub fn leaf_count(&self) -> usize {
        match self {
            Node::Leaf(_) => 1,
            Node::Query { on0, on1, .. } => on0.leaf_count() + on1.leaf_count(),
        }
    }

    pub fn internal_count(&self) -> usize {
        match self {
            Node::Leaf(_) => 0,
            Node::Query { on0, on1, .. } => 1 + on0.internal_count() + on1.internal_count(),
        }
    }

    /// Largest variable index plus one, i.e. the smallest `n` the tree is
    /// valid for (0 for a bare leaf).
    pub fn min_vars(&self) -> usize {
        match self {
            Node::Leaf(_) => 0,
            Node::Query { var, on0, on1 } => (var + 1).max(on0.min_vars()).max(on1.min_vars()),
        }
    }

    /// Leaf labels in depth-first, `on0`-first order.
    pub fn leaves(&self) -> Vec<&L> {
        let mut out = Vec::new();
        self.visit_leaves(0, &mut |leaf, _| out.push(leaf));
        out
    }

    /// Calls `f(label, depth)` for every leaf in depth-first, `on0`-first
    /// order.
    pub fn visit_leaves<'a, F: FnMut(&'a L, usize)>(&'a self, depth: usize, f: &mut F) {
        match self {
            Node::Leaf(label) => f(label, depth),
            Node::Query { on0, on1, .. } => {
                on0.visit_leaves(depth + 1, f);
                on1.visit_leaves(depth + 1, f);
            }
        }
    }

    pub fn leaf_profile(&self) -> LeafProfile {
        let mut depths = Vec::new();
        self.visit_leaves(0, &mut |_, depth| depths.push(depth as u32));
        LeafProfile { depths }
    }

    pub fn min_leaf_depth(&self) -> usize {
        match self {
            Node::Leaf(_) => 0,
            Node::Query { on0, on1, .. } => 1 + on0.min_leaf_depth().min(on1.min_leaf_depth()),
        }
    }

    /// Relabels leaves, visiting them in depth-first, `on0`-first order.
    pub fn map_leaves<M, F: FnMut(&L) -> M>(&self, f: &mut F) -> Node<M> {
        match self {
            Node::Leaf(label) => Node::Leaf(f(label)),
            Node::Query { var, on0, on1 } => {
                let on0 = on0.map_leaves(f);
                let on1 = on1.map_leaves(f);
                Node::query(*var, on0, on1)
            }
        }
    }

    /// Forgets leaf labels.
    pub fn structure(&self) -> Structure {
        self.map_leaves(&mut |_| ())
    }

    /// Forgets every label.
    pub fn shape(&self) -> Shape {
        match self {
            Node::Leaf(_) => Shape::Leaf,
            Node::Query { on0, on1, .. } => Shape::node(on0.shape(), on1.shape()),
        }
    }

    /// Every violation of non-redundancy, the variable range `[0, n)` and the
    /// depth bound `d`. An empty list means the tree is valid.
    pub fn validate(&self, n: usize, d: usize) -> Vec<Violation> {
        let mut path = Vec::new();
        let mut out = Vec::new();
        self.validate_into(n, d, 0, &mut path, &mut out);
        out
    }

    fn validate_into(
        &self,
        n: usize,
        d: usize,
        depth: usize,
        path: &mut Vec<usize>,
        out: &mut Vec<Violation>,
    ) {
        match self {
            Node::Leaf(_) => {
                if depth > d {
                    out.push(Violation::DepthExceeded { depth, bound: d });
                }
            }
            Node::Query { var, on0, on1 } => {
                if *var >= n {
                    out.push(Violation::VariableOutOfRange { var: *var, n });
                }
                if path.contains(var) {
                    out.push(Violation::RepeatedVariable { var: *var, depth });
                }
                path.push(*var);
                on0.validate_into(n, d, depth + 1, path, out);
                on1.validate_into(n, d, depth + 1, path, out);
                path.pop();
            }
        }
    }

    pub fn is_valid(&self, n: usize, d: usize) -> bool {
        self.validate(n, d).is_empty()
    }
}

/// One way a tree fails to be a non-redundant depth-`d` tree on `n`
/// variables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    /// A vertex at `depth` queries a variable already queried above it.
    RepeatedVariable { var: usize, depth: usize },
    VariableOutOfRange { var: usize, n: usize },
    /// A leaf sits at `depth > bound`.
    DepthExceeded { depth: usize, bound: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::RepeatedVariable { var, depth } => {
                write!(f, "variable {var} repeated on path (at depth {depth})")
            }
            Violation::VariableOutOfRange { var, n } => {
                write!(f, "variable {var} out of range for n = {n}")
            }
            Violation::DepthExceeded { depth, bound } => {
                write!(f, "depth exceeds bound: leaf at depth {depth} > {bound}")
            }
        }
    }
}

/// Result of running a tree on one input.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Evaluation {
    pub value: bool,
    /// Number of variables queried, equal to the depth of the reached leaf.
    pub queries: usize,
}

impl DecisionTree {
    pub fn constant(value: bool) -> Self {
        Node::Leaf(value)
    }

    /// The tree querying `var` once and returning it.
    pub fn dictator(var: usize) -> Self {
        Node::query(var, Node::Leaf(false), Node::Leaf(true))
    }

    /// Follows `x` from the root. `x` must have exactly `n` bits.
    pub fn evaluate(&self, n: usize, x: &[bool]) -> Result<Evaluation> {
        if x.len() != n {
            return Err(Error::InputLength {
                expected: n,
                actual: x.len(),
            });
        }
        let mut node = self;
        let mut queries = 0;
        loop {
            match node {
                Node::Leaf(value) => {
                    return Ok(Evaluation {
                        value: *value,
                        queries,
                    })
                }
                Node::Query { var, on0, on1 } => {
                    let bit = *x.get(*var).ok_or_else(|| {
                        Error::usage(format!("tree queries variable {var} but n = {n}"))
                    })?;
                    node = if bit { on1 } else { on0 };
                    queries += 1;
                }
            }
        }
    }

    /// Evaluates on the input whose bit `i` is bit `i` of `x`.
    pub fn evaluate_index(&self, x: u64) -> bool {
        let mut node = self;
        loop {
            match node {
                Node::Leaf(value) => return *value,
                Node::Query { var, on0, on1 } => {
                    node = if (x >> var) & 1 == 1 { on1 } else { on0 };
                }
            }
        }
    }

    /// Splits into the unlabeled structure and its leaf bits.
    pub fn disassemble(&self) -> (Structure, LeafAssignment) {
        let bits = self.leaves().into_iter().copied().collect();
        (self.structure(), LeafAssignment { bits })
    }

    /// Copy of the tree with leaf `index` (depth-first order) negated.
    pub fn with_leaf_flipped(&self, index: usize) -> Result<DecisionTree> {
        let leaves = self.leaf_count();
        if index >= leaves {
            return Err(Error::usage(format!(
                "leaf index {index} out of range for {leaves} leaves"
            )));
        }
        let mut seen = 0;
        Ok(self.map_leaves(&mut |&bit| {
            let out = if seen == index { !bit } else { bit };
            seen += 1;
            out
        }))
    }

    /// The chain tree for `alpha*x0 + (1 - x0)*x1*...*x_{n-1}`: the `x0 = 1`
    /// branch is a depth-1 leaf labeled `alpha`, the `x0 = 0` branch checks the
    /// remaining variables for all-ones. Flipping `alpha` moves the average
    /// sensitivity by almost 1.
    pub fn tightness_family(n: usize, alpha: bool) -> Result<DecisionTree> {
        if n < 1 {
            return Err(Error::usage("tightness family needs n >= 1"));
        }
        let mut chain = Node::Leaf(n == 1);
        for var in (1..n).rev() {
            let rest = if var == n - 1 {
                Node::Leaf(true)
            } else {
                chain
            };
            chain = Node::query(var, Node::Leaf(false), rest);
        }
        Ok(Node::query(0, chain, Node::Leaf(alpha)))
    }
}

impl Structure {
    /// Complete depth-`d` structure querying variable `k` at depth `k`.
    pub fn complete(d: usize) -> Structure {
        fn build(level: usize, d: usize) -> Structure {
            if level == d {
                Node::Leaf(())
            } else {
                Node::query(level, build(level + 1, d), build(level + 1, d))
            }
        }
        build(0, d)
    }

    /// Attaches leaf bits to the open leaves, in depth-first order.
    pub fn assemble(&self, assignment: &LeafAssignment) -> Result<DecisionTree> {
        let leaves = self.leaf_count();
        if assignment.len() != leaves {
            return Err(Error::usage(format!(
                "assignment has {} bits for {} leaves",
                assignment.len(),
                leaves
            )));
        }
        let mut bits = assignment.bits.iter().copied();
        Ok(self.map_leaves(&mut |_| bits.next().unwrap()))
    }

    /// Leaves replaced by their depth-first index.
    pub fn indexed(&self) -> Node<usize> {
        let mut next = 0;
        self.map_leaves(&mut |_| {
            next += 1;
            next - 1
        })
    }
}

/// Leaf bits `z`, indexed in depth-first, `on0`-first leaf order.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LeafAssignment {
    pub bits: Vec<bool>,
}

impl LeafAssignment {
    pub fn new(bits: Vec<bool>) -> Self {
        LeafAssignment { bits }
    }

    /// The `len` low bits of `code`, bit `i` going to leaf `i`.
    pub fn from_code(len: usize, code: u64) -> Self {
        LeafAssignment {
            bits: (0..len).map(|i| (code >> i) & 1 == 1).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }
}

/// Multiset of leaf depths, in depth-first leaf order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LeafProfile {
    pub depths: Vec<u32>,
}

impl LeafProfile {
    pub fn new(depths: Vec<u32>) -> Self {
        LeafProfile { depths }
    }

    /// Profile of the complete depth-`d` tree.
    pub fn complete(d: u32) -> Self {
        LeafProfile {
            depths: vec![d; 1usize << d],
        }
    }

    pub fn len(&self) -> usize {
        self.depths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.depths.is_empty()
    }

    pub fn min(&self) -> Option<u32> {
        self.depths.iter().copied().min()
    }

    pub fn max(&self) -> Option<u32> {
        self.depths.iter().copied().max()
    }

    /// `sum 2^-d(l)`; exactly 1 for every full binary tree.
    pub fn kraft_sum(&self) -> Dyadic {
        self.depths
            .iter()
            .map(|&d| Dyadic::pow2_neg(d as u64))
            .sum()
    }

    pub fn sorted(&self) -> Vec<u32> {
        let mut depths = self.depths.clone();
        depths.sort_unstable();
        depths
    }
}

/// A full binary tree with no labels at all.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Shape {
    Leaf,
    Node(Box<Shape>, Box<Shape>),
}

impl Shape {
    pub fn node(left: Shape, right: Shape) -> Self {
        Shape::Node(Box::new(left), Box::new(right))
    }

    pub fn depth(&self) -> usize {
        match self {
            Shape::Leaf => 0,
            Shape::Node(l, r) => 1 + l.depth().max(r.depth()),
        }
    }

    pub fn leaf_count(&self) -> usize {
        match self {
            Shape::Leaf => 1,
            Shape::Node(l, r) => l.leaf_count() + r.leaf_count(),
        }
    }

    pub fn min_leaf_depth(&self) -> usize {
        match self {
            Shape::Leaf => 0,
            Shape::Node(l, r) => 1 + l.min_leaf_depth().min(r.min_leaf_depth()),
        }
    }

    pub fn leaf_profile(&self) -> LeafProfile {
        fn walk(shape: &Shape, depth: u32, out: &mut Vec<u32>) {
            match shape {
                Shape::Leaf => out.push(depth),
                Shape::Node(l, r) => {
                    walk(l, depth + 1, out);
                    walk(r, depth + 1, out);
                }
            }
        }
        let mut depths = Vec::new();
        walk(self, 0, &mut depths);
        LeafProfile { depths }
    }

    pub fn complete(d: usize) -> Shape {
        if d == 0 {
            Shape::Leaf
        } else {
            Shape::node(Shape::complete(d - 1), Shape::complete(d - 1))
        }
    }

    /// Every shape of depth at most `d`, by direct construction. Only
    /// feasible for small `d` (677 shapes at `d = 4`).
    pub fn enumerate(d: usize) -> Vec<Shape> {
        let mut out = vec![Shape::Leaf];
        if d > 0 {
            let smaller = Shape::enumerate(d - 1);
            for l in &smaller {
                for r in &smaller {
                    out.push(Shape::node(l.clone(), r.clone()));
                }
            }
        }
        out
    }
}
