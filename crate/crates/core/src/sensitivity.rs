//! Exact average sensitivity (total influence) of decision trees.
//!
//! Two independent routes:
//!
//! * [`avg_sensitivity_bruteforce`] counts disagreeing Hamming edges of the
//!   packed truth table, for `n <= 24`.
//! * [`avg_sensitivity_structural`] never enumerates inputs. Flipping `x_i`
//!   changes the path of `x` only at the unique vertex `u` on that path
//!   querying `i`, so
//!
//!   `s(T) = sum_u 2^-depth(u) * Pr[on0(u) != on1(u) | bits fixed above u]`.
//!
//! Both return exact [`Dyadic`]s.

use num_bigint::BigUint;
use num_traits::Zero;

use crate::dyadic::Dyadic;
use crate::error::{Error, Result};
use crate::tree::{DecisionTree, Node};

/// Largest `n` for which truth tables are built.
pub const BRUTE_FORCE_CAP: usize = 24;

/// Packed truth table; bit `x` is `f(x)` where variable `i` is bit `i` of
/// the index `x`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TruthTable {
    n: usize,
    words: Vec<u64>,
}

impl TruthTable {
    pub fn from_fn(n: usize, f: impl Fn(u64) -> bool) -> Result<TruthTable> {
        if n > BRUTE_FORCE_CAP {
            return Err(Error::Capacity {
                what: "truth table",
                n,
                cap: BRUTE_FORCE_CAP,
            });
        }
        let size = 1u64 << n;
        let mut words = vec![0u64; size.div_ceil(64) as usize];
        for x in 0..size {
            if f(x) {
                words[(x / 64) as usize] |= 1 << (x % 64);
            }
        }
        Ok(TruthTable { n, words })
    }

    pub fn vars(&self) -> usize {
        self.n
    }

    pub fn get(&self, x: u64) -> bool {
        (self.words[(x / 64) as usize] >> (x % 64)) & 1 == 1
    }

    pub fn count_ones(&self) -> u64 {
        self.words.iter().map(|w| w.count_ones() as u64).sum()
    }

    /// Number of inputs `x` with `x_i = 0` and `f(x) != f(x with bit i set)`.
    pub fn sensitive_edges(&self, i: usize) -> u64 {
        const LOW_HALVES: [u64; 6] = [
            0x5555_5555_5555_5555,
            0x3333_3333_3333_3333,
            0x0f0f_0f0f_0f0f_0f0f,
            0x00ff_00ff_00ff_00ff,
            0x0000_ffff_0000_ffff,
            0x0000_0000_ffff_ffff,
        ];
        assert!(i < self.n);
        if i < 6 {
            let shift = 1u32 << i;
            self.words
                .iter()
                .map(|&w| ((w ^ (w >> shift)) & LOW_HALVES[i]).count_ones() as u64)
                .sum()
        } else {
            let stride = 1usize << (i - 6);
            (0..self.words.len())
                .filter(|j| j & stride == 0)
                .map(|j| (self.words[j] ^ self.words[j + stride]).count_ones() as u64)
                .sum()
        }
    }
}

/// Truth table of `tree` over `n` variables.
pub fn truth_table(tree: &DecisionTree, n: usize) -> Result<TruthTable> {
    if tree.min_vars() > n {
        return Err(Error::usage(format!(
            "tree queries variable {} but n = {n}",
            tree.min_vars() - 1
        )));
    }
    TruthTable::from_fn(n, |x| tree.evaluate_index(x))
}

/// Influence of variable `i`: `Pr_x[f(x) != f(x^i)]`.
pub fn influence(tt: &TruthTable, i: usize) -> Dyadic {
    Dyadic::new(tt.sensitive_edges(i), tt.n as u64 - 1)
}

/// `2^-n * sum_x sum_i |f(x) - f(x^i)|`.
pub fn avg_sensitivity_bruteforce(tt: &TruthTable) -> Dyadic {
    let edges: u64 = (0..tt.n).map(|i| tt.sensitive_edges(i)).sum();
    // every disagreeing edge is seen from both endpoints
    Dyadic::new(2 * edges, tt.n as u64)
}

/// Bits fixed along a root path.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PathContext {
    fixed: Vec<(usize, bool)>,
}

impl PathContext {
    pub fn new() -> Self {
        PathContext::default()
    }

    /// Adds `var = bit`. Fixing a variable twice is a usage error.
    pub fn with(mut self, var: usize, bit: bool) -> Result<Self> {
        if self.get(var).is_some() {
            return Err(Error::usage(format!("variable {var} already fixed")));
        }
        self.fixed.push((var, bit));
        Ok(self)
    }

    pub fn get(&self, var: usize) -> Option<bool> {
        self.fixed.iter().find(|(v, _)| *v == var).map(|(_, b)| *b)
    }

    pub fn len(&self) -> usize {
        self.fixed.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fixed.is_empty()
    }
}

/// Dense per-variable state used inside the kernel.
const FREE: u8 = 0;
const ZERO: u8 = 1;
const ONE: u8 = 2;

/// Probability mass scaled by `2^budget`. Exact as long as `budget` covers
/// the number of free branchings, which `depth(a) + depth(b)` always does.
trait Mass: Clone + std::ops::Add<Output = Self> {
    fn zero() -> Self;
    fn pow2(k: u32) -> Self;
    fn into_big(self) -> BigUint;
}

impl Mass for u128 {
    fn zero() -> Self {
        0
    }
    fn pow2(k: u32) -> Self {
        1u128 << k
    }
    fn into_big(self) -> BigUint {
        BigUint::from(self)
    }
}

impl Mass for BigUint {
    fn zero() -> Self {
        Zero::zero()
    }
    fn pow2(k: u32) -> Self {
        BigUint::from(1u32) << k as usize
    }
    fn into_big(self) -> BigUint {
        self
    }
}

/// Follows `node` through every vertex whose variable is already fixed.
fn settle<'a, L>(mut node: &'a Node<L>, ctx: &[u8]) -> &'a Node<L> {
    while let Node::Query { var, on0, on1 } = node {
        match ctx.get(*var).copied().unwrap_or(FREE) {
            ZERO => node = on0,
            ONE => node = on1,
            _ => break,
        }
    }
    node
}

fn disagree_mass<L, M: Mass, F: Fn(&L) -> bool>(
    a: &Node<L>,
    b: &Node<L>,
    ctx: &mut [u8],
    budget: u32,
    label: &F,
) -> M {
    let a = settle(a, ctx);
    let b = settle(b, ctx);
    let (var, lo, hi, other, a_side) = match (a, b) {
        (Node::Leaf(x), Node::Leaf(y)) => {
            return if label(x) != label(y) {
                M::pow2(budget)
            } else {
                M::zero()
            };
        }
        (Node::Query { var, on0, on1 }, _) => (*var, &**on0, &**on1, b, true),
        (_, Node::Query { var, on0, on1 }) => (*var, &**on0, &**on1, a, false),
    };
    let branch = |child: &Node<L>, bit: u8, ctx: &mut [u8]| -> M {
        ctx[var] = bit;
        let m = if a_side {
            disagree_mass(child, other, ctx, budget - 1, label)
        } else {
            disagree_mass(other, child, ctx, budget - 1, label)
        };
        ctx[var] = FREE;
        m
    };
    let m0 = branch(lo, ZERO, ctx);
    let m1 = branch(hi, ONE, ctx);
    m0 + m1
}

/// `Pr[a(x) != b(x)]` for the leaf labels `label`, over uniform `x` with the
/// bits in `ctx` fixed.
fn disagreement_with<L, F: Fn(&L) -> bool>(
    a: &Node<L>,
    b: &Node<L>,
    ctx: &mut [u8],
    label: &F,
) -> Dyadic {
    let budget = (a.depth() + b.depth()) as u32;
    let mass = if budget < 127 {
        disagree_mass::<L, u128, F>(a, b, ctx, budget, label).into_big()
    } else {
        disagree_mass::<L, BigUint, F>(a, b, ctx, budget, label)
    };
    Dyadic::new(num_bigint::BigInt::from(mass), budget as u64)
}

fn dense_context(width: usize, ctx: &PathContext) -> Vec<u8> {
    let width = ctx
        .fixed
        .iter()
        .map(|(v, _)| v + 1)
        .max()
        .unwrap_or(0)
        .max(width);
    let mut dense = vec![FREE; width];
    for &(var, bit) in &ctx.fixed {
        dense[var] = if bit { ONE } else { ZERO };
    }
    dense
}

/// Probability, over uniform values of the variables not fixed by `ctx`,
/// that `a` and `b` output different bits.
pub fn disagreement_probability(a: &DecisionTree, b: &DecisionTree, ctx: &PathContext) -> Dyadic {
    let mut dense = dense_context(a.min_vars().max(b.min_vars()), ctx);
    disagreement_with(a, b, &mut dense, &|bit: &bool| *bit)
}

/// Structural average sensitivity of a tree whose leaf labels are read
/// through `label`. Lets callers score one structure under many leaf
/// assignments without rebuilding the tree.
pub fn avg_sensitivity_labeled<L, F: Fn(&L) -> bool>(tree: &Node<L>, label: F) -> Dyadic {
    fn walk<L, F: Fn(&L) -> bool>(
        node: &Node<L>,
        depth: u64,
        ctx: &mut [u8],
        label: &F,
        acc: &mut Dyadic,
    ) {
        if let Node::Query { var, on0, on1 } = node {
            let p = disagreement_with(on0, on1, ctx, label);
            if !p.is_zero() {
                *acc = &*acc + &p.scale_pow2(-(depth as i64));
            }
            ctx[*var] = ZERO;
            walk(on0, depth + 1, ctx, label, acc);
            ctx[*var] = ONE;
            walk(on1, depth + 1, ctx, label, acc);
            ctx[*var] = FREE;
        }
    }
    let mut ctx = vec![FREE; tree.min_vars()];
    let mut acc = Dyadic::zero();
    walk(tree, 0, &mut ctx, &label, &mut acc);
    acc
}

/// Exact average sensitivity without enumerating inputs; works for any `n`.
pub fn avg_sensitivity_structural(tree: &DecisionTree) -> Dyadic {
    avg_sensitivity_labeled(tree, |bit: &bool| *bit)
}

/// `sum_l d(l) 2^-d(l)`: expected number of queries on a uniform input.
pub fn expected_path_length<L>(tree: &Node<L>) -> Dyadic {
    let mut total = Dyadic::zero();
    tree.visit_leaves(0, &mut |_, depth| {
        total = &total + &Dyadic::new(depth as i64, depth as u64);
    });
    total
}

/// `(1/2) sum_l d(l) 2^-d(l)`: mean average sensitivity over all leaf
/// assignments of the structure, since each queried coordinate of `x`
/// separates two leaves whose uniform labels differ with probability 1/2.
pub fn expected_sensitivity_over_leaves<L>(tree: &Node<L>) -> Dyadic {
    expected_path_length(tree).half()
}
