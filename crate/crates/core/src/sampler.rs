//! Exact-uniform samplers for the four random-tree models.
//!
//! Generation follows the recursive method: at a vertex with depth budget
//! `k`, a leaf is emitted with probability `(#trees that are a leaf) /
//! (#trees with budget k)`, decided by an exact uniform draw below the
//! count. No floating point is involved, so the induced distributions are
//! exactly the intended ones.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::counting::{BigCount, CountClass, CountTable};
use crate::error::{Error, Result};
use crate::rng::RandomStream;
use crate::tree::{DecisionTree, LeafAssignment, Node, Shape, Structure};

/// Random-tree distributions over non-redundant trees of depth at most `d`
/// on `n` variables.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Model {
    /// Uniform shape, then uniform non-redundant variable labels top-down and
    /// uniform leaf bits. Not uniform over labeled trees.
    ShapeUniform,
    /// Uniform structure (internal labels, open leaves), then uniform leaf
    /// bits.
    StructureTwoStage,
    /// Uniform over fully labeled trees.
    FullUniform,
    /// Complete depth-`d` shape, uniform non-redundant labels, uniform bits.
    Complete,
}

impl Model {
    pub const ALL: [Model; 4] = [
        Model::ShapeUniform,
        Model::StructureTwoStage,
        Model::FullUniform,
        Model::Complete,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Model::ShapeUniform => "shape-uniform",
            Model::StructureTwoStage => "structure-two-stage",
            Model::FullUniform => "full-uniform",
            Model::Complete => "complete",
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Model {
    type Err = Error;

    fn from_str(s: &str) -> Result<Model> {
        let key = s.trim().to_ascii_lowercase().replace('_', "-");
        Model::ALL
            .into_iter()
            .find(|m| m.name() == key)
            .ok_or_else(|| Error::usage(format!("unknown model {s:?}")))
    }
}

/// Uniform integer in `[0, bound)`: draws `bits(bound - 1)` random bits and
/// rejects values `>= bound`, so fewer than two attempts are needed on
/// average.
pub fn uniform_below(bound: &BigCount, rng: &mut RandomStream) -> BigCount {
    assert!(!bound.is_zero(), "uniform_below needs bound >= 1");
    if let Some(small) = bound.to_u64() {
        return BigCount::from(rng.below(small));
    }
    let width = (bound - 1u32).bits();
    let words = width.div_ceil(64) as usize;
    let top_bits = width - 64 * (words as u64 - 1);
    let top_mask = if top_bits == 64 {
        u64::MAX
    } else {
        (1u64 << top_bits) - 1
    };
    loop {
        let mut digits = Vec::with_capacity(2 * words);
        for w in 0..words {
            let mut word = rng.next_u64();
            if w + 1 == words {
                word &= top_mask;
            }
            digits.push(word as u32);
            digits.push((word >> 32) as u32);
        }
        let draw = BigUint::new(digits);
        if &draw < bound {
            return draw;
        }
    }
}

/// A sampler with its counts precomputed for one `(model, d, n)`.
/// Immutable after construction and shareable across threads.
#[derive(Clone, Debug)]
pub struct Sampler {
    model: Model,
    d: usize,
    n: usize,
    /// `descent[k]`: number of trees with depth budget `k` and
    /// `n - (d - k)` variables left, in the class the model draws from.
    descent: Vec<BigCount>,
}

impl Sampler {
    pub fn new(model: Model, d: usize, n: usize) -> Result<Sampler> {
        if n < d {
            return Err(Error::usage(format!(
                "need n >= d for non-redundant depth-{d} trees, got n = {n}"
            )));
        }
        let class = match model {
            Model::ShapeUniform => Some(CountClass::Shapes),
            Model::StructureTwoStage => Some(CountClass::Structures),
            Model::FullUniform => Some(CountClass::Labeled),
            Model::Complete => None,
        };
        let descent = match class {
            Some(class) => CountTable::new().descent(class, d, n)?,
            None => Vec::new(),
        };
        Ok(Sampler {
            model,
            d,
            n,
            descent,
        })
    }

    pub fn model(&self) -> Model {
        self.model
    }

    pub fn depth(&self) -> usize {
        self.d
    }

    pub fn vars(&self) -> usize {
        self.n
    }

    pub fn sample(&self, rng: &mut RandomStream) -> DecisionTree {
        match self.model {
            Model::ShapeUniform => {
                let shape = self.shape_below(self.d, rng);
                let structure = label_shape(&shape, self.n, &mut Vec::new(), rng);
                with_random_leaves(&structure, rng)
            }
            Model::StructureTwoStage => {
                let structure = self.structure_below(self.d, &mut Vec::new(), rng);
                with_random_leaves(&structure, rng)
            }
            Model::FullUniform => self.labeled_below(self.d, &mut Vec::new(), rng),
            Model::Complete => {
                let structure = label_shape(&Shape::complete(self.d), self.n, &mut Vec::new(), rng);
                with_random_leaves(&structure, rng)
            }
        }
    }

    /// The first stage of the two-stage model on its own: a uniform
    /// structure. Available for every model except `FullUniform`, where it
    /// returns the structure of a uniform labeled tree.
    pub fn sample_structure(&self, rng: &mut RandomStream) -> Structure {
        match self.model {
            Model::StructureTwoStage => self.structure_below(self.d, &mut Vec::new(), rng),
            Model::ShapeUniform => {
                let shape = self.shape_below(self.d, rng);
                label_shape(&shape, self.n, &mut Vec::new(), rng)
            }
            Model::Complete => label_shape(&Shape::complete(self.d), self.n, &mut Vec::new(), rng),
            Model::FullUniform => self.sample(rng).structure(),
        }
    }

    fn shape_below(&self, budget: usize, rng: &mut RandomStream) -> Shape {
        if uniform_below(&self.descent[budget], rng).is_zero() {
            return Shape::Leaf;
        }
        let left = self.shape_below(budget - 1, rng);
        let right = self.shape_below(budget - 1, rng);
        Shape::node(left, right)
    }

    fn structure_below(&self, budget: usize, path: &mut Vec<usize>, rng: &mut RandomStream) -> Structure {
        if uniform_below(&self.descent[budget], rng).is_zero() {
            return Node::Leaf(());
        }
        let var = pick_unused(self.n, path, rng);
        path.push(var);
        let on0 = self.structure_below(budget - 1, path, rng);
        let on1 = self.structure_below(budget - 1, path, rng);
        path.pop();
        Node::query(var, on0, on1)
    }

    fn labeled_below(&self, budget: usize, path: &mut Vec<usize>, rng: &mut RandomStream) -> DecisionTree {
        let draw = uniform_below(&self.descent[budget], rng);
        if draw < BigCount::from(2u32) {
            return Node::Leaf(!draw.is_zero());
        }
        let var = pick_unused(self.n, path, rng);
        path.push(var);
        let on0 = self.labeled_below(budget - 1, path, rng);
        let on1 = self.labeled_below(budget - 1, path, rng);
        path.pop();
        Node::query(var, on0, on1)
    }
}

/// Draws one tree from `model`.
pub fn sample(model: Model, d: usize, n: usize, rng: &mut RandomStream) -> Result<DecisionTree> {
    Ok(Sampler::new(model, d, n)?.sample(rng))
}

/// Uniform variable among `0..n` not already on `path`.
fn pick_unused(n: usize, path: &[usize], rng: &mut RandomStream) -> usize {
    let free = n - path.len();
    let mut rank = rng.below(free as u64) as usize;
    for var in 0..n {
        if path.contains(&var) {
            continue;
        }
        if rank == 0 {
            return var;
        }
        rank -= 1;
    }
    unreachable!("path longer than n")
}

/// Labels a shape top-down, each vertex uniformly among the variables not
/// used above it.
fn label_shape(shape: &Shape, n: usize, path: &mut Vec<usize>, rng: &mut RandomStream) -> Structure {
    match shape {
        Shape::Leaf => Node::Leaf(()),
        Shape::Node(l, r) => {
            let var = pick_unused(n, path, rng);
            path.push(var);
            let on0 = label_shape(l, n, path, rng);
            let on1 = label_shape(r, n, path, rng);
            path.pop();
            Node::query(var, on0, on1)
        }
    }
}

fn with_random_leaves(structure: &Structure, rng: &mut RandomStream) -> DecisionTree {
    let bits = (0..structure.leaf_count()).map(|_| rng.bit()).collect();
    structure
        .assemble(&LeafAssignment::new(bits))
        .expect("assignment length matches")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::to_text;
    use crate::counting::{count_labeled, count_shapes, count_structures};
    use crate::stats::{binomial_sigma, chi_square_uniform};
    use std::collections::HashMap;

    fn histogram<K: std::hash::Hash + Eq>(keys: impl Iterator<Item = K>) -> HashMap<K, u64> {
        let mut h = HashMap::new();
        for k in keys {
            *h.entry(k).or_insert(0) += 1;
        }
        h
    }

    #[test]
    fn model_names_roundtrip() {
        for m in Model::ALL {
            assert_eq!(m.name().parse::<Model>().unwrap(), m);
        }
        assert_eq!("FULL_UNIFORM".parse::<Model>().unwrap(), Model::FullUniform);
        assert!("uniformish".parse::<Model>().is_err());
    }

    #[test]
    fn uniform_below_small_bounds() {
        let mut rng = RandomStream::new(3);
        for _ in 0..100 {
            assert!(uniform_below(&BigCount::from(1u32), &mut rng).is_zero());
        }
        let ones = (0..10_000)
            .filter(|_| uniform_below(&BigCount::from(2u32), &mut rng) == BigCount::from(1u32))
            .count();
        // fair bit: 4 sigma = 200
        assert!((ones as i64 - 5000).abs() < 200, "{ones}");
    }

    #[test]
    fn uniform_below_five_chi_square() {
        let mut rng = RandomStream::new(11);
        let bound = BigCount::from(5u32);
        let mut counts = vec![0u64; 5];
        for _ in 0..100_000 {
            counts[uniform_below(&bound, &mut rng).to_usize().unwrap()] += 1;
        }
        let p = chi_square_uniform(&counts).p_value;
        assert!(p > 1e-3, "p = {p}");
    }

    #[test]
    fn uniform_below_big_bound() {
        // 3 * 2^100: the top third of [0, 2^102) must be rejected
        let bound = BigCount::from(3u32) << 100usize;
        let mut rng = RandomStream::new(5);
        let mut top = 0;
        for _ in 0..3000 {
            let x = uniform_below(&bound, &mut rng);
            assert!(x < bound);
            if x >= BigCount::from(2u32) << 100usize {
                top += 1;
            }
        }
        // expected 1000, sd ~ 26
        assert!((top as i64 - 1000).abs() < 130, "{top}");
    }

    #[test]
    fn depth_zero_is_a_leaf() {
        let mut rng = RandomStream::new(0);
        for model in Model::ALL {
            let t = sample(model, 0, 3, &mut rng).unwrap();
            assert!(t.is_leaf());
        }
    }

    #[test]
    fn rejects_too_few_variables() {
        assert!(matches!(Sampler::new(Model::FullUniform, 4, 3), Err(Error::Usage(_))));
    }

    #[test]
    fn samples_are_valid() {
        for model in Model::ALL {
            for (d, n) in [(1, 1), (3, 3), (4, 7), (6, 6), (8, 12)] {
                let s = Sampler::new(model, d, n).unwrap();
                for i in 0..30 {
                    let t = s.sample(&mut RandomStream::substream(9, i));
                    assert!(t.validate(n, d).is_empty(), "{model} {d} {n}");
                    if model == Model::Complete {
                        assert_eq!(t.min_leaf_depth(), d);
                    }
                }
            }
        }
    }

    #[test]
    fn reproducible() {
        for model in Model::ALL {
            let s = Sampler::new(model, 5, 7).unwrap();
            let a: Vec<_> = (0..10).map(|i| s.sample(&mut RandomStream::substream(42, i))).collect();
            let b: Vec<_> = (0..10).map(|i| s.sample(&mut RandomStream::substream(42, i))).collect();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn full_uniform_d1_n1_six_trees() {
        let s = Sampler::new(Model::FullUniform, 1, 1).unwrap();
        let mut rng = RandomStream::new(17);
        let h = histogram((0..60_000).map(|_| to_text(&s.sample(&mut rng))));
        assert_eq!(h.len(), 6);
        let counts: Vec<u64> = h.values().copied().collect();
        assert!(chi_square_uniform(&counts).p_value > 1e-3);
    }

    #[test]
    fn two_stage_root_leaf_probability() {
        // Pr[root leaf] = 1 / C(2,2) = 1/9
        let s = Sampler::new(Model::StructureTwoStage, 2, 2).unwrap();
        let mut rng = RandomStream::new(23);
        let trials = 90_000;
        let leaves = (0..trials).filter(|_| s.sample(&mut rng).is_leaf()).count() as f64;
        let p = 1.0 / 9.0;
        let sigma = (p * (1.0 - p) / trials as f64).sqrt();
        assert!((leaves / trials as f64 - p).abs() < 4.0 * sigma);
    }

    #[test]
    fn shape_uniform_covers_shapes_uniformly() {
        let s = Sampler::new(Model::ShapeUniform, 3, 3).unwrap();
        let mut rng = RandomStream::new(29);
        let h = histogram((0..26_000).map(|_| s.sample(&mut rng).shape()));
        assert_eq!(h.len() as u64, count_shapes(3).to_u64().unwrap());
        let counts: Vec<u64> = h.values().copied().collect();
        assert!(chi_square_uniform(&counts).p_value > 1e-3);
    }

    /// Exact probability that the vertex reached by `k` zero-edges is a leaf,
    /// given that it exists. Its subtree is then uniform in the model's class
    /// with budget `d - k`, so this is the leaf share of that class.
    fn conditional_leaf_probability(model: Model, d: usize, n: usize, k: usize) -> f64 {
        let budget = d - k;
        let vars = n - k;
        match model {
            Model::ShapeUniform => 1.0 / count_shapes(budget).to_f64().unwrap(),
            Model::StructureTwoStage => 1.0 / count_structures(budget, vars).unwrap().to_f64().unwrap(),
            Model::FullUniform => 2.0 / count_labeled(budget, vars).unwrap().to_f64().unwrap(),
            Model::Complete => (budget == 0) as u8 as f64,
        }
    }

    /// Follows `k` zero-edges; `None` if a leaf is hit first.
    fn leftmost_at(tree: &DecisionTree, k: usize) -> Option<&DecisionTree> {
        let mut node = tree;
        for _ in 0..k {
            match node {
                Node::Query { on0, .. } => node = on0,
                Node::Leaf(_) => return None,
            }
        }
        Some(node)
    }

    #[test]
    fn labeled_models_make_leaves_no_more_likely_than_shapes() {
        for d in 1..=6 {
            for n in d..d + 3 {
                for k in 0..=d {
                    let shape = conditional_leaf_probability(Model::ShapeUniform, d, n, k);
                    for model in [Model::StructureTwoStage, Model::FullUniform] {
                        let p = conditional_leaf_probability(model, d, n, k);
                        assert!(p <= shape, "{model} d={d} k={k}: {p} > {shape}");
                    }
                }
            }
        }
        // the same ordering, estimated from samples
        let trials = 20_000u64;
        for d in 1..=4usize {
            let n = d + 1;
            let estimate = |model: Model, k: usize| -> (f64, u64) {
                let s = Sampler::new(model, d, n).unwrap();
                let mut exists = 0u64;
                let mut leaves = 0u64;
                for i in 0..trials {
                    let t = s.sample(&mut RandomStream::substream(31, i));
                    if let Some(node) = leftmost_at(&t, k) {
                        exists += 1;
                        leaves += node.is_leaf() as u64;
                    }
                }
                (leaves as f64 / exists.max(1) as f64, exists)
            };
            for k in 0..=d {
                let (shape, seen) = estimate(Model::ShapeUniform, k);
                let p = conditional_leaf_probability(Model::ShapeUniform, d, n, k);
                assert!((shape - p).abs() <= 5.0 * binomial_sigma(p, seen) + 1e-12);
                for model in [Model::StructureTwoStage, Model::FullUniform] {
                    let (q, seen_q) = estimate(model, k);
                    if seen_q == 0 {
                        continue;
                    }
                    let slack = 5.0 * (binomial_sigma(p, seen) + binomial_sigma(p, seen_q));
                    assert!(q <= shape + slack + 1e-12, "{model} d={d} k={k}: {q} vs {shape}");
                }
            }
        }
    }
}
