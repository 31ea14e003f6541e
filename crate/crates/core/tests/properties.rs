//! Property tests over sampled trees, through the public API only.

use proptest::prelude::*;

use dtq_core::bounds::{leaf_flip_bound, lipschitz_bound};
use dtq_core::codec::{from_text, from_text_many, to_text};
use dtq_core::counting::{count_labeled, count_structures};
use dtq_core::harness::{self, Experiment, ExperimentConfig, Report};
use dtq_core::sampler::uniform_below;
use dtq_core::sensitivity::{
    avg_sensitivity_bruteforce, avg_sensitivity_structural, expected_path_length, truth_table,
};
use dtq_core::{BigCount, DecisionTree, Dyadic, Model, RandomStream, Sampler};

fn model() -> impl Strategy<Value = Model> {
    prop::sample::select(Model::ALL.to_vec())
}

/// `(model, d, n, seed)` with `d <= n`.
fn setting(max_d: usize, max_n: usize) -> impl Strategy<Value = (Model, usize, usize, u64)> {
    (model(), 0..=max_d)
        .prop_flat_map(move |(m, d)| (Just(m), Just(d), d.max(1)..=max_n.max(d), any::<u64>()))
        .prop_map(|(m, d, n, seed)| (m, d, n.max(d), seed))
}

fn draw(m: Model, d: usize, n: usize, seed: u64) -> DecisionTree {
    Sampler::new(m, d, n)
        .unwrap()
        .sample(&mut RandomStream::new(seed))
}

fn leaf_depths(tree: &DecisionTree) -> Vec<u32> {
    let mut out = Vec::new();
    tree.visit_leaves(0, &mut |_, d| out.push(d as u32));
    out
}

#[test]
fn codec_roundtrips_a_thousand_samples() {
    let mut all = String::new();
    let mut trees = Vec::new();
    for i in 0..1000u64 {
        let m = Model::ALL[(i % 4) as usize];
        let d = (i % 9) as usize;
        let tree = Sampler::new(m, d, d + 3)
            .unwrap()
            .sample(&mut RandomStream::substream(5, i));
        let text = to_text(&tree);
        assert_eq!(from_text(&text).unwrap(), tree);
        assert_eq!(to_text(&from_text(&text).unwrap()), text);
        all.push_str(&text);
        all.push('\n');
        trees.push(tree);
    }
    assert_eq!(from_text_many(&all).unwrap(), trees);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn samples_are_valid((m, d, n, seed) in setting(10, 14)) {
        let tree = draw(m, d, n, seed);
        prop_assert!(tree.validate(n, d).is_empty(), "{:?}", tree.validate(n, d));
        if m == Model::Complete {
            prop_assert_eq!(tree.min_leaf_depth(), d);
        }
    }

    #[test]
    fn kraft_equality((m, d, n, seed) in setting(10, 14)) {
        let tree = draw(m, d, n, seed);
        prop_assert_eq!(tree.leaf_profile().kraft_sum(), Dyadic::one());
    }

    #[test]
    fn sensitivity_between_zero_and_depth((m, d, n, seed) in setting(10, 14)) {
        let tree = draw(m, d, n, seed);
        let s = avg_sensitivity_structural(&tree);
        prop_assert!(!s.is_negative());
        prop_assert!(s <= Dyadic::from_int(tree.depth() as i64));
        // Never more than the expected number of queries.
        prop_assert!(s <= expected_path_length(&tree));
    }

    #[test]
    fn structural_matches_brute_force((m, d, n, seed) in setting(7, 11)) {
        let tree = draw(m, d, n, seed);
        let brute = avg_sensitivity_bruteforce(&truth_table(&tree, n).unwrap());
        prop_assert_eq!(avg_sensitivity_structural(&tree), brute);
    }

    #[test]
    fn leaf_flip_within_bound((m, d, n, seed) in setting(7, 9), pick in any::<prop::sample::Index>()) {
        let tree = draw(m, d, n, seed);
        let depths = leaf_depths(&tree);
        let leaf = pick.index(depths.len());
        let flipped = tree.with_leaf_flipped(leaf).unwrap();
        let change = (&avg_sensitivity_structural(&flipped) - &avg_sensitivity_structural(&tree)).abs();
        prop_assert!(change <= leaf_flip_bound(depths[leaf]));
        prop_assert!(change <= lipschitz_bound(&tree.leaf_profile()));
        // Flipping twice restores the tree.
        prop_assert_eq!(flipped.with_leaf_flipped(leaf).unwrap(), tree);
    }

    #[test]
    fn uniform_below_stays_below(bound in 1u64.., seed in any::<u64>()) {
        let big = BigCount::from(bound);
        let mut rng = RandomStream::new(seed);
        for _ in 0..8 {
            prop_assert!(uniform_below(&big, &mut rng) < big);
        }
    }
}

#[test]
fn labeled_counts_weight_structures_by_leaves() {
    // Every structure with L leaves has 2^L labelings.
    for d in 0..=3usize {
        for n in d..=d + 2 {
            let by_leaves = dtq_core::counting::structures_by_leaf_count(d, n).unwrap();
            let structures: BigCount = by_leaves.iter().sum();
            let labeled: BigCount = by_leaves
                .iter()
                .enumerate()
                .map(|(l, s)| s << l)
                .sum();
            assert_eq!(structures, count_structures(d, n).unwrap());
            assert_eq!(labeled, count_labeled(d, n).unwrap());
        }
    }
}

#[test]
fn reports_verify_after_a_text_roundtrip() {
    for experiment in Experiment::ALL {
        let (m, d, n) = match experiment {
            Experiment::ModelCompare => (Model::FullUniform, 3, 3),
            Experiment::Lemma5 => (Model::StructureTwoStage, 6, 6),
            _ => (Model::ShapeUniform, 5, 6),
        };
        let mut cfg = ExperimentConfig::new(experiment, m, d, n);
        cfg.samples = 25;
        cfg.assignments = 32;
        let report = harness::run(&cfg).unwrap();
        for text in [report.to_csv(), report.to_json()] {
            let back = Report::parse(&text).unwrap();
            assert!(harness::verify(&back).unwrap().is_empty(), "{experiment}");
        }
    }
}
