//! Benchmarks live in `benches/`; run them with `cargo bench -p dtq-bench`.
//! This library only provides the fixed inputs they share.

use dtq_core::{DecisionTree, Model, RandomStream, Sampler};

/// `count` trees from `model` at depth `d` on `n` variables, seed 0.
pub fn fixture(model: Model, d: usize, n: usize, count: u64) -> Vec<DecisionTree> {
    let sampler = Sampler::new(model, d, n).expect("n >= d");
    (0..count)
        .map(|i| sampler.sample(&mut RandomStream::substream(0, i)))
        .collect()
}
