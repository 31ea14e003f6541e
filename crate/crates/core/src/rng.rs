//! Deterministic, splittable random bits.
//!
//! Substream `i` of master seed `s` is ChaCha20 keyed from `s` with stream id
//! `i`, so sample `i` of a run sees the same bits no matter how samples are
//! scheduled across workers.

use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};

#[derive(Clone, Debug)]
pub struct RandomStream {
    rng: ChaCha20Rng,
    buffer: u64,
    buffered: u32,
}

impl RandomStream {
    pub fn new(seed: u64) -> Self {
        RandomStream::substream(seed, 0)
    }

    /// Pure function of `(seed, index)`.
    pub fn substream(seed: u64, index: u64) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        rng.set_stream(index);
        RandomStream {
            rng,
            buffer: 0,
            buffered: 0,
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    pub fn bit(&mut self) -> bool {
        if self.buffered == 0 {
            self.buffer = self.rng.next_u64();
            self.buffered = 64;
        }
        let out = self.buffer & 1 == 1;
        self.buffer >>= 1;
        self.buffered -= 1;
        out
    }

    /// Uniform integer in `[0, bound)` by rejection on the smallest covering
    /// power of two. `bound` must be positive.
    pub fn below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0, "below(0)");
        if bound == 1 {
            return 0;
        }
        let width = 64 - (bound - 1).leading_zeros();
        let mask = if width == 64 {
            u64::MAX
        } else {
            (1u64 << width) - 1
        };
        loop {
            let draw = self.rng.next_u64() & mask;
            if draw < bound {
                return draw;
            }
        }
    }
}
