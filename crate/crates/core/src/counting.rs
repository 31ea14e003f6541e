//! Exact counts of bounded-depth trees.
//!
//! All classes satisfy a "leaf, or root plus two independent subtrees"
//! recurrence. Non-redundancy removes exactly one variable per level, so a
//! count depends on how many variables remain available, never on which:
//!
//! | class      | base            | step                               |
//! |------------|-----------------|------------------------------------|
//! | shapes     | `N(0) = 1`      | `N(d) = N(d-1)^2 + 1`              |
//! | structures | `C(0, v) = 1`   | `C(d, v) = 1 + v * C(d-1, v-1)^2`  |
//! | labeled    | `F(0, v) = 2`   | `F(d, v) = 2 + v * F(d-1, v-1)^2`  |
//! | min-depth  | `G_h(0) = 0`    | `G_h(d) = G_{h-1}(d-1)^2`          |
//!
//! `G_h(d)` counts shapes whose every leaf lies strictly deeper than `h`;
//! `G_h(d) = N(d)` whenever `h < 0`.

use std::collections::HashMap;

use num_bigint::BigUint;
use num_traits::{One, Zero};

use crate::error::{Error, Result};

/// Arbitrary-precision tree count.
pub type BigCount = BigUint;

/// The tree classes with a closed recurrence.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CountClass {
    /// Unlabeled full binary trees (`N`).
    Shapes,
    /// Variable-labeled, leaves open (`C`).
    Structures,
    /// Variable-labeled with 0/1 leaves (`F`).
    Labeled,
    /// Shapes with every leaf deeper than `h` (`G_h`).
    MinDepth { h: i64 },
}

/// Memoized counts keyed by `(class, depth budget, available variables)`.
#[derive(Clone, Debug, Default)]
pub struct CountTable {
    cache: HashMap<(CountClass, usize, usize), BigCount>,
}

impl CountTable {
    pub fn new() -> Self {
        CountTable::default()
    }

    /// Count for depth budget `d` with `v` available variables. `v` is
    /// ignored for shape classes. For labeled classes `v < d` is a usage
    /// error.
    pub fn count(&mut self, class: CountClass, d: usize, v: usize) -> Result<BigCount> {
        match class {
            CountClass::Structures | CountClass::Labeled if v < d => Err(Error::usage(format!(
                "need at least d = {d} variables for a non-redundant depth-{d} path, got {v}"
            ))),
            CountClass::Shapes | CountClass::MinDepth { .. } => Ok(self.lookup(class, d, 0)),
            _ => Ok(self.lookup(class, d, v)),
        }
    }

    fn lookup(&mut self, class: CountClass, d: usize, v: usize) -> BigCount {
        if let Some(hit) = self.cache.get(&(class, d, v)) {
            return hit.clone();
        }
        let value = match class {
            CountClass::Shapes => {
                if d == 0 {
                    BigCount::one()
                } else {
                    let sub = self.lookup(class, d - 1, 0);
                    &sub * &sub + 1u32
                }
            }
            CountClass::Structures | CountClass::Labeled => {
                let leaves = if class == CountClass::Labeled { 2u32 } else { 1 };
                if d == 0 {
                    BigCount::from(leaves)
                } else {
                    let sub = self.lookup(class, d - 1, v - 1);
                    &sub * &sub * v + leaves
                }
            }
            CountClass::MinDepth { h } => {
                if h < 0 {
                    self.lookup(CountClass::Shapes, d, 0)
                } else if d == 0 {
                    BigCount::zero()
                } else {
                    let sub = self.lookup(CountClass::MinDepth { h: h - 1 }, d - 1, 0);
                    &sub * &sub
                }
            }
        };
        self.cache.insert((class, d, v), value.clone());
        value
    }

    /// Counts along one root-to-leaf descent: entry `k` is the count for
    /// depth budget `k` with `v - (d - k)` variables left. This is every
    /// count a sampler for `(d, v)` needs.
    pub fn descent(&mut self, class: CountClass, d: usize, v: usize) -> Result<Vec<BigCount>> {
        self.count(class, d, v)?;
        Ok((0..=d)
            .map(|k| self.lookup(class, k, if class == CountClass::Shapes { 0 } else { v - (d - k) }))
            .collect())
    }
}

/// `N_d`, the number of shapes of depth at most `d`.
pub fn count_shapes(d: usize) -> BigCount {
    let mut n = BigCount::one();
    for _ in 0..d {
        n = &n * &n + 1u32;
    }
    n
}

/// `C(d, v)`, non-redundant structures of depth at most `d` on `v`
/// variables.
pub fn count_structures(d: usize, v: usize) -> Result<BigCount> {
    CountTable::new().count(CountClass::Structures, d, v)
}

/// `F(d, v)`, fully labeled non-redundant trees.
pub fn count_labeled(d: usize, v: usize) -> Result<BigCount> {
    CountTable::new().count(CountClass::Labeled, d, v)
}

/// `G_h(d)`, shapes of depth at most `d` with every leaf deeper than `h`.
pub fn count_min_depth_shapes(d: usize, h: i64) -> BigCount {
    if h < 0 {
        return count_shapes(d);
    }
    if (h as usize) >= d {
        return BigCount::zero();
    }
    // G_h(d) = G_{-1}(d - h - 1)^(2^(h+1)) = N_{d-h-1}^(2^(h+1))
    let mut g = count_shapes(d - h as usize - 1);
    for _ in 0..=h {
        g = &g * &g;
    }
    g
}

/// Structures of depth at most `d` on `v` variables, bucketed by leaf count:
/// entry `L` is the number with exactly `L` leaves.
pub fn structures_by_leaf_count(d: usize, v: usize) -> Result<Vec<BigCount>> {
    if v < d {
        return Err(Error::usage(format!("need v >= d, got v = {v}, d = {d}")));
    }
    let mut poly = vec![BigCount::zero(), BigCount::one()];
    for k in 1..=d {
        let vars = v - (d - k);
        let mut next = vec![BigCount::zero(); 2 * poly.len() - 1];
        for (i, a) in poly.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in poly.iter().enumerate() {
                next[i + j] += a * b;
            }
        }
        for c in next.iter_mut() {
            *c *= vars;
        }
        next[1] += 1u32;
        while next.last().is_some_and(Zero::is_zero) {
            next.pop();
        }
        poly = next;
    }
    Ok(poly)
}
