//! Closed-form tail bounds and the quantum query lower bound.
//!
//! Values that can fall far below the smallest `f64` are carried in log2
//! form; [`Bound`] reports the raw value, the value clamped to 1, and log2
//! together so callers can detect vacuous bounds and plot underflowing ones.

use serde::Serialize;

use crate::dyadic::Dyadic;
use crate::error::{Error, Result};
use crate::tree::LeafProfile;

/// A probability bound in three views.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Bound {
    pub raw: f64,
    pub clamped: f64,
    pub log2: f64,
}

impl Bound {
    pub fn from_log2(log2: f64) -> Bound {
        let raw = log2.exp2();
        Bound {
            raw,
            clamped: raw.min(1.0),
            log2,
        }
    }

    /// Whether the bound says nothing (is at least 1).
    pub fn is_vacuous(&self) -> bool {
        self.log2 >= 0.0
    }

    /// Union bound of two events.
    pub fn plus(&self, other: &Bound) -> Bound {
        let (hi, lo) = if self.log2 >= other.log2 {
            (self.log2, other.log2)
        } else {
            (other.log2, self.log2)
        };
        if lo == f64::NEG_INFINITY {
            return Bound::from_log2(hi);
        }
        Bound::from_log2(hi + (lo - hi).exp2().ln_1p() / std::f64::consts::LN_2)
    }
}

/// Quantum lower bound from average sensitivity: any algorithm computing `f`
/// with worst-case failure probability `epsilon` makes at least
/// `(1/2)(1 - 2 epsilon)^2 s(f)` queries.
pub fn shi_lower_bound(s_bar: f64, epsilon: f64) -> Result<f64> {
    if !(0.0..=0.5).contains(&epsilon) {
        return Err(Error::usage(format!("epsilon must lie in [0, 1/2], got {epsilon}")));
    }
    if !(s_bar >= 0.0) {
        return Err(Error::usage(format!("average sensitivity must be >= 0, got {s_bar}")));
    }
    Ok(0.5 * (1.0 - 2.0 * epsilon).powi(2) * s_bar)
}

/// Bounded-differences tail on the `L`-dimensional cube:
/// `Pr[g < E g - delta] <= exp(-2 delta^2 / (L eta^2))` for `g` that moves
/// by at most `eta` per coordinate flip. With `eta = 0` the function is
/// constant, so the tail is 0 for `delta > 0` and 1 for `delta = 0`.
pub fn mcdiarmid_tail(leaves: u64, eta: f64, delta: f64) -> Result<Bound> {
    if leaves == 0 {
        return Err(Error::usage("L must be at least 1"));
    }
    if !(eta >= 0.0) || !(delta >= 0.0) {
        return Err(Error::usage(format!(
            "eta and delta must be >= 0, got eta = {eta}, delta = {delta}"
        )));
    }
    if delta == 0.0 {
        return Ok(Bound::from_log2(0.0));
    }
    if eta == 0.0 {
        return Ok(Bound::from_log2(f64::NEG_INFINITY));
    }
    let nats = 2.0 * delta * delta / (leaves as f64 * eta * eta);
    Ok(Bound::from_log2(-nats * std::f64::consts::LOG2_E))
}

/// Largest change in average sensitivity from flipping one leaf label:
/// `max_l d(l) 2^(1 - d(l))`.
pub fn lipschitz_bound(profile: &LeafProfile) -> Dyadic {
    profile
        .depths
        .iter()
        .map(|&d| leaf_flip_bound(d))
        .max()
        .unwrap_or_else(Dyadic::zero)
}

/// `k 2^(1-k)`: how far flipping the label of one leaf at depth `k` can move
/// the average sensitivity. Only inputs reaching that leaf change value, and
/// each of them gains or loses at most `k` sensitive directions.
pub fn leaf_flip_bound(depth: u32) -> Dyadic {
    Dyadic::new(depth as i64, depth as u64).scale_pow2(1)
}

/// [`lipschitz_bound`] maximised over every profile whose leaves all sit at
/// depth `>= min_depth`. `k 2^(1-k)` peaks at `k = 1, 2` and falls after.
pub fn lipschitz_bound_for_min_depth(min_depth: u32) -> Dyadic {
    leaf_flip_bound(min_depth.max(1))
}

/// Upper bound `2^(1 - 2^(d - h - 2))` on the probability that a uniform
/// depth-`d` tree has a leaf at depth `<= h`, plus whether `h` is in the
/// range `h <= d - log2 d - 2` where the bound is guaranteed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LeafDepthTail {
    pub bound: Bound,
    pub in_range: bool,
}

pub fn leaf_depth_tail(d: u32, h: i64) -> LeafDepthTail {
    leaf_depth_tail_real(d as f64, h as f64)
}

fn leaf_depth_tail_real(d: f64, h: f64) -> LeafDepthTail {
    LeafDepthTail {
        bound: Bound::from_log2(1.0 - (d - h - 2.0).exp2()),
        in_range: d >= 1.0 && h <= d - d.log2() - 2.0,
    }
}

/// Largest `h` in the guaranteed range of [`leaf_depth_tail`], if any
/// non-negative one exists.
pub fn max_leaf_depth_threshold(d: u32) -> Option<i64> {
    if d == 0 {
        return None;
    }
    let h = (d as f64 - (d as f64).log2() - 2.0).floor() as i64;
    (h >= 0).then_some(h)
}

/// The two-term tail on `Pr_T[s(T) < (1 - epsilon) d / 3]`: a uniform tree
/// has a leaf at depth `<= 2d/3` (first term), or all its leaves are deep
/// and the leaf labels land in the concentration tail (second term).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Theorem1Tail {
    pub d: u32,
    pub epsilon: f64,
    /// `2d/3`, real-valued when `d` is not a multiple of 3.
    pub h: f64,
    /// `(1 - epsilon) d / 3`.
    pub threshold: f64,
    /// `2^(1 - 2^(d/3 - 2))`.
    pub leaf_term: Bound,
    /// `exp(-2^(d/3 - 3) epsilon^2)`.
    pub concentration_term: Bound,
    pub total: Bound,
}

pub fn theorem1_tail(d: u32, epsilon: f64) -> Result<Theorem1Tail> {
    check_open_unit(epsilon)?;
    let third = d as f64 / 3.0;
    let leaf_term = Bound::from_log2(1.0 - (third - 2.0).exp2());
    let concentration_term =
        Bound::from_log2(-(third - 3.0).exp2() * epsilon * epsilon * std::f64::consts::LOG2_E);
    Ok(Theorem1Tail {
        d,
        epsilon,
        h: 2.0 * third,
        threshold: (1.0 - epsilon) * third,
        leaf_term,
        concentration_term,
        total: leaf_term.plus(&concentration_term),
    })
}

/// Speed-up constant implied by chaining `Q2 >= s/18` with
/// `s >= (1 - epsilon) d / 3`: `Q2 >= alpha d` for `alpha = (1 - epsilon)/54`.
pub fn alpha_for(epsilon: f64) -> Result<f64> {
    check_open_unit(epsilon)?;
    Ok((1.0 - epsilon) / 54.0)
}

fn check_open_unit(epsilon: f64) -> Result<()> {
    if epsilon > 0.0 && epsilon < 1.0 {
        Ok(())
    } else {
        Err(Error::usage(format!("epsilon must lie in (0, 1), got {epsilon}")))
    }
}

/// The concentration step with every quantity made explicit: `L = 2^d`
/// leaves, `eta` from leaves at depth `>= 2d/3`, `delta = epsilon d / 3`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConcentrationChain {
    pub d: u32,
    pub leaves: u64,
    pub eta: Dyadic,
    pub delta: f64,
    /// [`mcdiarmid_tail`] on the quantities above.
    pub mcdiarmid: Bound,
    /// `exp(-(9/8) 2^(d/3) delta^2 / d^2)`.
    pub closed_form_delta: Bound,
    /// `exp(-2^(d/3 - 3) epsilon^2)`.
    pub closed_form_epsilon: Bound,
}

/// Builds the chain for `d` a positive multiple of 3 (at most 63).
pub fn concentration_chain(d: u32, epsilon: f64) -> Result<ConcentrationChain> {
    check_open_unit(epsilon)?;
    if d == 0 || d % 3 != 0 || d > 63 {
        return Err(Error::usage(format!(
            "chain needs d a positive multiple of 3 below 64, got {d}"
        )));
    }
    let leaves = 1u64 << d;
    let eta = lipschitz_bound_for_min_depth(2 * d / 3);
    let delta = epsilon * d as f64 / 3.0;
    let mcdiarmid = mcdiarmid_tail(leaves, eta.to_f64(), delta)?;
    let df = d as f64;
    let closed_form_delta = Bound::from_log2(
        -(9.0 / 8.0) * (df / 3.0).exp2() * delta * delta / (df * df) * std::f64::consts::LOG2_E,
    );
    let closed_form_epsilon =
        Bound::from_log2(-(df / 3.0 - 3.0).exp2() * epsilon * epsilon * std::f64::consts::LOG2_E);
    Ok(ConcentrationChain {
        d,
        leaves,
        eta,
        delta,
        mcdiarmid,
        closed_form_delta,
        closed_form_epsilon,
    })
}

/// Default `c` in `h = d - c log2 d` for [`loose_tail`].
pub const LOOSE_TAIL_C: f64 = 3.0;

/// Looser tail `Pr_T[s(T) < d/2 - O(log d)]` with `h = floor(d - c log2 d)`.
///
/// If every leaf is deeper than `h` the mean of `s` over leaf labels is at
/// least `h/2`, and we ask for a deviation of `delta = log2 d` below it, so
/// the threshold is `h/2 - log2 d`. Per-leaf differences are
/// `c_l = d(l) 2^(1-d(l))`; with all depths `>= h >= 3`, Kraft gives
/// `sum c_l^2 <= 4 h^2 2^-h = 2^h eta^2` for `eta = h 2^(1-h)`, so the
/// concentration term is [`mcdiarmid_tail`] with `L = 2^h`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LooseTail {
    pub d: u32,
    pub c: f64,
    pub h: i64,
    pub threshold: f64,
    /// The threshold as `(1 - slack) h / 2`.
    pub slack: f64,
    pub leaf_term: Bound,
    pub concentration_term: Bound,
    pub total: Bound,
    /// False when `d < 4`, `h < 3`, or `h` is outside the leaf-depth lemma's
    /// range; the numbers are then reported but not guaranteed.
    pub in_range: bool,
}

pub fn loose_tail(d: u32, c: f64) -> Result<LooseTail> {
    if !(c > 0.0) {
        return Err(Error::usage(format!("c must be positive, got {c}")));
    }
    let df = d as f64;
    let log_d = if d > 0 { df.log2() } else { 0.0 };
    let h = (df - c * log_d).floor() as i64;
    let leaf = leaf_depth_tail_real(df, h as f64);
    let in_range = d >= 4 && h >= 3 && h <= 63 && leaf.in_range;
    let half_h = h as f64 / 2.0;
    let threshold = half_h - log_d;
    let concentration_term = if h >= 1 && h <= 63 {
        let eta = lipschitz_bound_for_min_depth(h as u32).to_f64();
        mcdiarmid_tail(1u64 << h, eta, log_d)?
    } else {
        Bound::from_log2(0.0)
    };
    Ok(LooseTail {
        d,
        c,
        h,
        threshold,
        slack: if half_h > 0.0 { log_d / half_h } else { f64::NAN },
        leaf_term: leaf.bound,
        concentration_term,
        total: leaf.bound.plus(&concentration_term),
        in_range,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::Structure;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn shi_examples() {
        assert!((shi_lower_bound(18.0, 1.0 / 3.0).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(shi_lower_bound(7.0, 0.5).unwrap(), 0.0);
        assert_eq!(shi_lower_bound(4.0, 0.0).unwrap(), 2.0);
        assert!(shi_lower_bound(1.0, 0.6).is_err());
        assert!(shi_lower_bound(1.0, -0.1).is_err());
        assert!(shi_lower_bound(-1.0, 0.1).is_err());
    }

    #[test]
    fn shi_monotone() {
        let eps: Vec<f64> = (0..=50).map(|i| i as f64 / 100.0).collect();
        for s in [0.5, 1.0, 4.0, 12.0] {
            for w in eps.windows(2) {
                assert!(shi_lower_bound(s, w[1]).unwrap() <= shi_lower_bound(s, w[0]).unwrap());
            }
            assert!(shi_lower_bound(s, 0.2).unwrap() <= shi_lower_bound(s + 1.0, 0.2).unwrap());
        }
    }

    #[test]
    fn mcdiarmid_examples() {
        assert_eq!(mcdiarmid_tail(5, 0.3, 0.0).unwrap().raw, 1.0);
        assert!(rel(mcdiarmid_tail(2, 1.0, 1.0).unwrap().raw, (-1.0f64).exp()) < 1e-12);
        assert_eq!(mcdiarmid_tail(2, 0.0, 1.0).unwrap().raw, 0.0);
        assert_eq!(mcdiarmid_tail(2, 0.0, 0.0).unwrap().raw, 1.0);
        assert!(mcdiarmid_tail(0, 1.0, 1.0).is_err());
        assert!(mcdiarmid_tail(1, -1.0, 1.0).is_err());
    }

    #[test]
    fn mcdiarmid_chain_identity() {
        // L = 2^d, eta = (2d/3) 2^(1 - 2d/3)
        for d in [3u32, 6, 9, 12, 30] {
            for delta in [0.1, 1.0, 2.5] {
                let df = d as f64;
                let m = 2.0 * df / 3.0;
                let eta = m * (1.0 - m).exp2();
                let got = mcdiarmid_tail(1 << d, eta, delta).unwrap();
                let want = -(9.0 / 8.0) * (df / 3.0).exp2() * delta * delta / (df * df);
                assert!(rel(got.log2 / std::f64::consts::LOG2_E, want) < 1e-12);
            }
        }
    }

    #[test]
    fn lipschitz_examples() {
        assert_eq!(lipschitz_bound(&LeafProfile::new(vec![0])), Dyadic::zero());
        assert_eq!(lipschitz_bound(&LeafProfile::complete(3)), Dyadic::new(3, 2));
        assert_eq!(lipschitz_bound(&LeafProfile::new(vec![1, 2, 3, 3])), Dyadic::one());
        assert_eq!(lipschitz_bound(&Structure::complete(2).leaf_profile()), Dyadic::one());
    }

    #[test]
    fn min_depth_lipschitz_is_the_max_over_deeper_profiles() {
        for m in 0..20u32 {
            let best = (m..m + 30)
                .map(|k| lipschitz_bound(&LeafProfile::new(vec![k])))
                .max()
                .unwrap();
            assert_eq!(lipschitz_bound_for_min_depth(m), best, "m = {m}");
        }
    }

    #[test]
    fn leaf_depth_examples() {
        let t = leaf_depth_tail(6, 1);
        assert_eq!(t.bound.raw, 2f64.powi(-7));
        assert!(t.in_range);
        let t = leaf_depth_tail(3, 1);
        assert_eq!(t.bound.raw, 1.0);
        assert!(!t.in_range);
        let t = leaf_depth_tail(12, 8);
        assert_eq!(t.bound.raw, 0.125);
        assert!(!t.in_range);
        assert_eq!(max_leaf_depth_threshold(12), Some(6));
        assert_eq!(max_leaf_depth_threshold(3), None);
        assert_eq!(max_leaf_depth_threshold(4), Some(0));
    }

    #[test]
    fn theorem1_examples() {
        let t = theorem1_tail(30, 0.5).unwrap();
        assert_eq!(t.leaf_term.log2, -255.0);
        assert!(rel(t.concentration_term.raw, (-32.0f64).exp()) < 1e-12);
        assert!(t.total.raw < 1e-13);
        assert_eq!(t.threshold, 5.0);
        assert_eq!(t.h, 20.0);

        let zero = theorem1_tail(0, 0.5).unwrap();
        assert!(zero.total.is_vacuous());
        assert_eq!(zero.total.clamped, 1.0);
        assert!(zero.total.raw >= 1.0);

        assert!(theorem1_tail(10, 0.0).is_err());
        assert!(theorem1_tail(10, 1.0).is_err());
    }

    #[test]
    fn theorem1_monotone_in_steps_of_three() {
        for eps in [0.1, 0.5, 0.9] {
            for d in 9..120u32 {
                let a = theorem1_tail(d, eps).unwrap().total.log2;
                let b = theorem1_tail(d + 3, eps).unwrap().total.log2;
                assert!(b < a, "d = {d}, eps = {eps}");
            }
        }
    }

    #[test]
    fn alpha_examples() {
        assert!(rel(alpha_for(0.5).unwrap(), 1.0 / 108.0) < 1e-15);
        assert!(rel(alpha_for(0.1).unwrap(), 1.0 / 60.0) < 1e-15);
        assert!(alpha_for(1.0 - 1e-12).unwrap() < 1e-13);
        assert!(alpha_for(1.0).is_err());
    }

    #[test]
    fn loose_tail_examples() {
        let t = loose_tail(32, LOOSE_TAIL_C).unwrap();
        assert_eq!(t.h, 17);
        assert!(t.in_range);
        assert!(t.leaf_term.log2 < -10.0);
        assert!(t.concentration_term.log2 < -10.0);
        assert_eq!(t.threshold, 8.5 - 5.0);
        assert!(!loose_tail(4, LOOSE_TAIL_C).unwrap().in_range);
        assert!(loose_tail(8, 0.0).is_err());
    }

    #[test]
    fn loose_tail_decreases() {
        for d in 32..63u32 {
            let a = loose_tail(d, LOOSE_TAIL_C).unwrap();
            let b = loose_tail(d + 1, LOOSE_TAIL_C).unwrap();
            // the leaf term plateaus while d - h is unchanged
            assert!(b.leaf_term.log2 <= a.leaf_term.log2, "d = {d}");
            assert!(b.concentration_term.log2 < a.concentration_term.log2, "d = {d}");
            // so the sum strictly decreases, though f64 may not resolve it
            assert!(b.total.log2 <= a.total.log2, "d = {d}");
        }
    }

    #[test]
    fn bound_union() {
        let a = Bound::from_log2(-1.0);
        let s = a.plus(&a);
        assert!((s.log2 - 0.0).abs() < 1e-15);
        let z = Bound::from_log2(f64::NEG_INFINITY);
        assert_eq!(a.plus(&z), a);
    }
}
