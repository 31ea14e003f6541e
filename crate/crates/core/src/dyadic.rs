//! Exact dyadic rationals `numerator / 2^exponent`.
//!
//! Reach probabilities, influences and average sensitivities of decision
//! trees are all of this form, so every core computation stays exact and
//! equality tests are meaningful. Floats only appear at the reporting edge.

use std::cmp::Ordering;
use std::fmt;
use std::iter::Sum;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Error;

/// A number `numerator / 2^exponent` kept in canonical form: the numerator
/// is odd, or it is zero and the exponent is zero.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Dyadic {
    numerator: BigInt,
    exponent: u64,
}

impl Dyadic {
    pub fn new(numerator: impl Into<BigInt>, exponent: u64) -> Self {
        let mut out = Dyadic {
            numerator: numerator.into(),
            exponent,
        };
        out.normalize();
        out
    }

    pub fn zero() -> Self {
        Dyadic {
            numerator: BigInt::zero(),
            exponent: 0,
        }
    }

    pub fn one() -> Self {
        Dyadic {
            numerator: BigInt::one(),
            exponent: 0,
        }
    }

    pub fn from_int(value: i64) -> Self {
        Dyadic::new(value, 0)
    }

    /// `2^-k`.
    pub fn pow2_neg(k: u64) -> Self {
        Dyadic {
            numerator: BigInt::one(),
            exponent: k,
        }
    }

    /// Exact conversion; every finite `f64` is dyadic. Returns `None` for NaN
    /// and infinities.
    pub fn from_f64(value: f64) -> Option<Self> {
        if !value.is_finite() {
            return None;
        }
        if value == 0.0 {
            return Some(Dyadic::zero());
        }
        let bits = value.to_bits();
        let negative = bits >> 63 == 1;
        let biased = ((bits >> 52) & 0x7ff) as i64;
        let fraction = bits & ((1u64 << 52) - 1);
        let (mantissa, exp2) = if biased == 0 {
            (fraction, -1074)
        } else {
            (fraction | (1u64 << 52), biased - 1075)
        };
        let mut numerator = BigInt::from(mantissa);
        if negative {
            numerator = -numerator;
        }
        Some(if exp2 >= 0 {
            Dyadic::new(numerator << exp2 as usize, 0)
        } else {
            Dyadic::new(numerator, (-exp2) as u64)
        })
    }

    pub fn numerator(&self) -> &BigInt {
        &self.numerator
    }

    pub fn exponent(&self) -> u64 {
        self.exponent
    }

    pub fn is_zero(&self) -> bool {
        self.numerator.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.numerator.is_negative()
    }

    pub fn abs(&self) -> Self {
        Dyadic {
            numerator: self.numerator.abs(),
            exponent: self.exponent,
        }
    }

    pub fn half(&self) -> Self {
        self.scale_pow2(-1)
    }

    /// Multiplies by `2^shift`.
    pub fn scale_pow2(&self, shift: i64) -> Self {
        if self.is_zero() {
            return Dyadic::zero();
        }
        if shift >= 0 {
            let shift = shift as u64;
            if shift <= self.exponent {
                Dyadic {
                    numerator: self.numerator.clone(),
                    exponent: self.exponent - shift,
                }
            } else {
                Dyadic {
                    numerator: &self.numerator << (shift - self.exponent) as usize,
                    exponent: 0,
                }
            }
        } else {
            Dyadic::new(self.numerator.clone(), self.exponent + shift.unsigned_abs())
        }
    }

    /// Nearest-ish `f64`; exact whenever the value is representable.
    pub fn to_f64(&self) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        let bits = self.numerator.bits();
        let drop = bits.saturating_sub(1000);
        let head = if drop > 0 {
            &self.numerator >> drop as usize
        } else {
            self.numerator.clone()
        };
        let head = head.to_f64().unwrap_or(f64::NAN);
        ldexp(head, drop as i64 - self.exponent as i64)
    }

    /// `log2(|self|)`, usable when the value under- or overflows an `f64`.
    pub fn log2_abs(&self) -> f64 {
        if self.is_zero() {
            return f64::NEG_INFINITY;
        }
        let bits = self.numerator.bits();
        let drop = bits.saturating_sub(64);
        let head = (self.numerator.abs() >> drop as usize).to_f64().unwrap();
        head.log2() + drop as f64 - self.exponent as f64
    }

    fn normalize(&mut self) {
        if self.numerator.is_zero() {
            self.exponent = 0;
            return;
        }
        let twos = self.numerator.trailing_zeros().unwrap_or(0);
        let strip = twos.min(self.exponent);
        if strip > 0 {
            self.numerator >>= strip as usize;
            self.exponent -= strip;
        }
    }

    /// Both numerators brought to the larger of the two exponents.
    fn aligned(&self, other: &Dyadic) -> (BigInt, BigInt, u64) {
        let exponent = self.exponent.max(other.exponent);
        let a = &self.numerator << (exponent - self.exponent) as usize;
        let b = &other.numerator << (exponent - other.exponent) as usize;
        (a, b, exponent)
    }
}

/// `x * 2^e` without intermediate overflow or premature underflow.
fn ldexp(mut x: f64, mut e: i64) -> f64 {
    while e > 1000 {
        x *= 2f64.powi(1000);
        e -= 1000;
    }
    while e < -1000 {
        x *= 2f64.powi(-1000);
        e += 1000;
    }
    x * 2f64.powi(e as i32)
}

impl Default for Dyadic {
    fn default() -> Self {
        Dyadic::zero()
    }
}

impl From<i64> for Dyadic {
    fn from(value: i64) -> Self {
        Dyadic::from_int(value)
    }
}

impl From<BigInt> for Dyadic {
    fn from(value: BigInt) -> Self {
        Dyadic::new(value, 0)
    }
}

impl Ord for Dyadic {
    fn cmp(&self, other: &Self) -> Ordering {
        let (a, b, _) = self.aligned(other);
        a.cmp(&b)
    }
}

impl PartialOrd for Dyadic {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Add<&Dyadic> for &Dyadic {
    type Output = Dyadic;
    fn add(self, rhs: &Dyadic) -> Dyadic {
        let (a, b, e) = self.aligned(rhs);
        Dyadic::new(a + b, e)
    }
}

impl Sub<&Dyadic> for &Dyadic {
    type Output = Dyadic;
    fn sub(self, rhs: &Dyadic) -> Dyadic {
        let (a, b, e) = self.aligned(rhs);
        Dyadic::new(a - b, e)
    }
}

impl Mul<&Dyadic> for &Dyadic {
    type Output = Dyadic;
    fn mul(self, rhs: &Dyadic) -> Dyadic {
        Dyadic::new(
            &self.numerator * &rhs.numerator,
            self.exponent + rhs.exponent,
        )
    }
}

impl Neg for &Dyadic {
    type Output = Dyadic;
    fn neg(self) -> Dyadic {
        Dyadic {
            numerator: -&self.numerator,
            exponent: self.exponent,
        }
    }
}

macro_rules! forward_owned {
    ($($trait:ident :: $method:ident),*) => {$(
        impl $trait<Dyadic> for Dyadic {
            type Output = Dyadic;
            fn $method(self, rhs: Dyadic) -> Dyadic {
                (&self).$method(&rhs)
            }
        }
        impl $trait<&Dyadic> for Dyadic {
            type Output = Dyadic;
            fn $method(self, rhs: &Dyadic) -> Dyadic {
                (&self).$method(rhs)
            }
        }
    )*};
}

forward_owned!(Add::add, Sub::sub, Mul::mul);

impl Neg for Dyadic {
    type Output = Dyadic;
    fn neg(self) -> Dyadic {
        -&self
    }
}

impl Sum for Dyadic {
    fn sum<I: Iterator<Item = Dyadic>>(iter: I) -> Dyadic {
        iter.fold(Dyadic::zero(), |acc, x| acc + x)
    }
}

impl<'a> Sum<&'a Dyadic> for Dyadic {
    fn sum<I: Iterator<Item = &'a Dyadic>>(iter: I) -> Dyadic {
        iter.fold(Dyadic::zero(), |acc, x| acc + x)
    }
}

/// Formats as `numerator/2^exponent`, e.g. `3/2^2` for 0.75.
impl fmt::Display for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/2^{}", self.numerator, self.exponent)
    }
}

impl FromStr for Dyadic {
    type Err = Error;

    /// Accepts `a/2^k` or a bare integer `a`.
    fn from_str(s: &str) -> Result<Self, Error> {
        let bad = || Error::usage(format!("not a dyadic rational: {s:?}"));
        let s = s.trim();
        let (num, exp) = match s.split_once('/') {
            Some((num, den)) => {
                let exp = den.strip_prefix("2^").ok_or_else(bad)?;
                (num, exp.parse::<u64>().map_err(|_| bad())?)
            }
            None => (s, 0),
        };
        let numerator = BigInt::parse_bytes(num.as_bytes(), 10).ok_or_else(bad)?;
        Ok(Dyadic::new(numerator, exp))
    }
}

impl Serialize for Dyadic {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Dyadic {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn canonical_form() {
        let x = Dyadic::new(12, 4);
        assert_eq!(x.numerator(), &BigInt::from(3));
        assert_eq!(x.exponent(), 2);
        let z = Dyadic::new(0, 9);
        assert_eq!(z.exponent(), 0);
        assert_eq!(Dyadic::new(8, 2), Dyadic::from_int(2));
    }

    #[test]
    fn arithmetic() {
        let a = Dyadic::new(3, 2);
        let b = Dyadic::new(1, 1);
        assert_eq!(&a + &b, Dyadic::new(5, 2));
        assert_eq!(&a - &b, Dyadic::new(1, 2));
        assert_eq!(&a * &b, Dyadic::new(3, 3));
        assert_eq!(a.half(), Dyadic::new(3, 3));
        assert_eq!(a.scale_pow2(3), Dyadic::from_int(6));
        assert_eq!(Dyadic::from_int(16).scale_pow2(-4), Dyadic::one());
        assert!(b < a);
        assert_eq!((-&a).abs(), a);
    }

    #[test]
    fn display_and_parse() {
        let x = Dyadic::new(-5, 3);
        assert_eq!(x.to_string(), "-5/2^3");
        assert_eq!("-5/2^3".parse::<Dyadic>().unwrap(), x);
        assert_eq!("7".parse::<Dyadic>().unwrap(), Dyadic::from_int(7));
        assert_eq!("10/2^2".parse::<Dyadic>().unwrap(), Dyadic::new(5, 1));
        assert!("1/3".parse::<Dyadic>().is_err());
        assert!("x/2^1".parse::<Dyadic>().is_err());
    }

    #[test]
    fn float_conversions() {
        assert_eq!(Dyadic::new(3, 2).to_f64(), 0.75);
        assert_eq!(Dyadic::pow2_neg(1074).to_f64(), f64::from_bits(1));
        assert_eq!(Dyadic::pow2_neg(5000).to_f64(), 0.0);
        assert!((Dyadic::pow2_neg(5000).log2_abs() + 5000.0).abs() < 1e-12);
        let huge = Dyadic::new(BigInt::one() << 1500usize, 1490);
        assert_eq!(huge.to_f64(), 1024.0);
        assert_eq!(Dyadic::from_f64(0.1).unwrap().to_f64(), 0.1);
        assert_eq!(Dyadic::from_f64(-2.5).unwrap(), Dyadic::new(-5, 1));
        assert!(Dyadic::from_f64(f64::NAN).is_none());
    }

    proptest! {
        #[test]
        fn f64_roundtrip(x in proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL | proptest::num::f64::ZERO) {
            prop_assert_eq!(Dyadic::from_f64(x).unwrap().to_f64(), x);
        }

        #[test]
        fn ring_laws(a in -1000i64..1000, ka in 0u64..20, b in -1000i64..1000, kb in 0u64..20) {
            let x = Dyadic::new(a, ka);
            let y = Dyadic::new(b, kb);
            prop_assert_eq!(&(&x + &y) - &y, x.clone());
            prop_assert_eq!(&x * &y, &y * &x);
            let exact = a as f64 / 2f64.powi(ka as i32) + b as f64 / 2f64.powi(kb as i32);
            prop_assert_eq!((&x + &y).to_f64(), exact);
            prop_assert_eq!(x.cmp(&y), x.to_f64().partial_cmp(&y.to_f64()).unwrap());
        }
    }
}
