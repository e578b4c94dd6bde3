//! Exact rational weights and the half-open window reduction.
//!
//! Every lattice formula in the calculus reduces to floor/ceiling arithmetic
//! over the rationals. A [`Weight`] is an arbitrary-precision reduced fraction;
//! [`reduce_to_window`] moves a weight into `(a - 1, a]` by an integer shift.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Error;

/// A parabolic weight or filtration index, held as an exact rational.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Weight(BigRational);

impl Weight {
    pub fn new(numer: i64, denom: i64) -> Self {
        assert!(denom != 0, "zero denominator");
        Weight(BigRational::new(numer.into(), denom.into()))
    }

    pub fn from_integer<T: Into<BigInt>>(n: T) -> Self {
        Weight(BigRational::from_integer(n.into()))
    }

    pub fn zero() -> Self {
        Weight(BigRational::zero())
    }

    pub fn one() -> Self {
        Weight(BigRational::one())
    }

    pub fn from_rational(r: BigRational) -> Self {
        Weight(r)
    }

    pub fn as_rational(&self) -> &BigRational {
        &self.0
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn is_integer(&self) -> bool {
        self.0.is_integer()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub fn abs(&self) -> Weight {
        Weight(self.0.abs())
    }

    /// Largest integer `n` with `n <= self`.
    pub fn floor(&self) -> BigInt {
        self.0.numer().div_floor(self.0.denom())
    }

    /// Smallest integer `n` with `n >= self`.
    pub fn ceil(&self) -> BigInt {
        -((-&self.0).numer().div_floor(self.0.denom()))
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    /// Scales by an integer.
    pub fn scale(&self, m: &BigInt) -> Weight {
        Weight(&self.0 * BigRational::from_integer(m.clone()))
    }

    /// Canonical representative `w - ceil(w)` in `(-1, 0]`.
    pub fn canonical(&self) -> Weight {
        reduce_to_window(self, &Weight::zero()).reduced
    }

    /// Whether the weight lies in `(a - 1, a]`.
    pub fn in_window(&self, a: &Weight) -> bool {
        let lo = a - &Weight::one();
        &lo < self && self <= a
    }
}

/// Exact floor of a weight.
pub fn floor_q(w: &Weight) -> BigInt {
    w.floor()
}

/// Exact ceiling of a weight.
pub fn ceil_q(w: &Weight) -> BigInt {
    w.ceil()
}

/// A weight moved into the window `(a - 1, a]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WindowReduction {
    pub reduced: Weight,
    /// Integer subtracted from the input; `reduced + shift` is the input.
    pub shift: BigInt,
}

/// Reduces `w` into `(a - 1, a]` with shift `ceil(w - a)`.
pub fn reduce_to_window(w: &Weight, a: &Weight) -> WindowReduction {
    let shift = (w - a).ceil();
    let reduced = w - &Weight::from_integer(shift.clone());
    WindowReduction { reduced, shift }
}

impl fmt::Display for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_integer() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl fmt::Debug for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Weight({self})")
    }
}

impl FromStr for Weight {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || Error::Parse(format!("not a rational literal: {s:?}"));
        let s = s.trim();
        match s.split_once('/') {
            Some((n, d)) => {
                let n: BigInt = n.trim().parse().map_err(|_| bad())?;
                let d: BigInt = d.trim().parse().map_err(|_| bad())?;
                if d.is_zero() {
                    return Err(bad());
                }
                Ok(Weight(BigRational::new(n, d)))
            }
            None => {
                let n: BigInt = s.parse().map_err(|_| bad())?;
                Ok(Weight(BigRational::from_integer(n)))
            }
        }
    }
}

impl Serialize for Weight {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Weight {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        // Integers are accepted bare; fractions must be strings so nothing passes through a float.
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Str(String),
            Int(i64),
        }
        match Raw::deserialize(deserializer)? {
            Raw::Str(s) => s.parse().map_err(serde::de::Error::custom),
            Raw::Int(n) => Ok(Weight::from_integer(n)),
        }
    }
}

impl From<i64> for Weight {
    fn from(n: i64) -> Self {
        Weight::from_integer(n)
    }
}

impl From<BigInt> for Weight {
    fn from(n: BigInt) -> Self {
        Weight::from_integer(n)
    }
}

macro_rules! forward_binop {
    ($tr:ident, $method:ident) => {
        impl $tr<&Weight> for &Weight {
            type Output = Weight;
            fn $method(self, rhs: &Weight) -> Weight {
                Weight($tr::$method(&self.0, &rhs.0))
            }
        }
        impl $tr<Weight> for Weight {
            type Output = Weight;
            fn $method(self, rhs: Weight) -> Weight {
                Weight($tr::$method(self.0, rhs.0))
            }
        }
        impl $tr<&Weight> for Weight {
            type Output = Weight;
            fn $method(self, rhs: &Weight) -> Weight {
                Weight($tr::$method(self.0, &rhs.0))
            }
        }
    };
}

forward_binop!(Add, add);
forward_binop!(Sub, sub);
forward_binop!(Mul, mul);

impl Neg for Weight {
    type Output = Weight;
    fn neg(self) -> Weight {
        Weight(-self.0)
    }
}

impl Neg for &Weight {
    type Output = Weight;
    fn neg(self) -> Weight {
        Weight(-&self.0)
    }
}

impl std::iter::Sum for Weight {
    fn sum<I: Iterator<Item = Weight>>(iter: I) -> Self {
        iter.fold(Weight::zero(), |acc, w| acc + w)
    }
}

impl<'a> std::iter::Sum<&'a Weight> for Weight {
    fn sum<I: Iterator<Item = &'a Weight>>(iter: I) -> Self {
        iter.fold(Weight::zero(), |acc, w| acc + w)
    }
}

/// Sorted copy of a multiset, the canonical form for comparisons.
pub fn sorted(ws: &[Weight]) -> Vec<Weight> {
    let mut v = ws.to_vec();
    v.sort();
    v
}

/// Compares two weight multisets.
pub fn multiset_eq(a: &[Weight], b: &[Weight]) -> bool {
    a.len() == b.len() && sorted(a) == sorted(b)
}
