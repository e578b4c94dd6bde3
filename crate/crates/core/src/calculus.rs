//! Isomorphism-class calculus of filtered bundles on a disk germ.
//!
//! A filtered bundle is determined up to isomorphism by its rank and the
//! multiset of parabolic weights in `(-1, 0]`: it splits as a direct sum of
//! rank-one pieces whose `a`-th lattice is generated by `z^{ceil(w - a)} e`.
//! All constructions (determinant, dual, tensor, Hom, cyclic pullback) act on
//! those weights by floor/ceiling arithmetic.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::weights::{multiset_eq, reduce_to_window, sorted, Weight};

/// Rank plus canonical weights, one per canonical generator.
///
/// Generator order is kept as given so that frame exponents and section
/// coordinates line up with the caller's indexing; equality is multiset
/// equality.
#[derive(Clone, Debug)]
pub struct FilteredBundle {
    weights: Vec<Weight>,
}

impl PartialEq for FilteredBundle {
    fn eq(&self, other: &Self) -> bool {
        multiset_eq(&self.weights, &other.weights)
    }
}

impl Eq for FilteredBundle {}

/// Exponents `m_i` such that `z^{m_i} e_i` is a frame of the `a`-th lattice.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FrameExponents(pub Vec<BigInt>);

/// Laurent orders of a section's coefficients, one per canonical generator;
/// `None` stands for a zero coefficient (order `+inf`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SectionCoordinates {
    pub orders: Vec<Option<BigInt>>,
}

impl SectionCoordinates {
    pub fn new<I: IntoIterator<Item = Option<i64>>>(orders: I) -> Self {
        SectionCoordinates {
            orders: orders.into_iter().map(|o| o.map(BigInt::from)).collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.orders.iter().all(Option::is_none)
    }
}

/// Parabolic degree of a section; the zero section has degree `-inf`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Degree {
    NegInfinity,
    Finite(Weight),
}

impl fmt::Display for Degree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Degree::NegInfinity => f.write_str("-inf"),
            Degree::Finite(w) => write!(f, "{w}"),
        }
    }
}

/// Determinant line with the exact lattice index `sum w_i`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Determinant {
    pub bundle: FilteredBundle,
    /// `det(P_0) = P_{index}(det)`; more generally `det(P_a) = P_{gamma(a)}(det)`.
    pub lattice_index: Weight,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DualEpsilon {
    pub epsilon: Weight,
    pub dual_par: Vec<Weight>,
}

impl FilteredBundle {
    /// Builds the bundle from arbitrary rational weights, replacing each `c`
    /// by `c - ceil(c)`.
    pub fn from_weights<I: IntoIterator<Item = Weight>>(raw: I) -> Result<Self> {
        let weights: Vec<Weight> = raw.into_iter().map(|c| c.canonical()).collect();
        if weights.is_empty() {
            return Err(Error::RankZero);
        }
        Ok(FilteredBundle { weights })
    }

    /// Trivial filtered bundle: all weights zero.
    pub fn trivial(rank: usize) -> Result<Self> {
        Self::from_weights(std::iter::repeat_n(Weight::zero(), rank))
    }

    pub fn rank(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[Weight] {
        &self.weights
    }

    pub fn sorted_weights(&self) -> Vec<Weight> {
        sorted(&self.weights)
    }

    /// Parabolic weights in `(a - 1, a]`, in generator order.
    pub fn par(&self, a: &Weight) -> Vec<Weight> {
        self.weights
            .iter()
            .map(|w| reduce_to_window(w, a).reduced)
            .collect()
    }

    /// The invariant `gamma(P_a)`: the sum of the weights in `(a - 1, a]`.
    pub fn gamma(&self, a: &Weight) -> Weight {
        self.par(a).iter().sum()
    }

    pub fn frame_exponents(&self, a: &Weight) -> FrameExponents {
        FrameExponents(self.weights.iter().map(|w| (w - a).ceil()).collect())
    }

    /// Jump points in `(lo, hi]` with multiplicities, sorted ascending.
    pub fn jump_set(&self, lo: &Weight, hi: &Weight) -> Result<Vec<(Weight, usize)>> {
        if lo >= hi {
            return Err(Error::InvalidArgument(format!(
                "empty interval ({lo}, {hi}]"
            )));
        }
        let mut jumps: BTreeMap<Weight, usize> = BTreeMap::new();
        for w in &self.weights {
            // first translate w + n strictly above lo
            let first = &reduce_to_window(w, lo).reduced + &Weight::one();
            let mut p = first;
            while &p <= hi {
                *jumps.entry(p.clone()).or_default() += 1;
                p = &p + &Weight::one();
            }
        }
        Ok(jumps.into_iter().collect())
    }

    pub fn det(&self) -> Determinant {
        let index: Weight = self.weights.iter().sum();
        Determinant {
            bundle: FilteredBundle {
                weights: vec![index.canonical()],
            },
            lattice_index: index,
        }
    }

    pub fn dual(&self) -> FilteredBundle {
        FilteredBundle {
            weights: self.weights.iter().map(|w| (-w).canonical()).collect(),
        }
    }

    /// A concrete `eps` with `(P_a E)^dual = P_{-a+1-eps}(E^dual)`, and the
    /// parabolic weights of the dual at that index.
    pub fn dual_epsilon(&self, a: &Weight) -> DualEpsilon {
        let dual = self.dual();
        let x = &Weight::one() - a;
        let mut gap = Weight::one();
        for u in dual.weights() {
            // distances from x to the nearest points of u + Z below and above it
            let below = &x - &reduce_to_window(u, &x).reduced;
            let above = &Weight::one() - &below;
            for d in [below, above] {
                if !d.is_zero() && d < gap {
                    gap = d;
                }
            }
        }
        let epsilon = &gap * &Weight::new(1, 2);
        let dual_par = dual.par(&(&x - &epsilon));
        DualEpsilon { epsilon, dual_par }
    }

    pub fn tensor(&self, other: &FilteredBundle) -> FilteredBundle {
        let weights = self
            .weights
            .iter()
            .flat_map(|b| other.weights.iter().map(move |c| (b + c).canonical()))
            .collect();
        FilteredBundle { weights }
    }

    /// `Hom(self, other)`, equal to `dual(self) (x) other`.
    pub fn hom(&self, other: &FilteredBundle) -> FilteredBundle {
        self.dual().tensor(other)
    }

    /// Lattice exponents of the tensor product: `n_ij = floor(a - b_i - c_j)`,
    /// so that `z^{-n_ij} v_i (x) w_j` generate `P_a(E1 (x) E2)`.
    pub fn tensor_exponents(&self, other: &FilteredBundle, a: &Weight) -> Vec<Vec<BigInt>> {
        self.weights
            .iter()
            .map(|b| {
                other
                    .weights
                    .iter()
                    .map(|c| (&(a - b) - c).floor())
                    .collect()
            })
            .collect()
    }

    /// Lattice exponents of Hom: `m_ij = floor(b_i + a - c_j)`, so that
    /// `v_i^dual (x) z^{-m_ij} w_j` generate `P_a Hom(E1, E2)`.
    pub fn hom_exponents(&self, other: &FilteredBundle, a: &Weight) -> Vec<Vec<BigInt>> {
        self.weights
            .iter()
            .map(|b| {
                other
                    .weights
                    .iter()
                    .map(|c| (&(b + a) - c).floor())
                    .collect()
            })
            .collect()
    }

    /// Pullback along the `m`-fold cyclic cover `w -> w^m`.
    pub fn cyclic_pullback(&self, m: i64) -> Result<FilteredBundle> {
        if m <= 0 {
            return Err(Error::InvalidArgument(format!(
                "cover degree must be positive, got {m}"
            )));
        }
        let m = BigInt::from(m);
        Ok(FilteredBundle {
            weights: self
                .weights
                .iter()
                .map(|w| w.scale(&m).canonical())
                .collect(),
        })
    }

    /// Parabolic degree `max_i (w_i - k_i)` over the nonzero coefficients.
    pub fn section_degree(&self, s: &SectionCoordinates) -> Result<Degree> {
        if s.orders.len() != self.rank() {
            return Err(Error::LengthMismatch {
                expected: self.rank(),
                got: s.orders.len(),
            });
        }
        Ok(self
            .weights
            .iter()
            .zip(&s.orders)
            .filter_map(|(w, k)| k.as_ref().map(|k| w - &Weight::from_integer(k.clone())))
            .max()
            .map_or(Degree::NegInfinity, Degree::Finite))
    }

    /// Whether the section lies in the lattice `P_beta`.
    pub fn contains(&self, s: &SectionCoordinates, beta: &Weight) -> Result<bool> {
        Ok(match self.section_degree(s)? {
            Degree::NegInfinity => true,
            Degree::Finite(d) => &d <= beta,
        })
    }

    /// Whether a frame of `P_a` with degrees `d` is compatible with the
    /// filtration: degrees lie in the window, sum to `gamma(a)`, and agree with
    /// the parabolic weights.
    pub fn is_compatible_frame(&self, a: &Weight, d: &[Weight]) -> bool {
        if d.len() != self.rank() {
            return false;
        }
        if !d.iter().all(|x| x.in_window(a)) {
            return false;
        }
        let total: Weight = d.iter().sum();
        total == self.gamma(a) && multiset_eq(d, &self.par(a))
    }

    pub fn descriptor(&self) -> BundleDescriptor {
        BundleDescriptor {
            rank: self.rank(),
            weights: self.weights.clone(),
        }
    }
}

/// JSON form `{"rank": r, "weights": ["-1/3", "0", ...]}`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct BundleDescriptor {
    pub rank: usize,
    pub weights: Vec<Weight>,
}

impl TryFrom<BundleDescriptor> for FilteredBundle {
    type Error = Error;

    fn try_from(d: BundleDescriptor) -> Result<Self> {
        if d.rank == 0 {
            return Err(Error::RankZero);
        }
        if d.weights.len() != d.rank {
            return Err(Error::LengthMismatch {
                expected: d.rank,
                got: d.weights.len(),
            });
        }
        FilteredBundle::from_weights(d.weights)
    }
}

impl Serialize for FilteredBundle {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.descriptor().serialize(s)
    }
}

impl<'de> Deserialize<'de> for FilteredBundle {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let desc = BundleDescriptor::deserialize(d)?;
        FilteredBundle::try_from(desc).map_err(serde::de::Error::custom)
    }
}

/// `sum_ij ceil(b_i + c_j)`; the correction term in the tensor gamma identity.
pub fn tensor_ceiling_sum(fb1: &FilteredBundle, fb2: &FilteredBundle) -> BigInt {
    fb1.weights()
        .iter()
        .flat_map(|b| fb2.weights().iter().map(move |c| (b + c).ceil()))
        .sum()
}
