//! Exterior algebra over a fixed generator set `{dθ_1, …, dθ_n}`.
//!
//! Monomials are bitmasks over the generators; elements are sparse maps
//! monomial → coefficient. The coefficient ring is generic so the same
//! type serves `Λ_n(ℤ)` (K-theory lattices) and `Λ_n(ℚ)` (Chern
//! characters). Monomials order by (degree, bitmask value), which fixes a
//! canonical basis enumeration everywhere downstream.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_traits::Zero;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ExteriorError {
    #[error("generator count mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("generator index {0} out of range 1..={1}")]
    GeneratorOutOfRange(usize, usize),
    #[error("repeated generator index {0}")]
    RepeatedGenerator(usize),
}

/// Square-free monomial `dθ_{i1} ∧ … ∧ dθ_{ik}` with `i1 < … < ik`,
/// encoded as a bitmask (generator `i` ↦ bit `i − 1`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MultiIndex {
    bits: u32,
}

impl MultiIndex {
    pub const EMPTY: MultiIndex = MultiIndex { bits: 0 };

    pub fn from_bits(bits: u32) -> Self {
        MultiIndex { bits }
    }

    /// Builds a monomial from 1-based generator indices.
    pub fn from_indices(indices: &[usize]) -> Result<Self, ExteriorError> {
        let mut bits = 0u32;
        for &i in indices {
            if i == 0 || i > 32 {
                return Err(ExteriorError::GeneratorOutOfRange(i, 32));
            }
            let bit = 1u32 << (i - 1);
            if bits & bit != 0 {
                return Err(ExteriorError::RepeatedGenerator(i));
            }
            bits |= bit;
        }
        Ok(MultiIndex { bits })
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn degree(&self) -> u32 {
        self.bits.count_ones()
    }

    pub fn contains(&self, index: usize) -> bool {
        (1..=32).contains(&index) && self.bits & (1 << (index - 1)) != 0
    }

    /// 1-based generator indices, ascending.
    pub fn indices(&self) -> Vec<usize> {
        (0..32).filter(|b| self.bits & (1 << b) != 0).map(|b| b + 1).collect()
    }

    pub fn fits_in(&self, n: usize) -> bool {
        n >= 32 || self.bits >> n == 0
    }

    /// Wedge of two monomials: `None` on a repeated generator, otherwise
    /// the merged monomial and the sign `(−1)^inversions` from sorting the
    /// concatenation into ascending order.
    pub fn wedge(self, other: Self) -> Option<(Self, i32)> {
        if self.bits & other.bits != 0 {
            return None;
        }
        let mut inversions = 0u32;
        let mut rest = other.bits;
        while rest != 0 {
            let b = rest.trailing_zeros();
            inversions += (self.bits >> (b + 1)).count_ones();
            rest &= rest - 1;
        }
        let sign = if inversions.is_multiple_of(2) { 1 } else { -1 };
        Some((MultiIndex { bits: self.bits | other.bits }, sign))
    }
}

/// Order by (degree, bitmask value): the canonical basis order.
impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.degree(), self.bits).cmp(&(other.degree(), other.bits))
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.bits == 0 {
            return write!(f, "1");
        }
        write!(f, "dθ{}", self.indices().iter().map(|i| i.to_string()).collect::<Vec<_>>().join(""))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn of_degree(d: u32) -> Parity {
        if d.is_multiple_of(2) {
            Parity::Even
        } else {
            Parity::Odd
        }
    }

    pub fn flip(self) -> Parity {
        match self {
            Parity::Even => Parity::Odd,
            Parity::Odd => Parity::Even,
        }
    }
}

/// Element of the exterior algebra on `n` generators with coefficients in a
/// commutative ring `T`. No zero coefficients are stored.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ext<T> {
    n: usize,
    coeffs: BTreeMap<MultiIndex, T>,
}

impl<T> Ext<T>
where
    T: Clone + PartialEq + Zero + Add<Output = T> + Sub<Output = T> + Mul<Output = T> + Neg<Output = T>,
{
    pub fn zero(n: usize) -> Self {
        Ext { n, coeffs: BTreeMap::new() }
    }

    pub fn monomial(n: usize, index: MultiIndex, coeff: T) -> Result<Self, ExteriorError> {
        if !index.fits_in(n) {
            let high = index.indices().into_iter().max().unwrap_or(0);
            return Err(ExteriorError::GeneratorOutOfRange(high, n));
        }
        let mut coeffs = BTreeMap::new();
        if !coeff.is_zero() {
            coeffs.insert(index, coeff);
        }
        Ok(Ext { n, coeffs })
    }

    pub fn scalar(n: usize, value: T) -> Self {
        Ext::monomial(n, MultiIndex::EMPTY, value).expect("empty monomial always fits")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeff(&self, index: MultiIndex) -> Option<&T> {
        self.coeffs.get(&index)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, &T)> {
        self.coeffs.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.coeffs.len()
    }

    fn check_n(&self, other: &Self) -> Result<(), ExteriorError> {
        if self.n != other.n {
            Err(ExteriorError::DimensionMismatch(self.n, other.n))
        } else {
            Ok(())
        }
    }

    fn insert(&mut self, index: MultiIndex, coeff: T) {
        if coeff.is_zero() {
            return;
        }
        match self.coeffs.remove(&index) {
            None => {
                self.coeffs.insert(index, coeff);
            }
            Some(old) => {
                let sum = old + coeff;
                if !sum.is_zero() {
                    self.coeffs.insert(index, sum);
                }
            }
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self, ExteriorError> {
        self.check_n(other)?;
        let mut out = self.clone();
        for (idx, c) in &other.coeffs {
            out.insert(*idx, c.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self, ExteriorError> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        let coeffs = self.coeffs.iter().map(|(i, c)| (*i, -c.clone())).collect();
        Ext { n: self.n, coeffs }
    }

    pub fn scale(&self, factor: &T) -> Self {
        let mut out = Ext::zero(self.n);
        for (idx, c) in &self.coeffs {
            out.insert(*idx, c.clone() * factor.clone());
        }
        out
    }

    /// Graded (wedge) product. Errors on mismatched generator counts.
    pub fn wedge(&self, other: &Self) -> Result<Self, ExteriorError> {
        self.check_n(other)?;
        let mut out = Ext::zero(self.n);
        for (ia, ca) in &self.coeffs {
            for (ib, cb) in &other.coeffs {
                if let Some((idx, sign)) = ia.wedge(*ib) {
                    let prod = ca.clone() * cb.clone();
                    out.insert(idx, if sign < 0 { -prod } else { prod });
                }
            }
        }
        Ok(out)
    }

    pub fn degree_part(&self, degree: u32) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .filter(|(i, _)| i.degree() == degree)
            .map(|(i, c)| (*i, c.clone()))
            .collect();
        Ext { n: self.n, coeffs }
    }

    pub fn parity_part(&self, parity: Parity) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .filter(|(i, _)| Parity::of_degree(i.degree()) == parity)
            .map(|(i, c)| (*i, c.clone()))
            .collect();
        Ext { n: self.n, coeffs }
    }

    pub fn is_homogeneous(&self, degree: u32) -> bool {
        self.coeffs.keys().all(|i| i.degree() == degree)
    }

    pub fn has_parity(&self, parity: Parity) -> bool {
        self.coeffs.keys().all(|i| Parity::of_degree(i.degree()) == parity)
    }

    pub fn map_coeffs<U, F>(&self, mut f: F) -> Ext<U>
    where
        U: Clone + PartialEq + Zero + Add<Output = U> + Sub<Output = U> + Mul<Output = U> + Neg<Output = U>,
        F: FnMut(&T) -> U,
    {
        let mut out = Ext::zero(self.n);
        for (idx, c) in &self.coeffs {
            out.insert(*idx, f(c));
        }
        out
    }
}

impl<T: fmt::Display> fmt::Display for Ext<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeffs.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .coeffs
            .iter()
            .map(|(i, c)| if i.bits() == 0 { format!("{c}") } else { format!("{c}·{i}") })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}
