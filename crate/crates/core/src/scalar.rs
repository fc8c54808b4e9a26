//! Scalar types for operator assembly.
//!
//! Matrix entries of the mode operators are rational multiples of square
//! roots of small naturals (`√2` per Clifford generator, `√(k·m)` per boson
//! ladder step). The same assembly code runs over `f64` for numerics and
//! over [`SqrtRat`] — the ring of finite sums `Σ q_d √d` with `q_d ∈ ℚ` and
//! `d` square-free — when the relation checks must come out exactly zero.
//! [`CScalar`] layers a complex unit on top for the two-family Clifford
//! modules, whose zero modes are genuinely complex.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Ring operations every matrix scalar must support, plus conversions from
/// the small exact constants the operator assembly produces.
pub trait Scalar:
    Clone
    + PartialEq
    + fmt::Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + Zero
    + One
{
    /// Whether arithmetic in this scalar is exact.
    const EXACT: bool;

    fn from_ratio(num: i64, den: i64) -> Self;

    /// `√n` for a natural `n`, exact where the type allows.
    fn sqrt_nat(n: u64) -> Self;

    /// Complex conjugate; identity on real scalars.
    fn conj(&self) -> Self;

    /// Modulus as `f64`, used for norms and violation reports.
    fn abs_f64(&self) -> f64;
}

/// Real scalars, embeddable in `f64`.
pub trait RealScalar: Scalar {
    fn to_f64(&self) -> f64;
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn from_ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }

    fn sqrt_nat(n: u64) -> Self {
        (n as f64).sqrt()
    }

    fn conj(&self) -> Self {
        *self
    }

    fn abs_f64(&self) -> f64 {
        self.abs()
    }
}

impl RealScalar for f64 {
    fn to_f64(&self) -> f64 {
        *self
    }
}

/// Splits `n = outer² · radicand` with `radicand` square-free.
fn squarefree_split(n: u64) -> (u64, u64) {
    let mut outer = 1u64;
    let mut radicand = 1u64;
    let mut m = n;
    let mut p = 2u64;
    while p * p <= m {
        if m.is_multiple_of(p) {
            let mut e = 0u32;
            while m.is_multiple_of(p) {
                m /= p;
                e += 1;
            }
            outer *= p.pow(e / 2);
            if !e.is_multiple_of(2) {
                radicand *= p;
            }
        }
        p += 1;
    }
    radicand *= m;
    (outer, radicand)
}

/// Exact element of `ℚ(√2, √3, √5, …)`: a finite sum `Σ q_d √d` over
/// square-free radicands `d ≥ 1`. Closed under ring operations.
#[derive(Clone, PartialEq, Eq)]
pub struct SqrtRat {
    terms: BTreeMap<u64, BigRational>,
}

impl SqrtRat {
    pub fn rational(q: BigRational) -> Self {
        let mut terms = BTreeMap::new();
        if !q.is_zero() {
            terms.insert(1, q);
        }
        SqrtRat { terms }
    }

    pub fn from_int(v: i64) -> Self {
        SqrtRat::rational(BigRational::from_integer(BigInt::from(v)))
    }

    fn insert(&mut self, radicand: u64, coeff: BigRational) {
        if coeff.is_zero() {
            return;
        }
        match self.terms.remove(&radicand) {
            None => {
                self.terms.insert(radicand, coeff);
            }
            Some(old) => {
                let sum = old + coeff;
                if !sum.is_zero() {
                    self.terms.insert(radicand, sum);
                }
            }
        }
    }

    /// The purely rational part (coefficient of `√1`).
    pub fn rational_part(&self) -> BigRational {
        self.terms.get(&1).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn is_rational(&self) -> bool {
        self.terms.keys().all(|&d| d == 1)
    }
}

impl fmt::Debug for SqrtRat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(d, q)| if *d == 1 { format!("{q}") } else { format!("{q}√{d}") })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

impl Add for SqrtRat {
    type Output = SqrtRat;
    fn add(self, rhs: Self) -> Self {
        let mut out = self;
        for (d, q) in rhs.terms {
            out.insert(d, q);
        }
        out
    }
}

impl Sub for SqrtRat {
    type Output = SqrtRat;
    fn sub(self, rhs: Self) -> Self {
        self + (-rhs)
    }
}

impl Neg for SqrtRat {
    type Output = SqrtRat;
    fn neg(self) -> Self {
        SqrtRat { terms: self.terms.into_iter().map(|(d, q)| (d, -q)).collect() }
    }
}

impl Mul for SqrtRat {
    type Output = SqrtRat;
    fn mul(self, rhs: Self) -> Self {
        let mut out = SqrtRat { terms: BTreeMap::new() };
        for (d1, q1) in &self.terms {
            for (d2, q2) in &rhs.terms {
                let g = num_integer::gcd(*d1, *d2);
                let radicand = (d1 / g) * (d2 / g);
                let coeff = q1 * q2 * BigRational::from_integer(BigInt::from(g));
                out.insert(radicand, coeff);
            }
        }
        out
    }
}

impl Zero for SqrtRat {
    fn zero() -> Self {
        SqrtRat { terms: BTreeMap::new() }
    }
    fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
}

impl One for SqrtRat {
    fn one() -> Self {
        SqrtRat::from_int(1)
    }
}

impl Scalar for SqrtRat {
    const EXACT: bool = true;

    fn from_ratio(num: i64, den: i64) -> Self {
        SqrtRat::rational(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    fn sqrt_nat(n: u64) -> Self {
        if n == 0 {
            return SqrtRat::zero();
        }
        let (outer, radicand) = squarefree_split(n);
        let mut out = SqrtRat::zero();
        out.insert(radicand, BigRational::from_integer(BigInt::from(outer)));
        out
    }

    fn conj(&self) -> Self {
        self.clone()
    }

    fn abs_f64(&self) -> f64 {
        self.to_f64().abs()
    }
}

impl RealScalar for SqrtRat {
    fn to_f64(&self) -> f64 {
        self.terms
            .iter()
            .map(|(d, q)| q.to_f64().unwrap_or(f64::NAN) * (*d as f64).sqrt())
            .sum()
    }
}

/// Complex scalar over a real scalar `S`.
#[derive(Clone, PartialEq, Debug)]
pub struct CScalar<S> {
    pub re: S,
    pub im: S,
}

impl<S: RealScalar> CScalar<S> {
    pub fn new(re: S, im: S) -> Self {
        CScalar { re, im }
    }

    pub fn real(re: S) -> Self {
        CScalar { re, im: S::zero() }
    }

    pub fn i() -> Self {
        CScalar { re: S::zero(), im: S::one() }
    }
}

impl<S: RealScalar> Add for CScalar<S> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        CScalar { re: self.re + rhs.re, im: self.im + rhs.im }
    }
}

impl<S: RealScalar> Sub for CScalar<S> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        CScalar { re: self.re - rhs.re, im: self.im - rhs.im }
    }
}

impl<S: RealScalar> Neg for CScalar<S> {
    type Output = Self;
    fn neg(self) -> Self {
        CScalar { re: -self.re, im: -self.im }
    }
}

impl<S: RealScalar> Mul for CScalar<S> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        CScalar {
            re: self.re.clone() * rhs.re.clone() - self.im.clone() * rhs.im.clone(),
            im: self.re * rhs.im + self.im * rhs.re,
        }
    }
}

impl<S: RealScalar> Zero for CScalar<S> {
    fn zero() -> Self {
        CScalar { re: S::zero(), im: S::zero() }
    }
    fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }
}

impl<S: RealScalar> One for CScalar<S> {
    fn one() -> Self {
        CScalar { re: S::one(), im: S::zero() }
    }
}

impl<S: RealScalar> Scalar for CScalar<S> {
    const EXACT: bool = S::EXACT;

    fn from_ratio(num: i64, den: i64) -> Self {
        CScalar::real(S::from_ratio(num, den))
    }

    fn sqrt_nat(n: u64) -> Self {
        CScalar::real(S::sqrt_nat(n))
    }

    fn conj(&self) -> Self {
        CScalar { re: self.re.clone(), im: -self.im.clone() }
    }

    fn abs_f64(&self) -> f64 {
        self.re.to_f64().hypot(self.im.to_f64())
    }
}
