//! Symbolic differential forms on `T_s × T_φ × T^n` and the twisted calculus.
//!
//! A form is a finite sum of terms
//!
//! ```text
//!   c · π^{p/2} · e^{i k_s s} e^{i k_φ φ} · ds^{ε_s} ∧ dφ^{ε_φ} ∧ dθ_I
//! ```
//!
//! with `c` a Gaussian rational. The half-power of `π` rides along in the
//! term key, so normalizations like `dφ/2π` and the `√π` of the
//! desuspension stay exact instead of polluting the rational arithmetic.
//! Generators order as `ds < dφ < dθ_1 < … < dθ_n`; wedge signs count
//! inversions against that order.
//!
//! The twisted differential is `ω ↦ dω + H∧ω` for a closed decomposable
//! 3-form `H`. `twisted_primitive` runs the inductive correction scheme
//! that solves `dΦ = (d+H)Ω` for even `Φ` without a zero-mode component:
//! each step replaces `H ∧ G` by an exact form using
//! `e^{ikφ} dφ = d(e^{ikφ}/ik)`, raising the θ-degree by two, so the
//! iteration dies on dimensional grounds.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::exterior::{Ext, ExteriorError, MultiIndex};
use crate::{ExtClassQ, ExtElement};

#[derive(Debug, Error, PartialEq)]
pub enum FormError {
    #[error("torus dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("flux form does not have the decomposable twist shape: {0}")]
    TwistShape(String),
    #[error("primitive input must live on T_φ × T^n (no s-modes, no ds factor)")]
    NotOnPhiTorus,
    #[error("primitive input has a φ-zero-mode component without dφ; no trigonometric primitive exists")]
    ZeroModeObstruction,
    #[error("gauge exponent must be of even total degree")]
    OddDegreeGauge,
    #[error("gauge exponent has a degree-0 component; the exponential would not truncate")]
    NonNilpotentGauge,
    #[error("primitive iteration exceeded the dimensional bound {0}")]
    IterationOverflow(usize),
    #[error("curvature summand is not a homogeneous 2-form")]
    BadCurvature,
    #[error(transparent)]
    Exterior(#[from] ExteriorError),
}

/// `a + b·i` with `a, b ∈ ℚ`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GaussianRational {
    pub re: BigRational,
    pub im: BigRational,
}

impl GaussianRational {
    pub fn new(re: BigRational, im: BigRational) -> Self {
        GaussianRational { re, im }
    }

    pub fn zero() -> Self {
        GaussianRational { re: BigRational::zero(), im: BigRational::zero() }
    }

    pub fn one() -> Self {
        GaussianRational { re: BigRational::one(), im: BigRational::zero() }
    }

    pub fn from_ratio(num: i64, den: i64) -> Self {
        GaussianRational {
            re: BigRational::new(BigInt::from(num), BigInt::from(den)),
            im: BigRational::zero(),
        }
    }

    pub fn from_rational(re: BigRational) -> Self {
        GaussianRational { re, im: BigRational::zero() }
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn add(&self, o: &Self) -> Self {
        GaussianRational { re: &self.re + &o.re, im: &self.im + &o.im }
    }

    pub fn neg(&self) -> Self {
        GaussianRational { re: -self.re.clone(), im: -self.im.clone() }
    }

    pub fn mul(&self, o: &Self) -> Self {
        GaussianRational {
            re: &self.re * &o.re - &self.im * &o.im,
            im: &self.re * &o.im + &self.im * &o.re,
        }
    }

    /// Multiplication by `i·k`.
    pub fn mul_ik(&self, k: i64) -> Self {
        let k = BigRational::from_integer(BigInt::from(k));
        GaussianRational { re: -(&self.im * &k), im: &self.re * &k }
    }

    /// Division by `i·k`, `k ≠ 0`: `c/(ik) = −i·c/k`.
    pub fn div_ik(&self, k: i64) -> Self {
        assert!(k != 0);
        let k = BigRational::from_integer(BigInt::from(k));
        GaussianRational { re: &self.im / &k, im: -(&self.re / &k) }
    }
}

impl fmt::Display for GaussianRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.im.is_zero() {
            write!(f, "{}", self.re)
        } else if self.re.is_zero() {
            write!(f, "{}i", self.im)
        } else {
            write!(f, "({} + {}i)", self.re, self.im)
        }
    }
}

/// Monomial part of a term: `√π` grade, circle modes, circle covectors and
/// the θ-monomial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct TermKey {
    pub pi_half: i16,
    pub k_s: i32,
    pub k_phi: i32,
    pub ds: bool,
    pub dphi: bool,
    pub theta: MultiIndex,
}

impl TermKey {
    pub fn scalar() -> Self {
        TermKey { pi_half: 0, k_s: 0, k_phi: 0, ds: false, dphi: false, theta: MultiIndex::EMPTY }
    }

    pub fn degree(&self) -> u32 {
        self.ds as u32 + self.dphi as u32 + self.theta.degree()
    }

    /// Full generator bitmask: bit 0 = ds, bit 1 = dφ, bit i+1 = dθ_i.
    fn mask(&self) -> u64 {
        (self.ds as u64) | ((self.dphi as u64) << 1) | ((self.theta.bits() as u64) << 2)
    }

    fn from_mask(mask: u64, pi_half: i16, k_s: i32, k_phi: i32) -> Self {
        TermKey {
            pi_half,
            k_s,
            k_phi,
            ds: mask & 1 != 0,
            dphi: mask & 2 != 0,
            theta: MultiIndex::from_bits((mask >> 2) as u32),
        }
    }
}

fn merge_masks(a: u64, b: u64) -> Option<(u64, i32)> {
    if a & b != 0 {
        return None;
    }
    let mut inversions = 0u32;
    let mut rest = b;
    while rest != 0 {
        let bit = rest.trailing_zeros();
        inversions += (a >> (bit + 1)).count_ones();
        rest &= rest - 1;
    }
    Some((a | b, if inversions.is_multiple_of(2) { 1 } else { -1 }))
}

/// Differential form on `T_s × T_φ × T^n` with trigonometric-polynomial
/// coefficients. No zero coefficients are stored.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierForm {
    n: usize,
    terms: BTreeMap<TermKey, GaussianRational>,
}

impl FourierForm {
    pub fn zero(n: usize) -> Self {
        FourierForm { n, terms: BTreeMap::new() }
    }

    pub fn one(n: usize) -> Self {
        FourierForm::term(n, TermKey::scalar(), GaussianRational::one()).unwrap()
    }

    pub fn term(n: usize, key: TermKey, coeff: GaussianRational) -> Result<Self, FormError> {
        if !key.theta.fits_in(n) {
            let high = key.theta.indices().into_iter().max().unwrap_or(0);
            return Err(FormError::Exterior(ExteriorError::GeneratorOutOfRange(high, n)));
        }
        let mut f = FourierForm::zero(n);
        f.insert(key, coeff);
        Ok(f)
    }

    /// `ds/2π` = `(1/2)·π^{−1}·ds`.
    pub fn ds_over_2pi(n: usize) -> Self {
        let key = TermKey { pi_half: -2, ds: true, ..TermKey::scalar() };
        FourierForm::term(n, key, GaussianRational::from_ratio(1, 2)).unwrap()
    }

    /// `dφ/2π`.
    pub fn dphi_over_2pi(n: usize) -> Self {
        let key = TermKey { pi_half: -2, dphi: true, ..TermKey::scalar() };
        FourierForm::term(n, key, GaussianRational::from_ratio(1, 2)).unwrap()
    }

    /// Shifts the `√π` grade of every term.
    pub fn scale_sqrt_pi(&self, half_powers: i16) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|(k, c)| (TermKey { pi_half: k.pi_half + half_powers, ..*k }, c.clone()))
            .collect();
        FourierForm { n: self.n, terms }
    }

    /// Embeds a rational exterior class on `T^n` as an invariant form.
    pub fn from_class(class: &ExtClassQ) -> Self {
        let mut f = FourierForm::zero(class.n());
        for (m, c) in class.terms() {
            let key = TermKey { theta: *m, ..TermKey::scalar() };
            f.insert(key, GaussianRational::from_rational(c.clone()));
        }
        f
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&TermKey, &GaussianRational)> {
        self.terms.iter()
    }

    pub fn coeff(&self, key: &TermKey) -> GaussianRational {
        self.terms.get(key).cloned().unwrap_or_else(GaussianRational::zero)
    }

    fn insert(&mut self, key: TermKey, coeff: GaussianRational) {
        if coeff.is_zero() {
            return;
        }
        match self.terms.remove(&key) {
            None => {
                self.terms.insert(key, coeff);
            }
            Some(old) => {
                let sum = old.add(&coeff);
                if !sum.is_zero() {
                    self.terms.insert(key, sum);
                }
            }
        }
    }

    fn check_n(&self, other: &Self) -> Result<(), FormError> {
        if self.n != other.n {
            return Err(FormError::DimensionMismatch(self.n, other.n));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self, FormError> {
        self.check_n(other)?;
        let mut out = self.clone();
        for (k, c) in &other.terms {
            out.insert(*k, c.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self, FormError> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        let terms = self.terms.iter().map(|(k, c)| (*k, c.neg())).collect();
        FourierForm { n: self.n, terms }
    }

    pub fn scale(&self, factor: &GaussianRational) -> Self {
        let mut out = FourierForm::zero(self.n);
        for (k, c) in &self.terms {
            out.insert(*k, c.mul(factor));
        }
        out
    }

    pub fn wedge(&self, other: &Self) -> Result<Self, FormError> {
        self.check_n(other)?;
        let mut out = FourierForm::zero(self.n);
        for (ka, ca) in &self.terms {
            for (kb, cb) in &other.terms {
                let Some((mask, sign)) = merge_masks(ka.mask(), kb.mask()) else {
                    continue;
                };
                let key = TermKey::from_mask(
                    mask,
                    ka.pi_half + kb.pi_half,
                    ka.k_s + kb.k_s,
                    ka.k_phi + kb.k_phi,
                );
                let mut c = ca.mul(cb);
                if sign < 0 {
                    c = c.neg();
                }
                out.insert(key, c);
            }
        }
        Ok(out)
    }

    pub fn max_degree(&self) -> u32 {
        self.terms.keys().map(|k| k.degree()).max().unwrap_or(0)
    }

    pub fn is_even(&self) -> bool {
        self.terms.keys().all(|k| k.degree() % 2 == 0)
    }

    /// True when the form lives on `T_φ × T^n` only.
    pub fn is_phi_torus(&self) -> bool {
        self.terms.keys().all(|k| k.k_s == 0 && !k.ds)
    }
}

/// Exterior derivative: termwise
/// `d(e^{ik_s s} e^{ik_φ φ} ω) = ik_s ds∧(…) + ik_φ dφ∧(…)`.
pub fn exterior_d(omega: &FourierForm) -> FourierForm {
    let mut out = FourierForm::zero(omega.n);
    for (k, c) in &omega.terms {
        if k.k_s != 0 && !k.ds {
            // ds is the minimal generator: prepending it costs no sign
            let key = TermKey { ds: true, ..*k };
            out.insert(key, c.mul_ik(k.k_s as i64));
        }
        if k.k_phi != 0 && !k.dphi {
            let mut c2 = c.mul_ik(k.k_phi as i64);
            if k.ds {
                c2 = c2.neg(); // dφ moves past ds
            }
            let key = TermKey { dphi: true, ..*k };
            out.insert(key, c2);
        }
    }
    out
}

/// Checks that `h` is a closed 3-form of the decomposable twist shape
/// `(circle 1-form profile on T_φ) ∧ (2-form on T^n)`.
pub fn validate_twist(h: &FourierForm) -> Result<(), FormError> {
    for k in h.terms.keys() {
        if !k.dphi || k.ds || k.k_s != 0 || k.theta.degree() != 2 {
            return Err(FormError::TwistShape(format!(
                "term k_s={}, k_phi={}, ds={}, dphi={}, |theta|={}",
                k.k_s,
                k.k_phi,
                k.ds,
                k.dphi,
                k.theta.degree()
            )));
        }
    }
    if !exterior_d(h).is_zero() {
        return Err(FormError::TwistShape("flux is not closed".into()));
    }
    Ok(())
}

/// Twisted differential `dω + H∧ω`.
pub fn twisted_d(omega: &FourierForm, h: &FourierForm) -> Result<FourierForm, FormError> {
    validate_twist(h)?;
    exterior_d(omega).add(&h.wedge(omega)?)
}

/// The harmonic-model flux `(dφ/2π) ∧ k·dθ1∧dθ2`.
pub fn harmonic_flux(n: usize, k: i64) -> FourierForm {
    let f_lambda = FourierForm::term(
        n,
        TermKey { theta: MultiIndex::from_indices(&[1, 2]).unwrap(), ..TermKey::scalar() },
        GaussianRational::from_ratio(k, 1),
    )
    .unwrap();
    FourierForm::dphi_over_2pi(n).wedge(&f_lambda).unwrap()
}

#[derive(Debug, Clone)]
pub struct PrimitiveResult {
    /// `Ω` with `dΦ = (d+H)Ω`.
    pub primitive: FourierForm,
    /// Number of correction steps taken.
    pub iterations: usize,
}

/// Dimensional bound on the correction count: each step raises the
/// θ-degree by 2 on a space of total dimension `n + 2`.
pub fn primitive_iteration_bound(n: usize) -> usize {
    (n + 2).div_ceil(2) + 1
}

/// Solves `dΦ = (d+H)Ω` for an even form `Φ` on `T_φ × T^n` whose
/// `(k_φ = 0, no dφ)` component vanishes, by the inductive corrections
/// `G⁽ⁱ⁾` with `dG⁽ⁱ⁾ = H ∧ G⁽ⁱ⁻¹⁾`:
///
/// `Ω = Φ − G⁽¹⁾ + G⁽²⁾ − …`, terminating when the degree of `H ∧ G⁽ˡ⁾`
/// exceeds the dimensionality.
pub fn twisted_primitive(phi: &FourierForm, h: &FourierForm) -> Result<PrimitiveResult, FormError> {
    validate_twist(h)?;
    if h.terms.keys().any(|k| k.k_phi != 0) {
        return Err(FormError::TwistShape(
            "primitive algorithm needs the harmonic (mode-0) flux profile".into(),
        ));
    }
    if !phi.is_phi_torus() {
        return Err(FormError::NotOnPhiTorus);
    }
    // The correction scheme is parity-agnostic, so odd-degree inputs are
    // accepted too; only the φ-zero-mode obstruction is structural.
    if phi.terms.keys().any(|k| !k.dphi && k.k_phi == 0) {
        return Err(FormError::ZeroModeObstruction);
    }

    let bound = primitive_iteration_bound(phi.n);
    let mut omega = phi.clone();
    let mut g = phi.clone();
    let mut negative = true;
    let mut iterations = 0usize;
    loop {
        let remainder = h.wedge(&g)?;
        if remainder.is_zero() {
            break;
        }
        iterations += 1;
        if iterations > bound {
            return Err(FormError::IterationOverflow(bound));
        }
        // every remainder term is c·e^{ikφ} dφ∧θ_J with k ≠ 0; its
        // primitive is (c/ik)·e^{ikφ} θ_J
        let mut next = FourierForm::zero(phi.n);
        for (k, c) in &remainder.terms {
            debug_assert!(k.dphi && k.k_phi != 0 && !k.ds && k.k_s == 0);
            let key = TermKey { dphi: false, ..*k };
            next.insert(key, c.div_ik(k.k_phi as i64));
        }
        omega = if negative { omega.sub(&next)? } else { omega.add(&next)? };
        negative = !negative;
        g = next;
    }

    debug_assert_eq!(twisted_d(&omega, h)?, exterior_d(phi));
    Ok(PrimitiveResult { primitive: omega, iterations })
}

/// `e^{−Φ} ∧ ω` for an even exponent with positive-degree terms; the chain
/// map between the complexes of `H` and `H + dΦ`.
pub fn gauge_transform(omega: &FourierForm, phi: &FourierForm) -> Result<FourierForm, FormError> {
    if !phi.is_even() {
        return Err(FormError::OddDegreeGauge);
    }
    if phi.terms.keys().any(|k| k.degree() == 0) {
        return Err(FormError::NonNilpotentGauge);
    }
    let mut exp = FourierForm::one(phi.n);
    let mut power = FourierForm::one(phi.n);
    let minus_phi = phi.neg();
    let mut j = 1i64;
    loop {
        power = power.wedge(&minus_phi)?;
        if power.is_zero() {
            break;
        }
        power = power.scale(&GaussianRational::from_ratio(1, j));
        exp = exp.add(&power)?;
        j += 1;
    }
    exp.wedge(omega)
}

/// Curvature data of a vector bundle split into line summands plus a
/// trivial part: rank = `trivial_rank + line_classes.len()`.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureData {
    pub n: usize,
    pub trivial_rank: u32,
    pub line_classes: Vec<ExtElement>,
}

impl CurvatureData {
    pub fn trivial(n: usize, rank: u32) -> Self {
        CurvatureData { n, trivial_rank: rank, line_classes: Vec::new() }
    }

    pub fn line(n: usize, c1: ExtElement) -> Self {
        CurvatureData { n, trivial_rank: 0, line_classes: vec![c1] }
    }

    pub fn rank(&self) -> u32 {
        self.trivial_rank + self.line_classes.len() as u32
    }
}

fn ext_exp(class: &ExtClassQ) -> ExtClassQ {
    let n = class.n();
    let mut acc = Ext::scalar(n, BigRational::one());
    let mut power = Ext::scalar(n, BigRational::one());
    let mut j = 1i64;
    loop {
        power = power.wedge(class).unwrap();
        if power.is_zero() {
            break;
        }
        power = power.scale(&BigRational::new(BigInt::one(), BigInt::from(j)));
        acc = acc.add(&power).unwrap();
        j += 1;
    }
    acc
}

/// Chern character `trivial rank + Σ exp(c1_i)` of split curvature data.
pub fn chern_character(c: &CurvatureData) -> Result<ExtClassQ, FormError> {
    let mut ch = Ext::scalar(c.n, BigRational::from_integer(BigInt::from(c.trivial_rank)));
    for c1 in &c.line_classes {
        // a zero class is a flat line bundle, exp(0) = 1
        if !c1.is_homogeneous(2) {
            return Err(FormError::BadCurvature);
        }
        let c1q = c1.map_coeffs(|v| BigRational::from_integer(v.clone()));
        ch = ch.add(&ext_exp(&c1q)).unwrap();
    }
    Ok(ch)
}

/// Normalized desuspension `√π ∫_{T_s}`: keeps the `k_s = 0`, `ds`-carrying
/// component, multiplies by `2π`, drops `ds` (it sits leftmost, so the
/// contraction carries no sign), and tags on `√π`.
pub fn desuspend(omega: &FourierForm) -> FourierForm {
    let mut out = FourierForm::zero(omega.n);
    for (k, c) in &omega.terms {
        if !k.ds || k.k_s != 0 {
            continue;
        }
        let key = TermKey { ds: false, pi_half: k.pi_half + 3, ..*k };
        out.insert(key, c.mul(&GaussianRational::from_ratio(2, 1)));
    }
    out
}

/// JSON value for a form: a list of term objects with exact rational
/// coefficients (numerator/denominator pairs) and the `√π` grade.
pub fn form_to_json(f: &FourierForm) -> serde_json::Value {
    let rational =
        |r: &BigRational| serde_json::json!([r.numer().to_string(), r.denom().to_string()]);
    let terms: Vec<serde_json::Value> = f
        .terms()
        .map(|(k, c)| {
            serde_json::json!({
                "k_s": k.k_s,
                "k_phi": k.k_phi,
                "ds": k.ds,
                "dphi": k.dphi,
                "theta_indices": k.theta.indices(),
                "pi_half": k.pi_half,
                "re": rational(&c.re),
                "im": rational(&c.im),
            })
        })
        .collect();
    serde_json::json!({ "n": f.n(), "terms": terms })
}
