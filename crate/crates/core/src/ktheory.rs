//! Twisted K-groups of `T^{n+1}` and character quotient groups.
//!
//! The twist is the cup product of the `dφ`-class with `k·dθ1∧dθ2`; the
//! K-theory ring of `T^n` is identified with the integer exterior algebra.
//! Twisted K-groups are computed twice — assembling the closed form
//! `Λ_{n−2} ⊕ Λ_{n−1} ⊕ Λ_n/kΛ_{n−2}` and directly from kernel/quotient
//! lattices of the wedge-multiplication map — and the two must agree.
//! Character quotients live on the integral lattice of decomposable
//! classes; cosets get canonical Hermite representatives and Smith
//! coordinates, which is where the torsion classification happens.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::exterior::{Ext, ExteriorError, MultiIndex, Parity};
use crate::lattice::{
    hermite_normal_form, kernel_lattice, quotient_group, smith_normal_form, AbelianGroup,
    HermiteBasis, IntMatrix, LatticeError, SmithDecomposition,
};
use crate::{ExtClassQ, ExtElement};

#[derive(Debug, Error, PartialEq)]
pub enum KTheoryError {
    #[error("invalid twist: need torus dimension n ≥ 2 and twist level k ≠ 0, got n={n}, k={k}")]
    InvalidTwist { n: usize, k: i64 },
    #[error("torus dimension {0} too large for the monomial encoding (max 16)")]
    TorusTooLarge(usize),
    #[error("class is not in the integral decomposable lattice: {0}")]
    NonLattice(String),
    #[error("closed-form and direct lattice computations disagree: {0}")]
    CrossCheckFailed(String),
    #[error(transparent)]
    Exterior(#[from] ExteriorError),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}

/// Decomposable twist on `T_φ × T^n`: level `k` times `dθ1∧dθ2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct TwistSpec {
    n: usize,
    k: i64,
}

impl TwistSpec {
    pub fn new(n: usize, k: i64) -> Result<Self, KTheoryError> {
        if n < 2 || k == 0 {
            return Err(KTheoryError::InvalidTwist { n, k });
        }
        if n > 16 {
            return Err(KTheoryError::TorusTooLarge(n));
        }
        Ok(TwistSpec { n, k })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> i64 {
        self.k
    }

    /// `k·dθ1∧dθ2` as an integer class on `T^n`.
    pub fn twist_class(&self) -> ExtElement {
        Ext::monomial(self.n, MultiIndex::from_indices(&[1, 2]).unwrap(), BigInt::from(self.k))
            .unwrap()
    }
}

/// Monomial basis of `Λ_n^parity` in canonical (degree, bitmask) order.
pub fn parity_monomials(n: usize, parity: Parity) -> Vec<MultiIndex> {
    let mut out: Vec<MultiIndex> = (0u32..(1u32 << n))
        .map(MultiIndex::from_bits)
        .filter(|m| Parity::of_degree(m.degree()) == parity)
        .collect();
    out.sort();
    out
}

/// Rank of `Λ_m^parity` (`0` for negative `m`).
pub fn lambda_rank(m: i64, parity: Parity) -> usize {
    if m < 0 {
        return 0;
    }
    if m == 0 {
        return match parity {
            Parity::Even => 1,
            Parity::Odd => 0,
        };
    }
    1usize << (m as usize - 1)
}

/// Matrix of `x ↦ multiplier ∧ x` from the `domain` basis to the `codomain`
/// basis, columns indexed by domain monomials.
pub fn multiplication_matrix(
    n: usize,
    multiplier: &ExtElement,
    domain: &[MultiIndex],
    codomain: &[MultiIndex],
) -> IntMatrix {
    let index: BTreeMap<MultiIndex, usize> =
        codomain.iter().enumerate().map(|(i, m)| (*m, i)).collect();
    let mut out = IntMatrix::zero(codomain.len(), domain.len());
    for (j, m) in domain.iter().enumerate() {
        let x = Ext::monomial(n, *m, BigInt::one()).unwrap();
        let image = multiplier.wedge(&x).unwrap();
        for (idx, c) in image.terms() {
            let i = *index.get(idx).expect("image monomial outside codomain basis");
            out.set(i, j, c.clone());
        }
    }
    out
}

/// Matrix of wedging with `k·dθ1∧dθ2` on `Λ_n^parity` (degree +2 preserves
/// parity, so domain and codomain share the same basis).
pub fn wedge_image_matrix(spec: &TwistSpec, parity: Parity) -> IntMatrix {
    let basis = parity_monomials(spec.n, parity);
    multiplication_matrix(spec.n, &spec.twist_class(), &basis, &basis)
}

/// Saturated basis of `{x ∈ Λ_n^parity : k·dθ1∧dθ2 ∧ x = 0}`.
pub fn invariant_subgroup(spec: &TwistSpec, parity: Parity) -> Vec<ExtElement> {
    let basis = parity_monomials(spec.n, parity);
    let kernel = kernel_lattice(&wedge_image_matrix(spec, parity));
    (0..kernel.cols())
        .map(|j| ext_from_coords(spec.n, &basis, &kernel.column(j)))
        .collect()
}

fn ext_from_coords(n: usize, basis: &[MultiIndex], coords: &[BigInt]) -> ExtElement {
    let mut out = Ext::zero(n);
    for (m, c) in basis.iter().zip(coords) {
        out = out.add(&Ext::monomial(n, *m, c.clone()).unwrap()).unwrap();
    }
    out
}

/// One twisted K-group with its three-summand breakdown.
#[derive(Debug, Clone)]
pub struct KGroupResult {
    pub degree: u8,
    pub group: AbelianGroup,
    /// `(Λ_{n−2} part, Λ_{n−1} part, quotient part)`.
    pub summands: [AbelianGroup; 3],
    /// Coset representatives generating the quotient summand: torsion
    /// generators first, then free generators.
    pub generators: Vec<ExtElement>,
}

/// `K^degree(T^{n+1}, τ)` computed via the closed form and cross-validated
/// against the direct kernel/quotient lattice computation.
pub fn twisted_k_group(spec: &TwistSpec, degree: u8) -> Result<KGroupResult, KTheoryError> {
    assert!(degree <= 1, "K-theory degree is 0 or 1");
    // All three closed-form summands share one parity: odd for K^0, even
    // for K^1. The invariant part is computed in the opposite parity and is
    // isomorphic to the first two summands.
    let p = if degree == 0 { Parity::Odd } else { Parity::Even };
    let n = spec.n as i64;

    // closed form
    let s1 = AbelianGroup::free(lambda_rank(n - 2, p));
    let s2 = AbelianGroup::free(lambda_rank(n - 1, p));
    let quotient_free = lambda_rank(n, p) - lambda_rank(n - 2, p);
    let torsion_copies = if spec.k.abs() == 1 { 0 } else { lambda_rank(n - 2, p) };
    let s3 = AbelianGroup {
        free_rank: quotient_free,
        invariant_factors: vec![BigInt::from(spec.k.abs()); torsion_copies],
    };

    // direct lattice computation
    let image = wedge_image_matrix(spec, p);
    let direct_quotient = quotient_group(lambda_rank(n, p), &image)?;
    let invariant_rank = kernel_lattice(&wedge_image_matrix(spec, p.flip())).cols();

    if direct_quotient != s3 {
        return Err(KTheoryError::CrossCheckFailed(format!(
            "quotient summand: closed form {s3}, direct {direct_quotient}"
        )));
    }
    if invariant_rank != s1.free_rank + s2.free_rank {
        return Err(KTheoryError::CrossCheckFailed(format!(
            "invariant rank: closed form {}, direct {invariant_rank}",
            s1.free_rank + s2.free_rank
        )));
    }

    // quotient-part generators from the Smith transform of the image
    let basis = parity_monomials(spec.n, p);
    let snf = smith_normal_form(&image);
    let rank = snf.rank();
    let mut generators = Vec::new();
    for i in 0..rank {
        if snf.d.get(i, i).abs() > BigInt::one() {
            generators.push(ext_from_coords(spec.n, &basis, &snf.u_inv.column(i)));
        }
    }
    for i in rank..basis.len() {
        generators.push(ext_from_coords(spec.n, &basis, &snf.u_inv.column(i)));
    }

    let group = AbelianGroup::direct_sum(&[&s1, &s2, &s3]);
    Ok(KGroupResult { degree, group, summands: [s1, s2, s3], generators })
}

/// Circle-form factor of a decomposable class on `T_s × T_φ × T^n`.
///
/// Factors carry the unit-volume normalization (`ds/2π`, `dφ/2π`); the
/// torus part is an exterior class over the `dθ_i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CircleFactor {
    None,
    Ds,
    DPhi,
    DsDPhi,
}

impl CircleFactor {
    fn degree(&self) -> u32 {
        match self {
            CircleFactor::None => 0,
            CircleFactor::Ds | CircleFactor::DPhi => 1,
            CircleFactor::DsDPhi => 2,
        }
    }
}

/// Ordered monomial basis of the integral lattice of decomposable classes
/// of one total parity.
#[derive(Debug, Clone)]
pub struct CharLattice {
    pub n: usize,
    pub parity: Parity,
    blocks: Vec<(CircleFactor, Vec<MultiIndex>)>,
}

impl CharLattice {
    /// Odd classes on `T_φ × T^n`: bare odd monomials plus `dφ/2π ∧` even
    /// monomials.
    pub fn odd(n: usize) -> Self {
        CharLattice {
            n,
            parity: Parity::Odd,
            blocks: vec![
                (CircleFactor::None, parity_monomials(n, Parity::Odd)),
                (CircleFactor::DPhi, parity_monomials(n, Parity::Even)),
            ],
        }
    }

    /// Even classes on `T_s × T_φ × T^n`.
    pub fn even(n: usize) -> Self {
        CharLattice {
            n,
            parity: Parity::Even,
            blocks: vec![
                (CircleFactor::None, parity_monomials(n, Parity::Even)),
                (CircleFactor::Ds, parity_monomials(n, Parity::Odd)),
                (CircleFactor::DPhi, parity_monomials(n, Parity::Odd)),
                (CircleFactor::DsDPhi, parity_monomials(n, Parity::Even)),
            ],
        }
    }

    pub fn for_parity(n: usize, parity: Parity) -> Self {
        match parity {
            Parity::Odd => CharLattice::odd(n),
            Parity::Even => CharLattice::even(n),
        }
    }

    pub fn rank(&self) -> usize {
        self.blocks.iter().map(|(_, b)| b.len()).sum()
    }

    pub fn blocks(&self) -> &[(CircleFactor, Vec<MultiIndex>)] {
        &self.blocks
    }

    fn block_offset(&self, factor: CircleFactor) -> Option<usize> {
        let mut offset = 0;
        for (f, b) in &self.blocks {
            if *f == factor {
                return Some(offset);
            }
            offset += b.len();
        }
        None
    }

    pub fn index_of(&self, factor: CircleFactor, m: MultiIndex) -> Option<usize> {
        let offset = self.block_offset(factor)?;
        let (_, basis) = self.blocks.iter().find(|(f, _)| *f == factor)?;
        basis.iter().position(|x| *x == m).map(|p| offset + p)
    }

    pub fn label(&self, index: usize) -> (CircleFactor, MultiIndex) {
        let mut offset = 0;
        for (f, b) in &self.blocks {
            if index < offset + b.len() {
                return (*f, b[index - offset]);
            }
            offset += b.len();
        }
        panic!("index {index} out of lattice range");
    }
}

/// Decomposable cohomology class: a sum of circle factors wedged with
/// rational exterior classes on `T^n`. The `√π`/`2π` normalizations are
/// carried by the factor convention, not by the coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct DecomposableClass {
    pub n: usize,
    parts: BTreeMap<CircleFactor, ExtClassQ>,
}

impl DecomposableClass {
    pub fn zero(n: usize) -> Self {
        DecomposableClass { n, parts: BTreeMap::new() }
    }

    pub fn from_part(factor: CircleFactor, class: ExtClassQ) -> Self {
        let mut out = DecomposableClass::zero(class.n());
        out.set_part(factor, class);
        out
    }

    pub fn set_part(&mut self, factor: CircleFactor, class: ExtClassQ) {
        assert_eq!(class.n(), self.n);
        if class.is_zero() {
            self.parts.remove(&factor);
        } else {
            self.parts.insert(factor, class);
        }
    }

    pub fn part(&self, factor: CircleFactor) -> ExtClassQ {
        self.parts.get(&factor).cloned().unwrap_or_else(|| Ext::zero(self.n))
    }

    pub fn parts(&self) -> impl Iterator<Item = (&CircleFactor, &ExtClassQ)> {
        self.parts.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        let mut out = self.clone();
        for (f, c) in &other.parts {
            let sum = out.part(*f).add(c).unwrap();
            out.set_part(*f, sum);
        }
        out
    }

    pub fn scale_int(&self, s: i64) -> Self {
        let factor = BigRational::from_integer(BigInt::from(s));
        let mut out = DecomposableClass::zero(self.n);
        for (f, c) in &self.parts {
            out.set_part(*f, c.scale(&factor));
        }
        out
    }

    /// Integer coordinates in the lattice basis. Errors when a part has the
    /// wrong parity for its block or a non-integral coefficient.
    pub fn to_vector(&self, lattice: &CharLattice) -> Result<Vec<BigInt>, KTheoryError> {
        if self.n != lattice.n {
            return Err(KTheoryError::NonLattice(format!(
                "class on T^{} vs lattice on T^{}",
                self.n, lattice.n
            )));
        }
        let mut coords = vec![BigInt::zero(); lattice.rank()];
        for (f, class) in &self.parts {
            for (m, c) in class.terms() {
                if !c.is_integer() {
                    return Err(KTheoryError::NonLattice(format!(
                        "coefficient {c} of {m} is not an integer"
                    )));
                }
                let Some(i) = lattice.index_of(*f, *m) else {
                    return Err(KTheoryError::NonLattice(format!(
                        "monomial {m} (total degree {}) has the wrong parity for this lattice",
                        m.degree() + f.degree()
                    )));
                };
                coords[i] = c.to_integer();
            }
        }
        Ok(coords)
    }

    pub fn from_vector(lattice: &CharLattice, coords: &[BigInt]) -> Self {
        assert_eq!(coords.len(), lattice.rank());
        let mut out = DecomposableClass::zero(lattice.n);
        for (i, c) in coords.iter().enumerate() {
            if !c.is_zero() {
                let (f, m) = lattice.label(i);
                let mono = Ext::monomial(lattice.n, m, BigRational::from_integer(c.clone())).unwrap();
                let sum = out.part(f).add(&mono).unwrap();
                out.set_part(f, sum);
            }
        }
        out
    }
}

/// Coordinates of a coset in the Smith basis of a character quotient:
/// values modulo the nontrivial invariant factors plus free coordinates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CosetCoords {
    /// (modulus, value mod modulus) per torsion summand.
    pub torsion: Vec<(BigInt, BigInt)>,
    pub free: Vec<BigInt>,
}

impl CosetCoords {
    pub fn is_zero(&self) -> bool {
        self.torsion.iter().all(|(_, v)| v.is_zero()) && self.free.iter().all(|v| v.is_zero())
    }

    pub fn torsion_part(&self) -> Vec<BigInt> {
        self.torsion.iter().map(|(_, v)| v.clone()).collect()
    }

    /// Order of the coset in the quotient group; `None` when infinite.
    pub fn order(&self) -> Option<BigInt> {
        if self.free.iter().any(|v| !v.is_zero()) {
            return None;
        }
        let mut order = BigInt::one();
        for (d, v) in &self.torsion {
            if v.is_zero() {
                continue;
            }
            let elt_order = d / v.gcd(d);
            order = order.lcm(&elt_order);
        }
        Some(order)
    }
}

/// A character quotient group together with its reduction machinery.
#[derive(Debug, Clone)]
pub struct CharacterQuotient {
    pub spec: TwistSpec,
    pub parity: Parity,
    pub lattice: CharLattice,
    pub group: AbelianGroup,
    sublattice: IntMatrix,
    reduction: HermiteBasis,
    smith: SmithDecomposition,
}

/// Quotient of the integral decomposable lattice by
/// `dφ/2π ∧ (k·dθ1∧dθ2) ∧ ch`-image generators.
pub fn character_quotient(spec: &TwistSpec, parity: Parity) -> Result<CharacterQuotient, KTheoryError> {
    let n = spec.n;
    let lattice = CharLattice::for_parity(n, parity);
    let twist = spec.twist_class();

    let mut columns: Vec<Vec<BigInt>> = Vec::new();
    let push_images = |source: Parity, target_block: CircleFactor, sign: i64, cols: &mut Vec<Vec<BigInt>>| {
        for g in parity_monomials(n, source) {
            let gen = Ext::monomial(n, g, BigInt::from(sign)).unwrap();
            let image = twist.wedge(&gen).unwrap();
            if image.is_zero() {
                continue;
            }
            let mut v = vec![BigInt::zero(); lattice.rank()];
            for (m, c) in image.terms() {
                let i = lattice
                    .index_of(target_block, *m)
                    .expect("twist image stays in the lattice");
                v[i] = c.clone();
            }
            cols.push(v);
        }
    };

    match parity {
        // dφ/2π ∧ kθ12 ∧ ch(K^0(T^n)) with ch(K^0) the full even lattice.
        Parity::Odd => push_images(Parity::Even, CircleFactor::DPhi, 1, &mut columns),
        // dφ/2π ∧ kθ12 ∧ ch(K^1(T_s × T^n)): odd classes on T_s × T^n are
        // bare odd ones plus ds/2π ∧ even ones; moving ds past dφ flips sign.
        Parity::Even => {
            push_images(Parity::Odd, CircleFactor::DPhi, 1, &mut columns);
            push_images(Parity::Even, CircleFactor::DsDPhi, -1, &mut columns);
        }
    }

    let sublattice = IntMatrix::from_columns(lattice.rank(), &columns);
    let group = quotient_group(lattice.rank(), &sublattice)?;
    let reduction = hermite_normal_form(&sublattice);
    let smith = smith_normal_form(&sublattice);
    Ok(CharacterQuotient { spec: *spec, parity, lattice, group, sublattice, reduction, smith })
}

impl CharacterQuotient {
    pub fn sublattice(&self) -> &IntMatrix {
        &self.sublattice
    }

    pub fn reduction_basis(&self) -> &HermiteBasis {
        &self.reduction
    }

    /// Canonical coset representative; equal outputs iff equal cosets.
    pub fn reduce(&self, c: &DecomposableClass) -> Result<DecomposableClass, KTheoryError> {
        let coords = c.to_vector(&self.lattice)?;
        let reduced = self.reduction.reduce(&coords);
        Ok(DecomposableClass::from_vector(&self.lattice, &reduced))
    }

    pub fn contains(&self, c: &DecomposableClass) -> Result<bool, KTheoryError> {
        Ok(self.reduction.contains(&c.to_vector(&self.lattice)?))
    }

    /// Smith coordinates of the coset of `c`.
    pub fn coset_coords(&self, c: &DecomposableClass) -> Result<CosetCoords, KTheoryError> {
        let coords = c.to_vector(&self.lattice)?;
        let rank = self.smith.rank();
        let y = self
            .smith
            .u
            .mul(&IntMatrix::from_columns(coords.len(), &[coords]))
            .expect("coordinate vector shape");
        let mut torsion = Vec::new();
        for i in 0..rank {
            let d = self.smith.d.get(i, i);
            if d.abs() > BigInt::one() {
                torsion.push((d.clone(), y.get(i, 0).mod_floor(d)));
            }
        }
        let free = (rank..self.lattice.rank()).map(|i| y.get(i, 0).clone()).collect();
        Ok(CosetCoords { torsion, free })
    }
}

/// Coset of a supercharge character `flow_sign · dφ/2π ∧ ch(ξ)`.
#[derive(Debug, Clone)]
pub struct SuperchargeClass {
    pub representative: DecomposableClass,
    pub coords: CosetCoords,
}

pub fn classify_supercharge(
    quotient: &CharacterQuotient,
    xi_chern: &ExtClassQ,
    flow_sign: i8,
) -> Result<SuperchargeClass, KTheoryError> {
    assert_eq!(quotient.parity, Parity::Odd, "supercharge characters are odd classes");
    if !xi_chern.has_parity(Parity::Even) {
        return Err(KTheoryError::NonLattice(
            "Chern character of a K^0-class must be even".into(),
        ));
    }
    let sign = BigRational::from_integer(BigInt::from(flow_sign as i64));
    let class = DecomposableClass::from_part(CircleFactor::DPhi, xi_chern.scale(&sign));
    let representative = quotient.reduce(&class)?;
    let coords = quotient.coset_coords(&class)?;
    Ok(SuperchargeClass { representative, coords })
}

/// Rank over ℚ of the twisted cohomology of the invariant forms on
/// `T_φ × T^n` with differential `H∧·`, `H = dφ ∧ k·dθ1∧dθ2`. Invariant
/// forms are closed, so the twisted differential reduces to wedging.
pub fn twisted_cohomology_rank(spec: &TwistSpec, parity: Parity) -> usize {
    let total = spec.n + 1; // generator 1 ↦ dφ, generator i+1 ↦ dθ_i
    let mut h = Ext::zero(total);
    h = h
        .add(
            &Ext::monomial(
                total,
                MultiIndex::from_indices(&[1, 2, 3]).unwrap(),
                BigInt::from(spec.k),
            )
            .unwrap(),
        )
        .unwrap();
    let par_basis = parity_monomials(total, parity);
    let flip_basis = parity_monomials(total, parity.flip());

    let d_out = multiplication_matrix(total, &h, &par_basis, &flip_basis);
    let d_in = multiplication_matrix(total, &h, &flip_basis, &par_basis);

    let kernel_rank = kernel_lattice(&d_out).cols();
    let image_rank = smith_normal_form(&d_in).rank();
    kernel_rank - image_rank
}
