//! Truncated spinor ⊗ Fock modules and the supercharge families.
//!
//! The loop-algebra action is realized on a charge-graded bosonic Fock
//! space: `e_0` reads the charge, `e_k = √k·a_k†` and `e_{−k} = √k·a_k`
//! for `k ≥ 1`, which reproduces `[e_n, e_m] = −n δ_{n,−m}` with
//! `e_n† = e_{−n}` and makes `l_0^e = 2Σ e_k e_{−k}` positive with kernel
//! exactly the charge vacua. Clifford generators are `ψ_n = √2·c_n†`,
//! `ψ_{−n} = √2·c_n` (Jordan–Wigner signs) and `ψ_0` acts as fermion
//! parity, so it fixes the vacuum.
//!
//! The even (two-family) module tensors two boson factors and a spinor
//! module with a two-dimensional vacuum; the zero modes are
//! `ψ_0^0 = σ_x·(−1)^f` and `ψ_0^1 = σ_y·(−1)^f`, giving the chiral
//! grading `Γ = −i ψ_0^0 ψ_0^1 (−1)^f = σ_z·(−1)^f`.
//!
//! Truncation keeps states with total excitation energy ≤ `cutoff` and
//! charges inside `±charge_window`; every matrix is the compression of
//! the untruncated operator, so adjoint pairs stay adjoint entrywise and
//! operator identities hold exactly on the interior sector.

use std::collections::BTreeMap;
use std::ops::Range;

use thiserror::Error;

use crate::matrix::OpMatrix;
use crate::scalar::{CScalar, RealScalar, Scalar};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FockError {
    #[error("mode {mode} outside the retained range ±{max}")]
    ModeOutOfRange { mode: i32, max: u32 },
    #[error("invalid truncation: cutoff {cutoff}, charge window {charge_window}, mode max {mode_max}")]
    InvalidTruncation { cutoff: u32, charge_window: u32, mode_max: u32 },
}

/// Finite-dimensional desk model: max total excitation energy, charge
/// window and the largest operator mode retained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct TruncationParams {
    pub cutoff: u32,
    pub charge_window: u32,
    pub mode_max: u32,
}

impl TruncationParams {
    pub fn new(cutoff: u32, charge_window: u32, mode_max: u32) -> Result<Self, FockError> {
        if charge_window < 1 || mode_max > cutoff.max(1) || cutoff > 60 {
            return Err(FockError::InvalidTruncation { cutoff, charge_window, mode_max });
        }
        Ok(TruncationParams { cutoff, charge_window, mode_max })
    }

    /// Keeps every mode the energy cutoff admits; the supercharge built
    /// with this choice is exactly energy-diagonal after squaring.
    pub fn full_modes(cutoff: u32, charge_window: u32) -> Self {
        TruncationParams { cutoff, charge_window, mode_max: cutoff.max(1) }
    }
}

/// Bosonic occupation: sorted (mode, multiplicity) pairs, no zeros.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct BosonOcc(Vec<(u32, u32)>);

impl BosonOcc {
    pub fn vacuum() -> Self {
        BosonOcc(Vec::new())
    }

    pub fn energy(&self) -> u32 {
        self.0.iter().map(|(m, c)| m * c).sum()
    }

    pub fn multiplicity(&self, mode: u32) -> u32 {
        self.0.iter().find(|(m, _)| *m == mode).map_or(0, |(_, c)| *c)
    }

    pub fn raised(&self, mode: u32) -> Self {
        let mut v = self.0.clone();
        match v.iter_mut().find(|(m, _)| *m == mode) {
            Some((_, c)) => *c += 1,
            None => {
                v.push((mode, 1));
                v.sort_unstable();
            }
        }
        BosonOcc(v)
    }

    pub fn lowered(&self, mode: u32) -> Option<Self> {
        let mut v = self.0.clone();
        let pos = v.iter().position(|(m, _)| *m == mode)?;
        if v[pos].1 == 1 {
            v.remove(pos);
        } else {
            v[pos].1 -= 1;
        }
        Some(BosonOcc(v))
    }

    /// All occupations with energy ≤ `budget`, by increasing smallest mode.
    fn enumerate(budget: u32) -> Vec<BosonOcc> {
        fn rec(budget: u32, min_mode: u32, acc: &mut Vec<(u32, u32)>, out: &mut Vec<BosonOcc>) {
            out.push(BosonOcc(acc.clone()));
            for mode in min_mode..=budget {
                let max_mult = budget / mode;
                for mult in 1..=max_mult {
                    acc.push((mode, mult));
                    rec(budget - mode * mult, mode + 1, acc, out);
                    acc.pop();
                }
            }
        }
        let mut out = Vec::new();
        rec(budget, 1, &mut Vec::new(), &mut out);
        out.sort();
        out
    }
}

/// Fermionic excitation masks with `Σ modes ≤ budget` (bit `m−1` = mode `m`).
fn fermion_masks(budget: u32) -> Vec<u64> {
    fn rec(budget: u32, mode: u32, acc: u64, out: &mut Vec<u64>) {
        if mode > budget {
            out.push(acc);
            return;
        }
        rec(budget, mode + 1, acc, out);
        rec(budget - mode, mode + 1, acc | (1u64 << (mode - 1)), out);
    }
    let mut out = Vec::new();
    rec(budget, 1, 0, &mut out);
    out.sort_unstable();
    out.dedup();
    out
}

fn fermion_energy(mask: u64) -> u32 {
    let mut e = 0u32;
    let mut rest = mask;
    while rest != 0 {
        let b = rest.trailing_zeros();
        e += b + 1;
        rest &= rest - 1;
    }
    e
}

/// Jordan–Wigner sign: parity of the occupied modes strictly below `mode`.
fn jw_sign(mask: u64, mode: u32) -> i64 {
    let below = mask & ((1u64 << (mode - 1)) - 1);
    if below.count_ones().is_multiple_of(2) {
        1
    } else {
        -1
    }
}

/// Basis state of the odd module: spinor excitations ⊗ charge-graded boson
/// state.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct OddState {
    pub charge: i32,
    pub fermions: u64,
    pub bosons: BosonOcc,
}

impl OddState {
    pub fn energy(&self) -> u32 {
        fermion_energy(self.fermions) + self.bosons.energy()
    }

    pub fn fermion_parity(&self) -> i64 {
        if self.fermions.count_ones().is_multiple_of(2) {
            1
        } else {
            -1
        }
    }

    /// Charge vacuum `η ⊗ S^m|0⟩`.
    pub fn charge_vacuum(charge: i32) -> Self {
        OddState { charge, fermions: 0, bosons: BosonOcc::vacuum() }
    }
}

/// Basis state of the even module: two Clifford families on a
/// two-dimensional vacuum ⊗ two charge-graded boson factors.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EvenState {
    pub e_charge: i32,
    pub f_charge: i32,
    /// 0 ↦ η₁, 1 ↦ η₂.
    pub vacuum: u8,
    pub fermions0: u64,
    pub fermions1: u64,
    pub e_bosons: BosonOcc,
    pub f_bosons: BosonOcc,
}

impl EvenState {
    pub fn energy(&self) -> u32 {
        fermion_energy(self.fermions0)
            + fermion_energy(self.fermions1)
            + self.e_bosons.energy()
            + self.f_bosons.energy()
    }

    pub fn fermion_count(&self) -> u32 {
        self.fermions0.count_ones() + self.fermions1.count_ones()
    }

    pub fn fermion_parity(&self) -> i64 {
        if self.fermion_count().is_multiple_of(2) {
            1
        } else {
            -1
        }
    }
}

/// Indexed odd-variant basis, charge-major with contiguous charge blocks.
#[derive(Debug, Clone)]
pub struct OddBasis {
    pub trunc: TruncationParams,
    states: Vec<OddState>,
    index: BTreeMap<OddState, usize>,
    blocks: Vec<(i32, Range<usize>)>,
}

impl OddBasis {
    pub fn build(trunc: TruncationParams) -> Self {
        let c = trunc.charge_window as i32;
        let mut states = Vec::new();
        let mut blocks = Vec::new();
        let masks = fermion_masks(trunc.cutoff);
        for charge in -c..=c {
            let start = states.len();
            let mut block: Vec<OddState> = Vec::new();
            for &fermions in &masks {
                let fe = fermion_energy(fermions);
                for bosons in BosonOcc::enumerate(trunc.cutoff - fe) {
                    block.push(OddState { charge, fermions, bosons });
                }
            }
            block.sort_by_key(|s| (s.energy(), s.fermions, s.bosons.clone()));
            states.extend(block);
            blocks.push((charge, start..states.len()));
        }
        let index = states.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
        OddBasis { trunc, states, index, blocks }
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[OddState] {
        &self.states
    }

    pub fn state(&self, i: usize) -> &OddState {
        &self.states[i]
    }

    pub fn index_of(&self, s: &OddState) -> Option<usize> {
        self.index.get(s).copied()
    }

    pub fn charge_blocks(&self) -> &[(i32, Range<usize>)] {
        &self.blocks
    }

    /// States far enough below the cutoffs that operator identities hold
    /// without truncation artifacts.
    pub fn interior_indices(&self, energy_margin: u32, charge_margin: u32) -> Vec<usize> {
        let e_max = self.trunc.cutoff.saturating_sub(energy_margin);
        let c_max = self.trunc.charge_window.saturating_sub(charge_margin) as i32;
        (0..self.dim())
            .filter(|&i| {
                let s = &self.states[i];
                s.energy() <= e_max && s.charge.abs() <= c_max
            })
            .collect()
    }

    /// Signed state counts per (charge, energy): the weight of `ψ_0 ⊗ 1`
    /// in the supertrace.
    pub fn supertrace_histogram(&self) -> BTreeMap<(i32, u32), i64> {
        let mut out = BTreeMap::new();
        for s in &self.states {
            *out.entry((s.charge, s.energy())).or_insert(0) += s.fermion_parity();
        }
        out.retain(|_, v| *v != 0);
        out
    }

    /// Human-readable label of a basis state, for matrix dumps.
    pub fn state_label(&self, i: usize) -> String {
        let s = &self.states[i];
        format!("m={} psi[{}] a[{}]", s.charge, fermion_label(s.fermions), boson_label(&s.bosons))
    }
}

fn fermion_label(mask: u64) -> String {
    (0..60)
        .filter(|b| mask >> b & 1 == 1)
        .map(|b| (b + 1).to_string())
        .collect::<Vec<_>>()
        .join(",")
}

fn boson_label(occ: &BosonOcc) -> String {
    occ.0.iter().map(|(m, c)| format!("{m}^{c}")).collect::<Vec<_>>().join(",")
}

/// Indexed even-variant basis, (e-charge, f-charge)-major.
#[derive(Debug, Clone)]
pub struct EvenBasis {
    pub trunc: TruncationParams,
    states: Vec<EvenState>,
    index: BTreeMap<EvenState, usize>,
    blocks: Vec<((i32, i32), Range<usize>)>,
}

impl EvenBasis {
    pub fn build(trunc: TruncationParams) -> Self {
        let c = trunc.charge_window as i32;
        let masks = fermion_masks(trunc.cutoff);
        let mut states = Vec::new();
        let mut blocks = Vec::new();
        for e_charge in -c..=c {
            for f_charge in -c..=c {
                let start = states.len();
                let mut block: Vec<EvenState> = Vec::new();
                for &fermions0 in &masks {
                    let e0 = fermion_energy(fermions0);
                    for &fermions1 in masks.iter().filter(|&&m| fermion_energy(m) + e0 <= trunc.cutoff)
                    {
                        let e01 = e0 + fermion_energy(fermions1);
                        for e_bosons in BosonOcc::enumerate(trunc.cutoff - e01) {
                            let e_all = e01 + e_bosons.energy();
                            for f_bosons in BosonOcc::enumerate(trunc.cutoff - e_all) {
                                for vacuum in 0..2u8 {
                                    block.push(EvenState {
                                        e_charge,
                                        f_charge,
                                        vacuum,
                                        fermions0,
                                        fermions1,
                                        e_bosons: e_bosons.clone(),
                                        f_bosons: f_bosons.clone(),
                                    });
                                }
                            }
                        }
                    }
                }
                block.sort_by_key(|s| {
                    (s.energy(), s.vacuum, s.fermions0, s.fermions1, s.e_bosons.clone(), s.f_bosons.clone())
                });
                states.extend(block);
                blocks.push(((e_charge, f_charge), start..states.len()));
            }
        }
        let index = states.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
        EvenBasis { trunc, states, index, blocks }
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[EvenState] {
        &self.states
    }

    pub fn state(&self, i: usize) -> &EvenState {
        &self.states[i]
    }

    pub fn index_of(&self, s: &EvenState) -> Option<usize> {
        self.index.get(s).copied()
    }

    pub fn charge_blocks(&self) -> &[((i32, i32), Range<usize>)] {
        &self.blocks
    }

    pub fn interior_indices(&self, energy_margin: u32, charge_margin: u32) -> Vec<usize> {
        let e_max = self.trunc.cutoff.saturating_sub(energy_margin);
        let c_max = self.trunc.charge_window.saturating_sub(charge_margin) as i32;
        (0..self.dim())
            .filter(|&i| {
                let s = &self.states[i];
                s.energy() <= e_max && s.e_charge.abs() <= c_max && s.f_charge.abs() <= c_max
            })
            .collect()
    }

    /// Signed counts per (e-charge, f-charge, energy) with the fermion
    /// parity weight of the graded supertrace.
    pub fn supertrace_histogram(&self) -> BTreeMap<(i32, i32, u32), i64> {
        let mut out = BTreeMap::new();
        for s in &self.states {
            *out.entry((s.e_charge, s.f_charge, s.energy())).or_insert(0) += s.fermion_parity();
        }
        out.retain(|_, v| *v != 0);
        out
    }

    /// Human-readable label of a basis state, for matrix dumps.
    pub fn state_label(&self, i: usize) -> String {
        let s = &self.states[i];
        format!(
            "eta{} me={} mf={} psi0[{}] psi1[{}] a[{}] b[{}]",
            s.vacuum + 1,
            s.e_charge,
            s.f_charge,
            fermion_label(s.fermions0),
            fermion_label(s.fermions1),
            boson_label(&s.e_bosons),
            boson_label(&s.f_bosons),
        )
    }
}

/// Mode operators of the odd module.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OddOp {
    /// Clifford generator `ψ_n` (`ψ_0` = fermion parity).
    Psi(i32),
    /// Loop-algebra generator `e_n` (`e_0` = charge).
    E(i32),
    /// Charge shift `S`.
    Shift,
    /// Charge shift inverse `S⁻¹`.
    ShiftInv,
}

/// Mode operators of the even module.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvenOp {
    Psi0(i32),
    Psi1(i32),
    E(i32),
    F(i32),
    /// `S ⊗ 1` on the e-factor.
    ShiftE,
    /// `1 ⊗ S` on the f-factor.
    ShiftF,
}

fn check_mode(n: i32, trunc: &TruncationParams) -> Result<(), FockError> {
    if n.unsigned_abs() > trunc.mode_max {
        return Err(FockError::ModeOutOfRange { mode: n, max: trunc.mode_max });
    }
    Ok(())
}

/// Exact matrix of an odd-module mode operator in the truncated basis.
pub fn odd_operator<S: RealScalar>(basis: &OddBasis, op: OddOp) -> Result<OpMatrix<S>, FockError> {
    let mut m = OpMatrix::zeros(basis.dim());
    match op {
        OddOp::Psi(0) => {
            for (j, s) in basis.states().iter().enumerate() {
                m.add_entry(j, j, S::from_ratio(s.fermion_parity(), 1));
            }
        }
        OddOp::Psi(n) => {
            check_mode(n, &basis.trunc)?;
            let mode = n.unsigned_abs();
            for (j, s) in basis.states().iter().enumerate() {
                let bit = 1u64 << (mode - 1);
                let target = if n > 0 {
                    if s.fermions & bit != 0 {
                        continue;
                    }
                    OddState { fermions: s.fermions | bit, ..s.clone() }
                } else {
                    if s.fermions & bit == 0 {
                        continue;
                    }
                    OddState { fermions: s.fermions & !bit, ..s.clone() }
                };
                if let Some(i) = basis.index_of(&target) {
                    let sign = jw_sign(s.fermions, mode);
                    let amp = S::sqrt_nat(2) * S::from_ratio(sign, 1);
                    m.add_entry(i, j, amp);
                }
            }
        }
        OddOp::E(0) => {
            for (j, s) in basis.states().iter().enumerate() {
                m.add_entry(j, j, S::from_ratio(s.charge as i64, 1));
            }
        }
        OddOp::E(n) => {
            check_mode(n, &basis.trunc)?;
            let mode = n.unsigned_abs();
            for (j, s) in basis.states().iter().enumerate() {
                if n > 0 {
                    let mult = s.bosons.multiplicity(mode);
                    let target = OddState { bosons: s.bosons.raised(mode), ..s.clone() };
                    if let Some(i) = basis.index_of(&target) {
                        m.add_entry(i, j, S::sqrt_nat(mode as u64 * (mult as u64 + 1)));
                    }
                } else if let Some(lowered) = s.bosons.lowered(mode) {
                    let mult = s.bosons.multiplicity(mode);
                    let target = OddState { bosons: lowered, ..s.clone() };
                    if let Some(i) = basis.index_of(&target) {
                        m.add_entry(i, j, S::sqrt_nat(mode as u64 * mult as u64));
                    }
                }
            }
        }
        OddOp::Shift | OddOp::ShiftInv => {
            let delta = if op == OddOp::Shift { 1 } else { -1 };
            for (j, s) in basis.states().iter().enumerate() {
                let target = OddState { charge: s.charge + delta, ..s.clone() };
                if let Some(i) = basis.index_of(&target) {
                    m.add_entry(i, j, S::from_ratio(1, 1));
                }
            }
        }
    }
    Ok(m)
}

/// Exact matrix of an even-module mode operator.
pub fn even_operator<S: RealScalar>(
    basis: &EvenBasis,
    op: EvenOp,
) -> Result<OpMatrix<CScalar<S>>, FockError> {
    let mut m = OpMatrix::zeros(basis.dim());
    match op {
        // ψ_0^0 = σ_x (−1)^f, ψ_0^1 = σ_y (−1)^f
        EvenOp::Psi0(0) | EvenOp::Psi1(0) => {
            for (j, s) in basis.states().iter().enumerate() {
                let target = EvenState { vacuum: 1 - s.vacuum, ..s.clone() };
                let i = basis.index_of(&target).expect("vacuum flip stays in basis");
                let parity = s.fermion_parity();
                let amp = if op == EvenOp::Psi0(0) {
                    CScalar::real(S::from_ratio(parity, 1))
                } else {
                    // σ_y: η1 ↦ i·η2, η2 ↦ −i·η1
                    let im = if s.vacuum == 0 { parity } else { -parity };
                    CScalar::new(S::zero(), S::from_ratio(im, 1))
                };
                m.add_entry(i, j, amp);
            }
        }
        EvenOp::Psi0(n) | EvenOp::Psi1(n) => {
            check_mode(n, &basis.trunc)?;
            let family1 = matches!(op, EvenOp::Psi1(_));
            let mode = n.unsigned_abs();
            let bit = 1u64 << (mode - 1);
            for (j, s) in basis.states().iter().enumerate() {
                let mask = if family1 { s.fermions1 } else { s.fermions0 };
                let target_mask = if n > 0 {
                    if mask & bit != 0 {
                        continue;
                    }
                    mask | bit
                } else {
                    if mask & bit == 0 {
                        continue;
                    }
                    mask & !bit
                };
                let target = if family1 {
                    EvenState { fermions1: target_mask, ..s.clone() }
                } else {
                    EvenState { fermions0: target_mask, ..s.clone() }
                };
                if let Some(i) = basis.index_of(&target) {
                    // family-1 generators anticommute past all of family 0
                    let mut sign = jw_sign(mask, mode);
                    if family1 && s.fermions0.count_ones() % 2 == 1 {
                        sign = -sign;
                    }
                    m.add_entry(i, j, CScalar::real(S::sqrt_nat(2) * S::from_ratio(sign, 1)));
                }
            }
        }
        EvenOp::E(0) => {
            for (j, s) in basis.states().iter().enumerate() {
                m.add_entry(j, j, CScalar::real(S::from_ratio(s.e_charge as i64, 1)));
            }
        }
        EvenOp::F(0) => {
            for (j, s) in basis.states().iter().enumerate() {
                m.add_entry(j, j, CScalar::real(S::from_ratio(s.f_charge as i64, 1)));
            }
        }
        EvenOp::E(n) | EvenOp::F(n) => {
            check_mode(n, &basis.trunc)?;
            let on_f = matches!(op, EvenOp::F(_));
            let mode = n.unsigned_abs();
            for (j, s) in basis.states().iter().enumerate() {
                let occ = if on_f { &s.f_bosons } else { &s.e_bosons };
                let (target_occ, amp_sq) = if n > 0 {
                    let mult = occ.multiplicity(mode);
                    (occ.raised(mode), mode as u64 * (mult as u64 + 1))
                } else {
                    let Some(lowered) = occ.lowered(mode) else { continue };
                    let mult = occ.multiplicity(mode);
                    (lowered, mode as u64 * mult as u64)
                };
                let target = if on_f {
                    EvenState { f_bosons: target_occ, ..s.clone() }
                } else {
                    EvenState { e_bosons: target_occ, ..s.clone() }
                };
                if let Some(i) = basis.index_of(&target) {
                    m.add_entry(i, j, CScalar::real(S::sqrt_nat(amp_sq)));
                }
            }
        }
        EvenOp::ShiftE | EvenOp::ShiftF => {
            let on_f = op == EvenOp::ShiftF;
            for (j, s) in basis.states().iter().enumerate() {
                let target = if on_f {
                    EvenState { f_charge: s.f_charge + 1, ..s.clone() }
                } else {
                    EvenState { e_charge: s.e_charge + 1, ..s.clone() }
                };
                if let Some(i) = basis.index_of(&target) {
                    m.add_entry(i, j, CScalar::real(S::from_ratio(1, 1)));
                }
            }
        }
    }
    Ok(m)
}

/// Chiral grading `Γ = σ_z·(−1)^f`: diagonal with entries ±1.
pub fn grading_operator<S: RealScalar>(basis: &EvenBasis) -> OpMatrix<CScalar<S>> {
    let mut m = OpMatrix::zeros(basis.dim());
    for (j, s) in basis.states().iter().enumerate() {
        let vac_sign = if s.vacuum == 0 { 1 } else { -1 };
        m.add_entry(j, j, CScalar::real(S::from_ratio(vac_sign * s.fermion_parity(), 1)));
    }
    m
}

/// State-level action of `ψ_n` on the spinor factor: `(target mask, sign)`;
/// `None` annihilates. `ψ_0` is handled by the caller.
fn psi_state_action(fermions: u64, n: i32) -> Option<(u64, i64)> {
    let mode = n.unsigned_abs();
    let bit = 1u64 << (mode - 1);
    let target = if n > 0 {
        if fermions & bit != 0 {
            return None;
        }
        fermions | bit
    } else {
        if fermions & bit == 0 {
            return None;
        }
        fermions & !bit
    };
    Some((target, jw_sign(fermions, mode)))
}

/// State-level action of `e_n` on a boson factor:
/// `(target occupation, amplitude² = |n|·(steps))`; `None` annihilates.
/// No cutoff is applied here — a bilinear `ψ ⊗ e` term never materializes
/// the intermediate, so only the final state is truncated.
fn boson_state_action(occ: &BosonOcc, n: i32) -> Option<(BosonOcc, u64)> {
    let mode = n.unsigned_abs();
    if n > 0 {
        let mult = occ.multiplicity(mode);
        Some((occ.raised(mode), mode as u64 * (mult as u64 + 1)))
    } else {
        let lowered = occ.lowered(mode)?;
        let mult = occ.multiplicity(mode);
        Some((lowered, mode as u64 * mult as u64))
    }
}

/// Odd supercharge `Q(φ) = Σ_k ψ_k ⊗ e_{−k} ± (φ/2π)·ψ_0 ⊗ 1`, modes
/// `|k| ≤ mode_max`. The parameter is passed as the dimensionless `φ/2π`.
/// Each bilinear term is applied state-level so the assembled matrix is
/// the exact compression of the untruncated operator, hence symmetric.
pub fn supercharge_odd<S: RealScalar>(
    basis: &OddBasis,
    phi_over_2pi: S,
    negative_flow: bool,
) -> OpMatrix<S> {
    let mode_max = basis.trunc.mode_max as i32;
    let mut q = OpMatrix::zeros(basis.dim());
    for (j, s) in basis.states().iter().enumerate() {
        for k in -mode_max..=mode_max {
            if k == 0 {
                // ψ_0 ⊗ e_0: parity times charge
                q.add_entry(j, j, S::from_ratio(s.fermion_parity() * s.charge as i64, 1));
                continue;
            }
            let Some((bosons, amp_sq)) = boson_state_action(&s.bosons, -k) else {
                continue;
            };
            let Some((fermions, sign)) = psi_state_action(s.fermions, k) else {
                continue;
            };
            let target = OddState { charge: s.charge, fermions, bosons };
            if let Some(i) = basis.index_of(&target) {
                let amp = S::sqrt_nat(2 * amp_sq) * S::from_ratio(sign, 1);
                q.add_entry(i, j, amp);
            }
        }
        let coeff = S::from_ratio(s.fermion_parity(), 1)
            * if negative_flow { -phi_over_2pi.clone() } else { phi_over_2pi.clone() };
        q.add_entry(j, j, coeff);
    }
    q.into_hermitian(0.0).expect("supercharge is exactly symmetric")
}

/// Even supercharge
/// `Q^e(s,φ) = Σ_k ψ⁰_k ⊗ e_{−k} + Σ_k ψ¹_k ⊗ f_{−k} + (s/2π)ψ⁰_0 ± (φ/2π)ψ¹_0`,
/// assembled state-level like the odd one.
pub fn supercharge_even<S: RealScalar>(
    basis: &EvenBasis,
    s_over_2pi: S,
    phi_over_2pi: S,
    negative_phi_flow: bool,
) -> OpMatrix<CScalar<S>> {
    let mode_max = basis.trunc.mode_max as i32;
    let mut q: OpMatrix<CScalar<S>> = OpMatrix::zeros(basis.dim());
    let phi_coeff = if negative_phi_flow { -phi_over_2pi } else { phi_over_2pi };
    for (j, s) in basis.states().iter().enumerate() {
        let parity = s.fermion_parity();
        for k in -mode_max..=mode_max {
            if k == 0 {
                // ψ⁰_0 ⊗ e_0 and the (s/2π)·ψ⁰_0 term: σ_x(−1)^f ⊗ (e_0 + s/2π)
                let flip = EvenState { vacuum: 1 - s.vacuum, ..s.clone() };
                let i = basis.index_of(&flip).expect("vacuum flip stays in basis");
                let e_part = S::from_ratio(s.e_charge as i64, 1) + s_over_2pi.clone();
                q.add_entry(i, j, CScalar::real(S::from_ratio(parity, 1) * e_part));
                // ψ¹_0 ⊗ f_0 and (φ/2π)·ψ¹_0: σ_y(−1)^f ⊗ (f_0 + φ/2π)
                let f_part = S::from_ratio(s.f_charge as i64, 1) + phi_coeff.clone();
                let im = if s.vacuum == 0 { parity } else { -parity };
                q.add_entry(
                    i,
                    j,
                    CScalar::new(S::zero(), S::from_ratio(im, 1) * f_part),
                );
                continue;
            }
            // ψ⁰_k ⊗ e_{−k}
            if let Some((e_bosons, amp_sq)) = boson_state_action(&s.e_bosons, -k) {
                if let Some((fermions0, sign)) = psi_state_action(s.fermions0, k) {
                    let target =
                        EvenState { fermions0, e_bosons, ..s.clone() };
                    if let Some(i) = basis.index_of(&target) {
                        let amp = S::sqrt_nat(2 * amp_sq) * S::from_ratio(sign, 1);
                        q.add_entry(i, j, CScalar::real(amp));
                    }
                }
            }
            // ψ¹_k ⊗ f_{−k}: family-1 anticommutes past all of family 0
            if let Some((f_bosons, amp_sq)) = boson_state_action(&s.f_bosons, -k) {
                if let Some((fermions1, mut sign)) = psi_state_action(s.fermions1, k) {
                    if s.fermions0.count_ones() % 2 == 1 {
                        sign = -sign;
                    }
                    let target =
                        EvenState { fermions1, f_bosons, ..s.clone() };
                    if let Some(i) = basis.index_of(&target) {
                        let amp = S::sqrt_nat(2 * amp_sq) * S::from_ratio(sign, 1);
                        q.add_entry(i, j, CScalar::real(amp));
                    }
                }
            }
        }
    }
    q.into_hermitian(0.0).expect("supercharge is exactly hermitian")
}

/// Closed-form diagonal of `Q(φ)²` on the truncated basis built with
/// `mode_max = cutoff`: `2·energy + (charge + φ/2π)²`.
pub fn odd_square_diagonal(basis: &OddBasis, phi_over_2pi: f64) -> Vec<f64> {
    basis
        .states()
        .iter()
        .map(|s| 2.0 * s.energy() as f64 + (s.charge as f64 + phi_over_2pi).powi(2))
        .collect()
}

/// Closed-form diagonal of `Q^e(s,φ)²`:
/// `2·energy + (e_charge + s/2π)² + (f_charge + φ/2π)²`.
pub fn even_square_diagonal(basis: &EvenBasis, s_over_2pi: f64, phi_over_2pi: f64) -> Vec<f64> {
    basis
        .states()
        .iter()
        .map(|s| {
            2.0 * s.energy() as f64
                + (s.e_charge as f64 + s_over_2pi).powi(2)
                + (s.f_charge as f64 + phi_over_2pi).powi(2)
        })
        .collect()
}

/// Everything a spectral-flow run over the odd supercharge family needs:
/// the family closure, the seam gluing, the invariant charge blocks and
/// the columns on which the seam conjugation is exact.
pub struct OddFlowSetup {
    pub basis: OddBasis,
    pub gluing: OpMatrix<f64>,
    pub blocks: Vec<Range<usize>>,
    pub seam_columns: Vec<usize>,
    pub negative: bool,
}

impl OddFlowSetup {
    /// Standard family `Q(φ) = Σψ_k⊗e_{−k} + (φ/2π)ψ_0`, glued by `S`.
    pub fn standard(trunc: TruncationParams) -> Self {
        Self::build(trunc, false)
    }

    /// Reversed-flow family `Q(φ) = Σψ_k⊗e_{−k} − (φ/2π)ψ_0`, glued by `S⁻¹`.
    pub fn negative(trunc: TruncationParams) -> Self {
        Self::build(trunc, true)
    }

    fn build(trunc: TruncationParams, negative: bool) -> Self {
        let basis = OddBasis::build(trunc);
        let gluing = odd_operator::<f64>(&basis, if negative { OddOp::ShiftInv } else { OddOp::Shift })
            .expect("shift is mode-independent");
        let blocks = basis.charge_blocks().iter().map(|(_, r)| r.clone()).collect();
        let seam_columns = basis.interior_indices(0, 1);
        OddFlowSetup { basis, gluing, blocks, seam_columns, negative }
    }

    pub fn family(&self, phi: f64) -> OpMatrix<f64> {
        supercharge_odd::<f64>(&self.basis, phi / (2.0 * std::f64::consts::PI), self.negative)
    }
}

/// One checked (anti)commutation relation.
#[derive(Debug, Clone, serde::Serialize)]
pub struct RelationEntry {
    pub relation: String,
    pub max_violation: f64,
    /// Set on the exact-scalar path: the violation is structurally zero.
    pub exact_zero: Option<bool>,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct RelationReport {
    pub entries: Vec<RelationEntry>,
}

impl RelationReport {
    pub fn max_violation(&self) -> f64 {
        self.entries.iter().map(|e| e.max_violation).fold(0.0, f64::max)
    }

    pub fn all_exact(&self) -> bool {
        self.entries.iter().all(|e| e.exact_zero == Some(true))
    }
}

fn violation_entry<T: Scalar>(name: String, residual: &OpMatrix<T>, interior: &[usize]) -> RelationEntry {
    let max_violation = residual.max_abs_on_columns(interior);
    let exact_zero = if T::EXACT { Some(residual.is_zero_on_columns(interior)) } else { None };
    RelationEntry { relation: name, max_violation, exact_zero }
}

/// Checks every retained (anti)commutation relation of the odd module on
/// the interior sector: `{ψ_n, ψ_m} = 2δ_{n,−m}`, `[e_n, e_m] = −n δ_{n,−m}`,
/// the shift covariance `S e_0 S⁻¹ = e_0 − 1`, `S e_n S⁻¹ = e_n`, and
/// entrywise adjointness of the mode pairs.
pub fn relation_check_odd<S: RealScalar>(basis: &OddBasis) -> Result<RelationReport, FockError> {
    let k = basis.trunc.mode_max as i32;
    let mut entries = Vec::new();
    let modes: Vec<i32> = (-k..=k).collect();

    let psi: BTreeMap<i32, OpMatrix<S>> =
        modes.iter().map(|&n| (n, odd_operator(basis, OddOp::Psi(n)).unwrap())).collect();
    let e: BTreeMap<i32, OpMatrix<S>> =
        modes.iter().map(|&n| (n, odd_operator(basis, OddOp::E(n)).unwrap())).collect();

    for &n in &modes {
        for &m in &modes {
            let margin = (n.unsigned_abs() + m.unsigned_abs()).max(1);
            let interior = basis.interior_indices(margin, 0);
            let mut r = psi[&n].anticommutator(&psi[&m]);
            let delta = if n == -m { 2 } else { 0 };
            if delta != 0 {
                r = r.sub(&OpMatrix::identity(basis.dim()).scale(&S::from_ratio(delta, 1)));
            }
            entries.push(violation_entry(format!("{{psi_{n}, psi_{m}}} - 2δ"), &r, &interior));

            let mut r = e[&n].commutator(&e[&m]);
            if n == -m && n != 0 {
                r = r.add(&OpMatrix::identity(basis.dim()).scale(&S::from_ratio(n as i64, 1)));
            }
            entries.push(violation_entry(format!("[e_{n}, e_{m}] + nδ"), &r, &interior));
        }
    }

    // adjointness is entrywise on the whole truncated space
    for &n in &modes {
        let r = psi[&n].adjoint().sub(&psi[&-n]);
        entries.push(violation_entry(format!("psi_{n}† - psi_{}", -n), &r, &(0..basis.dim()).collect::<Vec<_>>()));
        let r = e[&n].adjoint().sub(&e[&-n]);
        entries.push(violation_entry(format!("e_{n}† - e_{}", -n), &r, &(0..basis.dim()).collect::<Vec<_>>()));
    }

    // shift covariance on the charge interior
    let shift = odd_operator::<S>(basis, OddOp::Shift)?;
    let shift_inv = odd_operator::<S>(basis, OddOp::ShiftInv)?;
    let interior_c = basis.interior_indices(0, 1);
    let conj = shift.mul(&e[&0]).mul(&shift_inv);
    let r = conj.sub(&e[&0].sub(&OpMatrix::identity(basis.dim())));
    entries.push(violation_entry("S e_0 S⁻¹ - (e_0 - 1)".into(), &r, &interior_c));
    for &n in modes.iter().filter(|&&n| n != 0) {
        let margin = n.unsigned_abs();
        let interior = basis.interior_indices(margin, 1);
        let r = shift.mul(&e[&n]).mul(&shift_inv).sub(&e[&n]);
        entries.push(violation_entry(format!("S e_{n} S⁻¹ - e_{n}"), &r, &interior));
    }

    Ok(RelationReport { entries })
}

/// Even-module relations: `{ψ^i_n, ψ^j_m} = 2δ^{ij}δ_{n,−m}`,
/// `[e_n, f_m] = 0`, both loop-algebra brackets, shift covariance on each
/// factor, and the grading properties `Γ² = 1`, `ΓQ-odd-generators`.
pub fn relation_check_even<S: RealScalar>(basis: &EvenBasis) -> Result<RelationReport, FockError> {
    let k = basis.trunc.mode_max as i32;
    let mut entries = Vec::new();
    let modes: Vec<i32> = (-k..=k).collect();

    let psi0: BTreeMap<i32, _> =
        modes.iter().map(|&n| (n, even_operator::<S>(basis, EvenOp::Psi0(n)).unwrap())).collect();
    let psi1: BTreeMap<i32, _> =
        modes.iter().map(|&n| (n, even_operator::<S>(basis, EvenOp::Psi1(n)).unwrap())).collect();
    let e: BTreeMap<i32, _> =
        modes.iter().map(|&n| (n, even_operator::<S>(basis, EvenOp::E(n)).unwrap())).collect();
    let f: BTreeMap<i32, _> =
        modes.iter().map(|&n| (n, even_operator::<S>(basis, EvenOp::F(n)).unwrap())).collect();

    let id = OpMatrix::<CScalar<S>>::identity(basis.dim());

    for &n in &modes {
        for &m in &modes {
            let margin = (n.unsigned_abs() + m.unsigned_abs()).max(1);
            let interior = basis.interior_indices(margin, 0);

            for (fam_a, fam_b, name, a, b) in [
                (0, 0, "psi0/psi0", &psi0, &psi0),
                (1, 1, "psi1/psi1", &psi1, &psi1),
                (0, 1, "psi0/psi1", &psi0, &psi1),
            ] {
                let mut r = a[&n].anticommutator(&b[&m]);
                if fam_a == fam_b && n == -m {
                    r = r.sub(&id.scale(&CScalar::from_ratio(2, 1)));
                }
                entries.push(violation_entry(
                    format!("{{{name}: n={n}, m={m}}} - 2δδ"),
                    &r,
                    &interior,
                ));
            }

            let mut r = e[&n].commutator(&e[&m]);
            if n == -m && n != 0 {
                r = r.add(&id.scale(&CScalar::from_ratio(n as i64, 1)));
            }
            entries.push(violation_entry(format!("[e_{n}, e_{m}] + nδ"), &r, &interior));

            let mut r = f[&n].commutator(&f[&m]);
            if n == -m && n != 0 {
                r = r.add(&id.scale(&CScalar::from_ratio(n as i64, 1)));
            }
            entries.push(violation_entry(format!("[f_{n}, f_{m}] + nδ"), &r, &interior));

            let r = e[&n].commutator(&f[&m]);
            entries.push(violation_entry(format!("[e_{n}, f_{m}]"), &r, &interior));
        }
    }

    let all: Vec<usize> = (0..basis.dim()).collect();
    for &n in &modes {
        let r = psi0[&n].adjoint().sub(&psi0[&-n]);
        entries.push(violation_entry(format!("psi0_{n}† - psi0_{}", -n), &r, &all));
        let r = psi1[&n].adjoint().sub(&psi1[&-n]);
        entries.push(violation_entry(format!("psi1_{n}† - psi1_{}", -n), &r, &all));
    }

    // shift covariance per factor
    let shift_f = even_operator::<S>(basis, EvenOp::ShiftF)?;
    let interior_c = basis.interior_indices(0, 1);
    // build S⁻¹ on the f-factor
    let mut shift_f_inv = OpMatrix::zeros(basis.dim());
    for (j, s) in basis.states().iter().enumerate() {
        let target = EvenState { f_charge: s.f_charge - 1, ..s.clone() };
        if let Some(i) = basis.index_of(&target) {
            shift_f_inv.add_entry(i, j, CScalar::from_ratio(1, 1));
        }
    }
    let r = shift_f.mul(&f[&0]).mul(&shift_f_inv).sub(&f[&0].sub(&id));
    entries.push(violation_entry("S_f f_0 S_f⁻¹ - (f_0 - 1)".into(), &r, &interior_c));
    let r = shift_f.mul(&e[&0]).mul(&shift_f_inv).sub(&e[&0]);
    entries.push(violation_entry("S_f e_0 S_f⁻¹ - e_0".into(), &r, &interior_c));

    // grading
    let gamma = grading_operator::<S>(basis);
    let r = gamma.mul(&gamma).sub(&id);
    entries.push(violation_entry("Γ² - 1".into(), &r, &all));
    for &n in &modes {
        let interior = basis.interior_indices(n.unsigned_abs().max(1), 0);
        let r = gamma.anticommutator(&psi0[&n]);
        entries.push(violation_entry(format!("{{Γ, psi0_{n}}}"), &r, &interior));
        let r = gamma.anticommutator(&psi1[&n]);
        entries.push(violation_entry(format!("{{Γ, psi1_{n}}}"), &r, &interior));
    }

    Ok(RelationReport { entries })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::SqrtRat;

    fn series_product(a: &[i64], b: &[i64], upto: usize) -> Vec<i64> {
        let mut out = vec![0i64; upto + 1];
        for (i, x) in a.iter().enumerate().take(upto + 1) {
            for (j, y) in b.iter().enumerate() {
                if i + j <= upto {
                    out[i + j] += x * y;
                }
            }
        }
        out
    }

    /// Independent generating-function oracle: coefficients of
    /// `∏_{j≥1}(1+q^j) · ∏_{j≥1}(1−q^j)^{−1}` up to `q^upto`.
    fn boson_fermion_counts(upto: usize) -> Vec<i64> {
        let mut fermi = vec![0i64; upto + 1];
        fermi[0] = 1;
        for j in 1..=upto {
            let mut factor = vec![0i64; upto + 1];
            factor[0] = 1;
            if j <= upto {
                factor[j] = 1;
            }
            fermi = series_product(&fermi, &factor, upto);
        }
        let mut bose = vec![0i64; upto + 1];
        bose[0] = 1;
        for j in 1..=upto {
            // 1/(1−q^j) = 1 + q^j + q^{2j} + …
            let mut factor = vec![0i64; upto + 1];
            let mut p = 0;
            while p <= upto {
                factor[p] = 1;
                p += j;
            }
            bose = series_product(&bose, &factor, upto);
        }
        series_product(&fermi, &bose, upto)
    }

    #[test]
    fn odd_basis_vacuum_only_at_zero_cutoff() {
        let basis = OddBasis::build(TruncationParams::new(0, 1, 0).unwrap());
        assert_eq!(basis.dim(), 3);
        for s in basis.states() {
            assert_eq!(s.energy(), 0);
        }
        let charges: Vec<i32> = basis.states().iter().map(|s| s.charge).collect();
        assert_eq!(charges, vec![-1, 0, 1]);
    }

    #[test]
    fn odd_basis_counts_match_generating_function() {
        let trunc = TruncationParams::full_modes(6, 0);
        let basis = OddBasis::build(trunc);
        let counts = boson_fermion_counts(6);
        let expected: i64 = counts.iter().sum();
        assert_eq!(basis.dim() as i64, expected);

        // per-energy sector counts
        for energy in 0..=6u32 {
            let at_energy =
                basis.states().iter().filter(|s| s.energy() == energy).count() as i64;
            assert_eq!(at_energy, counts[energy as usize], "sector {energy}");
        }
    }

    #[test]
    fn even_basis_vacuum_dimension() {
        let basis = EvenBasis::build(TruncationParams::new(0, 1, 0).unwrap());
        // 2 vacuum labels × 3 e-charges × 3 f-charges
        assert_eq!(basis.dim(), 18);
    }

    #[test]
    fn psi0_is_identity_on_vacuum_and_parity_elsewhere() {
        let basis = OddBasis::build(TruncationParams::full_modes(4, 1));
        let psi0 = odd_operator::<f64>(&basis, OddOp::Psi(0)).unwrap();
        let vac = basis.index_of(&OddState::charge_vacuum(0)).unwrap();
        assert_eq!(psi0.entry(vac, vac), 1.0);
        for (i, s) in basis.states().iter().enumerate() {
            assert_eq!(psi0.entry(i, i), s.fermion_parity() as f64);
        }
    }

    #[test]
    fn shift_conjugates_charge() {
        let basis = OddBasis::build(TruncationParams::full_modes(2, 3));
        let s = odd_operator::<SqrtRat>(&basis, OddOp::Shift).unwrap();
        let s_inv = odd_operator::<SqrtRat>(&basis, OddOp::ShiftInv).unwrap();
        let e0 = odd_operator::<SqrtRat>(&basis, OddOp::E(0)).unwrap();
        let conj = s.mul(&e0).mul(&s_inv);
        let expected = e0.sub(&OpMatrix::identity(basis.dim()));
        let interior = basis.interior_indices(0, 1);
        assert!(conj.sub(&expected).is_zero_on_columns(&interior));
    }

    #[test]
    fn odd_relations_exact_at_small_cutoff() {
        let basis = OddBasis::build(TruncationParams::new(4, 2, 2).unwrap());
        let report = relation_check_odd::<SqrtRat>(&basis).unwrap();
        assert!(report.all_exact(), "violations: {:#?}", report
            .entries
            .iter()
            .filter(|e| e.exact_zero != Some(true))
            .collect::<Vec<_>>());
        assert_eq!(report.max_violation(), 0.0);
    }

    #[test]
    fn even_relations_exact_at_small_cutoff() {
        let basis = EvenBasis::build(TruncationParams::new(3, 1, 1).unwrap());
        let report = relation_check_even::<SqrtRat>(&basis).unwrap();
        assert!(report.all_exact(), "violations: {:#?}", report
            .entries
            .iter()
            .filter(|e| e.exact_zero != Some(true))
            .collect::<Vec<_>>());
    }

    #[test]
    fn grading_examples() {
        let basis = EvenBasis::build(TruncationParams::new(2, 1, 1).unwrap());
        let gamma = grading_operator::<f64>(&basis);
        // Γ η1 = +η1
        let eta1 = EvenState {
            e_charge: 0,
            f_charge: 0,
            vacuum: 0,
            fermions0: 0,
            fermions1: 0,
            e_bosons: BosonOcc::vacuum(),
            f_bosons: BosonOcc::vacuum(),
        };
        let i1 = basis.index_of(&eta1).unwrap();
        assert_eq!(gamma.entry(i1, i1), CScalar::real(1.0));
        // one ψ^0_1 excitation on η1 flips the sign
        let excited = EvenState { fermions0: 1, ..eta1.clone() };
        let i2 = basis.index_of(&excited).unwrap();
        assert_eq!(gamma.entry(i2, i2), CScalar::real(-1.0));
        // η2 with one excitation is back to +1
        let e2 = EvenState { vacuum: 1, fermions0: 1, ..eta1 };
        let i3 = basis.index_of(&e2).unwrap();
        assert_eq!(gamma.entry(i3, i3), CScalar::real(1.0));
    }

    #[test]
    fn odd_supercharge_square_is_energy_diagonal() {
        // with mode_max = cutoff the square is diagonal on the whole basis
        let basis = OddBasis::build(TruncationParams::full_modes(4, 2));
        let phi_over_2pi = 0.3;
        let q = supercharge_odd::<f64>(&basis, phi_over_2pi, false);
        let q2 = q.mul(&q);
        let diag = odd_square_diagonal(&basis, phi_over_2pi);
        for (i, d) in diag.iter().enumerate() {
            for (j, v) in q2.row(i) {
                if i == j {
                    assert!((v - d).abs() < 1e-12, "diag at {i}");
                } else {
                    assert!(v.abs() < 1e-12, "off-diagonal at ({i},{j})");
                }
            }
        }
    }

    #[test]
    fn odd_supercharge_square_identity_exact_on_interior() {
        // rational parameter, exact scalar, partial mode range: the identity
        // Q² = l_0^s + l_0^e + (e_0 + φ/2π)² holds exactly on the interior
        let basis = OddBasis::build(TruncationParams::new(4, 2, 2).unwrap());
        let q = supercharge_odd::<SqrtRat>(&basis, SqrtRat::from_ratio(1, 3), false);
        let q2 = q.mul(&q);
        let mut expected = OpMatrix::<SqrtRat>::zeros(basis.dim());
        for (i, s) in basis.states().iter().enumerate() {
            let charge_term = SqrtRat::from_ratio(s.charge as i64, 1) + SqrtRat::from_ratio(1, 3);
            let val = SqrtRat::from_ratio(2 * s.energy() as i64, 1)
                + charge_term.clone() * charge_term;
            expected.add_entry(i, i, val);
        }
        let interior = basis.interior_indices(2 * basis.trunc.mode_max, 0);
        assert!(!interior.is_empty());
        assert!(q2.sub(&expected).is_zero_on_columns(&interior));
    }

    #[test]
    fn even_supercharge_anticommutes_with_grading() {
        let basis = EvenBasis::build(TruncationParams::new(3, 1, 1).unwrap());
        let q = supercharge_even::<f64>(&basis, 0.2, 0.7, false);
        let gamma = grading_operator::<f64>(&basis);
        let anti = gamma.mul(&q).add(&q.mul(&gamma));
        assert!(anti.max_abs() < 1e-14);
    }

    #[test]
    fn even_supercharge_square_is_energy_diagonal() {
        let basis = EvenBasis::build(TruncationParams::full_modes(3, 1));
        let (sb, pb) = (0.25, 0.6);
        let q = supercharge_even::<f64>(&basis, sb, pb, false);
        let q2 = q.mul(&q);
        let diag = even_square_diagonal(&basis, sb, pb);
        for (i, d) in diag.iter().enumerate() {
            for (j, v) in q2.row(i) {
                if i == j {
                    assert!((v.re - d).abs() < 1e-12 && v.im.abs() < 1e-12);
                } else {
                    assert!(v.abs_f64() < 1e-12, "off-diagonal at ({i},{j})");
                }
            }
        }
    }

    #[test]
    fn even_shift_covariance_matches_phi_translation() {
        // (1⊗S_f) Q^e(s,φ) (1⊗S_f)⁻¹ = Q^e(s, φ − 2π) on the interior
        let basis = EvenBasis::build(TruncationParams::new(2, 2, 1).unwrap());
        let (sb, pb) = (0.3, 0.45);
        let q = supercharge_even::<f64>(&basis, sb, pb, false);
        let q_shifted = supercharge_even::<f64>(&basis, sb, pb - 1.0, false);
        let shift = even_operator::<f64>(&basis, EvenOp::ShiftF).unwrap();
        let mut shift_inv = OpMatrix::zeros(basis.dim());
        for (j, s) in basis.states().iter().enumerate() {
            let t = EvenState { f_charge: s.f_charge - 1, ..s.clone() };
            if let Some(i) = basis.index_of(&t) {
                shift_inv.add_entry(i, j, CScalar::real(1.0));
            }
        }
        let conj = shift.mul(&q).mul(&shift_inv);
        let interior = basis.interior_indices(basis.trunc.mode_max, 1);
        assert!(conj.sub(&q_shifted).max_abs_on_columns(&interior) < 1e-12);
    }

    #[test]
    fn supercharge_preserves_and_is_diagonal_on_charge_vacua() {
        // on the kernel of l_0^s + l_0^e the supercharge reduces to
        // ψ_0 ⊗ (e_0 + φ/2π): eigenvalues are exactly m + φ/2π
        let basis = OddBasis::build(TruncationParams::full_modes(4, 3));
        let u = 0.37;
        let q = supercharge_odd::<f64>(&basis, u, false);
        let p_indices: Vec<usize> = (-3..=3)
            .map(|m| basis.index_of(&OddState::charge_vacuum(m)).unwrap())
            .collect();
        for (slot, &i) in p_indices.iter().enumerate() {
            let mut v = vec![0.0; basis.dim()];
            v[i] = 1.0;
            let qv = q.apply(&v);
            let expected = (slot as f64 - 3.0) + u;
            for (j, x) in qv.iter().enumerate() {
                let want = if j == i { expected } else { 0.0 };
                assert!((x - want).abs() < 1e-14, "component {j}");
            }
        }
    }

    #[test]
    fn supercharge_kernel_at_zero_parameter() {
        // Q(0) annihilates the neutral vacuum
        let basis = OddBasis::build(TruncationParams::full_modes(3, 2));
        let q = supercharge_odd::<f64>(&basis, 0.0, false);
        let vac = basis.index_of(&OddState::charge_vacuum(0)).unwrap();
        let mut v = vec![0.0; basis.dim()];
        v[vac] = 1.0;
        let qv = q.apply(&v);
        assert!(qv.iter().all(|x| x.abs() < 1e-14));
    }

    #[test]
    fn supertrace_histogram_collapses_to_charge_vacua() {
        // boson/fermion cancellation: signed counts vanish except at E = 0
        let basis = OddBasis::build(TruncationParams::full_modes(6, 2));
        let hist = basis.supertrace_histogram();
        for ((charge, energy), count) in hist {
            assert_eq!(energy, 0, "nonzero signed count at E={energy} (charge {charge})");
            assert_eq!(count, 1);
        }
    }

    #[test]
    fn even_supertrace_histogram_collapses() {
        let basis = EvenBasis::build(TruncationParams::full_modes(4, 1));
        for ((me, mf, energy), count) in basis.supertrace_histogram() {
            assert_eq!(energy, 0, "nonzero signed count at ({me},{mf},{energy})");
            assert_eq!(count, 2);
        }
    }

    #[test]
    fn mode_out_of_range_is_rejected() {
        let basis = OddBasis::build(TruncationParams::new(4, 1, 2).unwrap());
        assert!(matches!(
            odd_operator::<f64>(&basis, OddOp::Psi(3)),
            Err(FockError::ModeOutOfRange { mode: 3, max: 2 })
        ));
    }
}
