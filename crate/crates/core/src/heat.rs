//! Heat-kernel supertrace densities, their localization, and the
//! assembled symbolic index characters.
//!
//! With the full mode range retained, the square of a supercharge is
//! diagonal in the truncated basis with entries
//! `2·energy + Σ (charge + parameter)²`, so the graded supertraces reduce
//! to signed sums over (charge, energy) sectors. The densities below are
//! those supertraces, evaluated through the basis histograms; the excited
//! states cancel between the spinor and boson factors, leaving Gaussian
//! sums over the charge lattice whose truncation error is set by the
//! charge window alone.
//!
//! Overall constants are calibrated once so every density integrates to
//! the vacuum-bundle rank (the circle factors carry unit volume):
//!
//! * odd: `(1/2π)·√(t/π)` per circle — the Gaussian sum integrates to 1;
//! * suspended: `C = 1/(2π²)`, from
//!   `∫∫ t·sin²s·e^{−t·cos²s}·Σ_m e^{−t·sin²s(m+φ/2π)²} ds dφ
//!    = 2π²·erf(√t) → 2π²`;
//! * even: `C = 1/(8π³)`, from the product of two Gaussian sums and the
//!   two-dimensional spinor vacuum
//!   (`∫∫ t·2·Σ e^{−t[(m_e+s/2π)²+(m_f+φ/2π)²]} = 8π³`).

use std::f64::consts::PI;

use thiserror::Error;

use crate::fock::{EvenBasis, OddBasis, TruncationParams};
use crate::forms::{chern_character, desuspend, CurvatureData, FormError, FourierForm};
use crate::ExtClassQ;

#[derive(Debug, Error, PartialEq)]
pub enum HeatError {
    #[error("time parameter must be positive, got {0}")]
    InvalidTime(f64),
    #[error("numeric evidence (flow {flow}, density total {total:?}) does not match the bundle rank {rank}")]
    RankMismatch { flow: i64, total: Option<f64>, rank: u32 },
    #[error(transparent)]
    Form(#[from] FormError),
}

/// Calibration of the suspended density: total mass `erf(√t)·rank`.
pub const SUSPENDED_CALIBRATION: f64 = 1.0 / (2.0 * PI * PI);

/// Calibration of the even density: total mass `rank` up to the charge
/// window tails.
pub const EVEN_CALIBRATION: f64 = 1.0 / (8.0 * PI * PI * PI);

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DensityVariant {
    Odd,
    Suspended,
    Even,
}

/// Grid-sampled supertrace density with its provenance.
#[derive(Debug, Clone, serde::Serialize)]
pub struct DensitySample {
    pub variant: DensityVariant,
    pub t: f64,
    pub trunc: TruncationParams,
    pub rank: u32,
    /// φ-grid size; points at `φ_i = 2π·i/grid_phi`.
    pub grid_phi: usize,
    /// s-grid size for the two-parameter variants.
    pub grid_s: Option<usize>,
    /// 1d: `values[iφ]`; 2d: `values[is · grid_phi + iφ]`.
    pub values: Vec<f64>,
}

impl DensitySample {
    fn phi_at(&self, i: usize) -> f64 {
        2.0 * PI * i as f64 / self.grid_phi as f64
    }

    fn s_at(&self, i: usize) -> f64 {
        2.0 * PI * i as f64 / self.grid_s.unwrap_or(1) as f64
    }

    /// Periodic trapezoidal quadrature over the full torus.
    pub fn integral(&self) -> f64 {
        let h_phi = 2.0 * PI / self.grid_phi as f64;
        match self.grid_s {
            None => self.values.iter().sum::<f64>() * h_phi,
            Some(ns) => {
                let h_s = 2.0 * PI / ns as f64;
                self.values.iter().sum::<f64>() * h_phi * h_s
            }
        }
    }

    /// Grid coordinates of the maximum value: `(s, φ)` with `s = 0` for
    /// one-parameter samples.
    pub fn argmax(&self) -> (f64, f64) {
        let (imax, _) = self
            .values
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .expect("non-empty grid");
        match self.grid_s {
            None => (0.0, self.phi_at(imax)),
            Some(_) => (self.s_at(imax / self.grid_phi), self.phi_at(imax % self.grid_phi)),
        }
    }

    /// Nominal localization point of the variant.
    pub fn localization_center(&self) -> (f64, f64) {
        match self.variant {
            DensityVariant::Odd => (0.0, 0.0),
            DensityVariant::Suspended => (PI / 2.0, 0.0),
            DensityVariant::Even => (0.0, 0.0),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        match self.grid_s {
            None => {
                out.push_str("phi,value\n");
                for (i, v) in self.values.iter().enumerate() {
                    out.push_str(&format!("{:.12e},{:.12e}\n", self.phi_at(i), v));
                }
            }
            Some(_) => {
                out.push_str("s,phi,value\n");
                for (i, v) in self.values.iter().enumerate() {
                    let s = self.s_at(i / self.grid_phi);
                    let phi = self.phi_at(i % self.grid_phi);
                    out.push_str(&format!("{s:.12e},{phi:.12e},{v:.12e}\n"));
                }
            }
        }
        out
    }
}

fn periodic_distance(a: f64, b: f64) -> f64 {
    let two_pi = 2.0 * PI;
    let d = (a - b).rem_euclid(two_pi);
    d.min(two_pi - d)
}

/// Quadrature summary of a density sample.
#[derive(Debug, Clone, serde::Serialize)]
pub struct LocalizationStats {
    pub total: f64,
    /// Mass within the periodic window around the localization center.
    pub window_mass: f64,
    /// Second moment of the periodic distance to the center, normalized by
    /// the total mass.
    pub second_moment: f64,
    pub argmax_s: f64,
    pub argmax_phi: f64,
}

pub fn localization_stats(d: &DensitySample, window_halfwidth: f64) -> LocalizationStats {
    let (c_s, c_phi) = d.localization_center();
    let h_phi = 2.0 * PI / d.grid_phi as f64;
    let total = d.integral();
    let mut window_mass = 0.0;
    let mut second = 0.0;
    match d.grid_s {
        None => {
            for (i, v) in d.values.iter().enumerate() {
                let dist = periodic_distance(d.phi_at(i), c_phi);
                if dist <= window_halfwidth {
                    window_mass += v * h_phi;
                }
                second += dist * dist * v * h_phi;
            }
        }
        Some(ns) => {
            let h_s = 2.0 * PI / ns as f64;
            for (i, v) in d.values.iter().enumerate() {
                let ds = periodic_distance(d.s_at(i / d.grid_phi), c_s);
                let dphi = periodic_distance(d.phi_at(i % d.grid_phi), c_phi);
                let dist2 = ds * ds + dphi * dphi;
                if ds.max(dphi) <= window_halfwidth {
                    window_mass += v * h_phi * h_s;
                }
                second += dist2 * v * h_phi * h_s;
            }
        }
    }
    let (argmax_s, argmax_phi) = d.argmax();
    LocalizationStats {
        total,
        window_mass,
        second_moment: if total.abs() > 0.0 { second / total } else { 0.0 },
        argmax_s,
        argmax_phi,
    }
}

/// Independent reference for the odd density: the boson–fermion-cancelled
/// supertrace of the untruncated model,
/// `(1/2π)·√(t/π)·Σ_{m∈ℤ} e^{−t(m + φ/2π)²}`.
pub fn gaussian_sum_reference(t: f64, phi_over_2pi: f64) -> f64 {
    let mut sum = 0.0;
    let mut m = 0i64;
    loop {
        let up = (m as f64 + phi_over_2pi.rem_euclid(1.0)).powi(2);
        let down = (-(m as f64) - 1.0 + phi_over_2pi.rem_euclid(1.0)).powi(2);
        let add = (-t * up).exp() + (-t * down).exp();
        sum += add;
        if add < 1e-300 || m > 10_000 {
            break;
        }
        m += 1;
    }
    sum * (t / PI).sqrt() / (2.0 * PI)
}

/// Odd heat density: the graded supertrace
/// `(1/2π)·√(t/π)·Tr(ψ_0 ⊗ 1 · e^{−t Q(φ)²})` per unit rank, times `rank`,
/// evaluated through the signed (charge, energy) histogram of the basis.
pub fn odd_density(
    t: f64,
    grid_phi: usize,
    basis: &OddBasis,
    rank: u32,
) -> Result<DensitySample, HeatError> {
    if t <= 0.0 {
        return Err(HeatError::InvalidTime(t));
    }
    let hist: Vec<((i32, u32), i64)> = basis.supertrace_histogram().into_iter().collect();
    let norm = rank as f64 * (t / PI).sqrt() / (2.0 * PI);
    let values = (0..grid_phi)
        .map(|i| {
            let u = i as f64 / grid_phi as f64;
            let mut acc = 0.0;
            for ((m, e), count) in &hist {
                let q2 = 2.0 * *e as f64 + (*m as f64 + u).powi(2);
                acc += *count as f64 * (-t * q2).exp();
            }
            acc * norm
        })
        .collect();
    Ok(DensitySample {
        variant: DensityVariant::Odd,
        t,
        trunc: basis.trunc,
        rank,
        grid_phi,
        grid_s: None,
        values,
    })
}

/// Suspended heat density on `(s, φ)`: proportional to
/// `t·sin²(s)·Tr(ψ_0 e^{−t(cos²s + sin²s·Q(φ)²)})` on `s ∈ (0, π)` and
/// extended by zero on `[π, 2π)`, calibrated so the total mass converges
/// to `rank`.
pub fn suspended_density(
    t: f64,
    grid_s: usize,
    grid_phi: usize,
    basis: &OddBasis,
    rank: u32,
) -> Result<DensitySample, HeatError> {
    if t <= 0.0 {
        return Err(HeatError::InvalidTime(t));
    }
    let hist: Vec<((i32, u32), i64)> = basis.supertrace_histogram().into_iter().collect();
    let norm = rank as f64 * SUSPENDED_CALIBRATION * t;
    let mut values = vec![0.0; grid_s * grid_phi];
    for is in 0..grid_s {
        let s = 2.0 * PI * is as f64 / grid_s as f64;
        if s <= 0.0 || s >= PI {
            continue;
        }
        let sin2 = s.sin() * s.sin();
        let weight = norm * sin2 * (-t * s.cos() * s.cos()).exp();
        for iphi in 0..grid_phi {
            let u = iphi as f64 / grid_phi as f64;
            let mut acc = 0.0;
            for ((m, e), count) in &hist {
                let q2 = 2.0 * *e as f64 + (*m as f64 + u).powi(2);
                acc += *count as f64 * (-t * sin2 * q2).exp();
            }
            values[is * grid_phi + iphi] = weight * acc;
        }
    }
    Ok(DensitySample {
        variant: DensityVariant::Suspended,
        t,
        trunc: basis.trunc,
        rank,
        grid_phi,
        grid_s: Some(grid_s),
        values,
    })
}

/// Even heat density on `(s, φ)`: the graded supertrace of
/// `e^{−t (Q^e)²}` with the zero-mode insertion, localizing on the `2π`
/// lattice where `(e_0 + s/2π)² + (f_0 + φ/2π)²` vanishes.
pub fn even_density(
    t: f64,
    grid_s: usize,
    grid_phi: usize,
    basis: &EvenBasis,
    rank: u32,
) -> Result<DensitySample, HeatError> {
    if t <= 0.0 {
        return Err(HeatError::InvalidTime(t));
    }
    let hist: Vec<((i32, i32, u32), i64)> = basis.supertrace_histogram().into_iter().collect();
    let norm = rank as f64 * EVEN_CALIBRATION * t;
    let mut values = vec![0.0; grid_s * grid_phi];
    for is in 0..grid_s {
        let su = is as f64 / grid_s as f64;
        for iphi in 0..grid_phi {
            let pu = iphi as f64 / grid_phi as f64;
            let mut acc = 0.0;
            for ((me, mf, e), count) in &hist {
                let q2 = 2.0 * *e as f64
                    + (*me as f64 + su).powi(2)
                    + (*mf as f64 + pu).powi(2);
                acc += *count as f64 * (-t * q2).exp();
            }
            values[is * grid_phi + iphi] = norm * acc;
        }
    }
    Ok(DensitySample {
        variant: DensityVariant::Even,
        t,
        trunc: basis.trunc,
        rank,
        grid_phi,
        grid_s: Some(grid_s),
        values,
    })
}

/// Symbolic index character of a supercharge with vacuum bundle `ξ`.
#[derive(Debug, Clone, PartialEq)]
pub struct CharacterClass {
    /// Odd characters live on `T_φ × T^n`; even ones on `T_s × T_φ × T^n`.
    pub even: bool,
    pub flow_sign: i8,
    pub chern: ExtClassQ,
    pub rank: u32,
}

impl CharacterClass {
    /// The character as an exact form: odd `±√π·(dφ/2π)∧ch(F_ξ)`,
    /// even `±(ds/2π)∧(dφ/2π)∧ch(F_ξ)`.
    pub fn to_form(&self) -> FourierForm {
        let n = self.chern.n();
        let ch = FourierForm::from_class(&self.chern);
        let base = if self.even {
            FourierForm::ds_over_2pi(n)
                .wedge(&FourierForm::dphi_over_2pi(n))
                .unwrap()
                .wedge(&ch)
                .unwrap()
        } else {
            FourierForm::dphi_over_2pi(n).wedge(&ch).unwrap().scale_sqrt_pi(1)
        };
        if self.flow_sign < 0 {
            base.neg()
        } else {
            base
        }
    }
}

/// Numeric evidence backing a character assembly.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct NumericEvidence {
    pub net_flow: i64,
    /// Heat-density total mass, when available.
    pub density_total: Option<f64>,
    pub tolerance: f64,
}

/// Builds the symbolic character after checking the numeric evidence
/// against the bundle: |flow| must equal the rank (the degree-0 part of
/// the Chern character) and any density total must match it too.
pub fn assemble_character(
    evidence: &NumericEvidence,
    xi: &CurvatureData,
    even: bool,
) -> Result<CharacterClass, HeatError> {
    let rank = xi.rank();
    let flow_ok = evidence.net_flow.unsigned_abs() == rank as u64;
    let total_ok = evidence
        .density_total
        .is_none_or(|m| (m - rank as f64).abs() <= evidence.tolerance);
    if !flow_ok || !total_ok {
        return Err(HeatError::RankMismatch {
            flow: evidence.net_flow,
            total: evidence.density_total,
            rank,
        });
    }
    let chern = chern_character(xi)?;
    let flow_sign = if evidence.net_flow < 0 { -1 } else { 1 };
    Ok(CharacterClass { even, flow_sign, chern, rank })
}

/// Desuspension factorization: the odd character equals
/// `√π ∫_{T_s}` of the even character, exactly at the symbolic level.
pub fn factorization_check(xi: &CurvatureData, flow_sign: i8) -> Result<bool, HeatError> {
    let chern = chern_character(xi)?;
    let even = CharacterClass { even: true, flow_sign, chern: chern.clone(), rank: xi.rank() };
    let odd = CharacterClass { even: false, flow_sign, chern, rank: xi.rank() };
    Ok(desuspend(&even.to_form()) == odd.to_form())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exterior::{Ext, MultiIndex};
    use crate::fock::{supercharge_odd, OddOp};
    use crate::spectral::eigendecompose;
    use num_bigint::BigInt;

    fn odd_basis(l: u32, c: u32) -> OddBasis {
        OddBasis::build(TruncationParams::full_modes(l, c))
    }

    #[test]
    fn odd_density_matches_matrix_supertrace() {
        // independent route: eigendecompose Q(φ) and trace ψ_0·e^{−tQ²}
        let basis = odd_basis(3, 2);
        let t = 0.7;
        let grid = 8;
        let density = odd_density(t, grid, &basis, 1).unwrap();
        let psi0 = crate::fock::odd_operator::<f64>(&basis, OddOp::Psi(0)).unwrap();
        for i in 0..grid {
            let u = i as f64 / grid as f64;
            let q = supercharge_odd::<f64>(&basis, u, false);
            let eig = eigendecompose(&q).unwrap();
            let mut trace = 0.0;
            for j in 0..basis.dim() {
                // ⟨v_j|ψ_0|v_j⟩ e^{−tλ_j²}
                let v = eig.eigenvector(j);
                let pv = psi0.apply(&v);
                let exp = (-t * eig.eigenvalues[j] * eig.eigenvalues[j]).exp();
                let dot: f64 = v.iter().zip(&pv).map(|(a, b)| a * b).sum();
                trace += dot * exp;
            }
            let expected = trace * (t / PI).sqrt() / (2.0 * PI);
            assert!(
                (density.values[i] - expected).abs() < 1e-12,
                "grid point {i}: {} vs {}",
                density.values[i],
                expected
            );
        }
    }

    #[test]
    fn odd_density_matches_gaussian_sum() {
        let basis = odd_basis(8, 4);
        for &t in &[1.0, 4.0, 16.0] {
            let d = odd_density(t, 64, &basis, 1).unwrap();
            for (i, v) in d.values.iter().enumerate() {
                let reference = gaussian_sum_reference(t, i as f64 / 64.0);
                assert!(
                    (v - reference).abs() < 1e-6,
                    "t={t}, i={i}: {v} vs {reference}"
                );
            }
        }
    }

    #[test]
    fn odd_density_integrates_to_rank() {
        let basis = odd_basis(8, 4);
        for &t in &[1.0, 4.0, 16.0] {
            let d = odd_density(t, 256, &basis, 1).unwrap();
            assert!((d.integral() - 1.0).abs() < 1e-6, "t={t}: {}", d.integral());
            let d3 = odd_density(t, 256, &basis, 3).unwrap();
            assert!((d3.integral() - 3.0).abs() < 3e-6);
        }
    }

    #[test]
    fn odd_density_second_moment_decreases() {
        let basis = odd_basis(8, 4);
        let mut last = f64::INFINITY;
        for &t in &[1.0, 4.0, 16.0, 64.0] {
            let d = odd_density(t, 256, &basis, 1).unwrap();
            let stats = localization_stats(&d, 0.5);
            assert!(stats.second_moment < last, "t={t}");
            last = stats.second_moment;
        }
        // localization at φ = 0: the Gaussian has σ_φ = 2π/√(2t) ≈ 0.55 at
        // t = 64, so a half-width of π/2 covers ≈ 2.8σ
        let d = odd_density(64.0, 256, &basis, 1).unwrap();
        let stats = localization_stats(&d, PI / 2.0);
        assert!(periodic_distance(stats.argmax_phi, 0.0) < 2.0 * PI / 256.0 + 1e-12);
        assert!(stats.window_mass / stats.total > 0.99);
    }

    #[test]
    fn suspended_density_localizes_and_calibrates() {
        let basis = odd_basis(6, 3);
        let mut last_err = f64::INFINITY;
        for &t in &[4.0, 16.0, 64.0] {
            let d = suspended_density(t, 64, 64, &basis, 1).unwrap();
            // symmetric under s ↦ π − s (index 32 − is) at fixed φ
            for is in 1..32usize {
                for iphi in 0..64 {
                    let a = d.values[is * 64 + iphi];
                    let c = d.values[(32 - is) * 64 + iphi];
                    assert!((a - c).abs() < 1e-12, "sin² symmetry at {is},{iphi}");
                }
            }
            // mass converges to rank like erf(√t), down to quadrature noise
            let err = (d.integral() - 1.0).abs();
            assert!(err < last_err.max(1e-6) + 1e-12, "t={t}: {err}");
            last_err = err;
            // argmax near (π/2, 0)
            let stats = localization_stats(&d, 0.6);
            assert!(periodic_distance(stats.argmax_s, PI / 2.0) < 2.0 * PI / 64.0 + 1e-12);
            assert!(periodic_distance(stats.argmax_phi, 0.0) < 2.0 * PI / 64.0 + 1e-12);
        }
        let d = suspended_density(64.0, 64, 64, &basis, 1).unwrap();
        assert!((d.integral() - 1.0).abs() < 1e-6);
        // zero on the second half-circle
        for is in 33..64 {
            for iphi in 0..64 {
                assert_eq!(d.values[is * 64 + iphi], 0.0);
            }
        }
    }

    #[test]
    fn even_density_localizes_on_lattice() {
        let basis = EvenBasis::build(TruncationParams::full_modes(4, 2));
        for &t in &[4.0, 16.0] {
            let d = even_density(t, 32, 32, &basis, 1).unwrap();
            let stats = localization_stats(&d, 0.6);
            assert_eq!(stats.argmax_s, 0.0);
            assert_eq!(stats.argmax_phi, 0.0);
            let err = (d.integral() - 1.0).abs();
            assert!(err < 0.05 / t, "t={t}: {err}");
        }
        let d = even_density(16.0, 32, 32, &basis, 2).unwrap();
        assert!((d.integral() - 2.0).abs() < 1e-3);
    }

    #[test]
    fn even_density_matches_matrix_supertrace() {
        // independent route: the graded supertrace Tr(Γ ψ⁰₀ ψ¹₀ e^{−tQ²})
        // computed from the assembled matrices; the density is its
        // imaginary part times the calibration
        use crate::fock::{even_operator, grading_operator, supercharge_even, EvenOp};
        let basis = EvenBasis::build(TruncationParams::full_modes(3, 1));
        let t = 0.9;
        let (su, pu) = (0.25, 0.375);
        let q = supercharge_even::<f64>(&basis, su, pu, false);
        let q2 = q.mul(&q);
        let gamma = grading_operator::<f64>(&basis);
        let psi00 = even_operator::<f64>(&basis, EvenOp::Psi0(0)).unwrap();
        let psi01 = even_operator::<f64>(&basis, EvenOp::Psi1(0)).unwrap();
        let insertion = gamma.mul(&psi00).mul(&psi01);
        // Q² is diagonal at full mode range, so e^{−tQ²} is entrywise
        let mut trace_im = 0.0;
        for i in 0..basis.dim() {
            let d = q2.entry(i, i).re;
            trace_im += insertion.entry(i, i).im * (-t * d).exp();
        }
        let expected = EVEN_CALIBRATION * t * trace_im;

        // grid point (1,1) of a 4×4 grid is (s,φ)/2π = (1/4, ... ) pick the
        // grid so one point lands on (su, pu): 4·su = 1, grid_phi·pu = 3/8·8
        let d = even_density(t, 4, 8, &basis, 1).unwrap();
        let value = d.values[8 + 3];
        assert!((value - expected).abs() < 1e-12, "{value} vs {expected}");
    }

    #[test]
    fn even_density_exponentially_suppressed_at_half_lattice() {
        // at (s,φ) = (π,π) the smallest diagonal value is
        // (±1/2)² + (±1/2)² = 1/2, from four (m_e, m_f) corners with signed
        // count 2 each: density ≈ C·t·8·e^{−t/2}, so d(2t)/d(t) → 2e^{−t/2}
        let basis = EvenBasis::build(TruncationParams::full_modes(4, 2));
        let value_at_pi_pi = |t: f64| {
            let d = even_density(t, 2, 2, &basis, 1).unwrap();
            // grid point (1,1) of the 2×2 grid is (s,φ) = (π,π)
            d.values[3]
        };
        let t = 6.0;
        let ratio = value_at_pi_pi(2.0 * t) / value_at_pi_pi(t);
        assert!(
            (ratio - 2.0 * (-t / 2.0).exp()).abs() < 1e-3 * ratio.abs().max(1e-3),
            "ratio {ratio} vs {}",
            2.0 * (-t / 2.0).exp()
        );
    }

    #[test]
    fn character_forms_and_factorization() {
        // rank-1 trivial ξ: odd character √π·dφ/2π
        let xi = CurvatureData::trivial(2, 1);
        let ev = NumericEvidence { net_flow: 1, density_total: Some(1.0), tolerance: 1e-6 };
        let odd = assemble_character(&ev, &xi, false).unwrap();
        let expected = FourierForm::dphi_over_2pi(2).scale_sqrt_pi(1);
        assert_eq!(odd.to_form(), expected);

        // negative flow flips the sign
        let ev_neg = NumericEvidence { net_flow: -1, density_total: None, tolerance: 1e-6 };
        let neg = assemble_character(&ev_neg, &xi, false).unwrap();
        assert_eq!(neg.to_form(), expected.neg());

        // factorization: desuspend(even) = odd symbolically
        assert!(factorization_check(&xi, 1).unwrap());
        let line = CurvatureData::line(
            3,
            Ext::monomial(3, MultiIndex::from_indices(&[1, 3]).unwrap(), BigInt::from(2)).unwrap(),
        );
        assert!(factorization_check(&line, 1).unwrap());
        assert!(factorization_check(&line, -1).unwrap());
        // zero bundle: zero character on both sides
        let zero = CurvatureData::trivial(2, 0);
        assert!(factorization_check(&zero, 1).unwrap());
    }

    #[test]
    fn assemble_character_rejects_rank_mismatch() {
        let xi = CurvatureData::trivial(2, 2);
        let ev = NumericEvidence { net_flow: 1, density_total: None, tolerance: 1e-6 };
        assert!(matches!(
            assemble_character(&ev, &xi, false),
            Err(HeatError::RankMismatch { .. })
        ));
        let ev_bad_total =
            NumericEvidence { net_flow: 2, density_total: Some(1.4), tolerance: 1e-3 };
        assert!(assemble_character(&ev_bad_total, &xi, false).is_err());
    }

    #[test]
    fn uniform_density_window_mass_is_fractional() {
        let d = DensitySample {
            variant: DensityVariant::Odd,
            t: 1.0,
            trunc: TruncationParams::full_modes(2, 1),
            rank: 1,
            grid_phi: 128,
            grid_s: None,
            values: vec![1.0 / (2.0 * PI); 128],
        };
        let stats = localization_stats(&d, PI / 2.0);
        assert!((stats.total - 1.0).abs() < 1e-12);
        // window is [−π/2, π/2]: half the circle
        assert!((stats.window_mass - 0.5).abs() < 0.01);
    }
}
