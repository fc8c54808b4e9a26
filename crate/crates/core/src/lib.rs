//! Twisted K-theory of tori at desk scale.
//!
//! The crate has three layers:
//!
//! * exact lattice algebra — the integer exterior algebra `Λ_n`, Smith and
//!   Hermite normal forms, and the twisted K-group / character-quotient
//!   computations built on them (`exterior`, `lattice`, `ktheory`);
//! * an exact symbolic calculus of differential forms on `T_s × T_φ × T^n`
//!   with trigonometric-polynomial coefficients, the twisted differential
//!   `d + H∧`, its primitive algorithm, gauge transforms, Chern characters
//!   and desuspension (`forms`);
//! * finite truncations of the spinor ⊗ Fock representations carrying the
//!   supercharge families, with eigenanalysis, spectral flow and heat-kernel
//!   supertrace densities (`scalar`, `matrix`, `fock`, `spectral`, `heat`).
//!
//! Matrix assembly is generic over the scalar type: `f64` for numerics and
//! an exact real radical extension of `ℚ` for relation checks, with complex
//! scalars layered on top for the even (two-family) Clifford modules.

pub mod exterior;
pub mod fock;
pub mod forms;
pub mod heat;
pub mod ktheory;
pub mod lattice;
pub mod matrix;
pub mod scalar;
pub mod spectral;

use num_bigint::BigInt;
use num_rational::BigRational;

/// Exterior-algebra element with integer coefficients: the model for
/// `K^*(T^n)` and `H^*(T^n, ℤ)`.
pub type ExtElement = exterior::Ext<BigInt>;

/// Exterior-algebra element with rational coefficients: the carrier of
/// Chern characters.
pub type ExtClassQ = exterior::Ext<BigRational>;

/// Floating-point scalar used on the numeric path.
pub type Real = f64;

/// Real operator matrix (odd-variant supercharges, approximate signs).
pub type RealMatrix = matrix::OpMatrix<f64>;

/// Complex operator matrix (even-variant supercharges, suspensions).
pub type ComplexMatrix = matrix::OpMatrix<scalar::CScalar<f64>>;

/// Exact real operator matrix for relation checks.
pub type ExactMatrix = matrix::OpMatrix<scalar::SqrtRat>;

/// Exact complex operator matrix for even-variant relation checks.
pub type ExactComplexMatrix = matrix::OpMatrix<scalar::CScalar<scalar::SqrtRat>>;
