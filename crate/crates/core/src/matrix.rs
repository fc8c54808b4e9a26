//! Sparse square operator matrices over a generic scalar.
//!
//! Rows are sorted maps column → entry with zeros pruned on insert, so
//! exact-scalar matrices compare and test for zero structurally. Dense
//! conversion is provided for the eigensolver.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::scalar::{RealScalar, Scalar};

#[derive(Debug, Error, PartialEq)]
pub enum MatrixError {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("matrix is not hermitian (max asymmetry {0:.3e})")]
    NotHermitian(f64),
}

/// Sparse square matrix of an operator on an indexed basis.
#[derive(Debug, Clone, PartialEq)]
pub struct OpMatrix<T> {
    dim: usize,
    rows: Vec<BTreeMap<usize, T>>,
    hermitian: bool,
}

impl<T: Scalar> OpMatrix<T> {
    pub fn zeros(dim: usize) -> Self {
        OpMatrix { dim, rows: vec![BTreeMap::new(); dim], hermitian: false }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = OpMatrix::zeros(dim);
        for i in 0..dim {
            m.rows[i].insert(i, T::one());
        }
        m.hermitian = true;
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn hermitian(&self) -> bool {
        self.hermitian
    }

    /// Marks the matrix hermitian after verifying `‖A − A†‖_max ≤ tol`
    /// (`tol = 0` demands exact equality).
    pub fn into_hermitian(mut self, tol: f64) -> Result<Self, MatrixError> {
        let defect = self.sub(&self.adjoint()).max_abs();
        if defect > tol {
            return Err(MatrixError::NotHermitian(defect));
        }
        self.hermitian = true;
        Ok(self)
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(|r| r.len()).sum()
    }

    pub fn get(&self, i: usize, j: usize) -> Option<&T> {
        self.rows[i].get(&j)
    }

    pub fn entry(&self, i: usize, j: usize) -> T {
        self.rows[i].get(&j).cloned().unwrap_or_else(T::zero)
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, &T)> {
        self.rows[i].iter().map(|(j, v)| (*j, v))
    }

    pub fn add_entry(&mut self, i: usize, j: usize, v: T) {
        if v.is_zero() {
            return;
        }
        self.hermitian = false;
        match self.rows[i].remove(&j) {
            None => {
                self.rows[i].insert(j, v);
            }
            Some(old) => {
                let sum = old + v;
                if !sum.is_zero() {
                    self.rows[i].insert(j, sum);
                }
            }
        }
    }

    fn check_dim(&self, other: &Self) -> Result<(), MatrixError> {
        if self.dim != other.dim {
            return Err(MatrixError::DimensionMismatch(self.dim, other.dim));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Self {
        self.check_dim(other).expect("add: dimension mismatch");
        let mut out = self.clone();
        out.hermitian = false;
        for i in 0..other.dim {
            for (j, v) in &other.rows[i] {
                out.add_entry(i, *j, v.clone());
            }
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        let rows = self
            .rows
            .iter()
            .map(|r| r.iter().map(|(j, v)| (*j, -v.clone())).collect())
            .collect();
        OpMatrix { dim: self.dim, rows, hermitian: false }
    }

    pub fn scale(&self, factor: &T) -> Self {
        let mut out = OpMatrix::zeros(self.dim);
        for i in 0..self.dim {
            for (j, v) in &self.rows[i] {
                out.add_entry(i, *j, v.clone() * factor.clone());
            }
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.check_dim(other).expect("mul: dimension mismatch");
        let mut out = OpMatrix::zeros(self.dim);
        for i in 0..self.dim {
            for (k, a) in &self.rows[i] {
                for (j, b) in &other.rows[*k] {
                    out.add_entry(i, *j, a.clone() * b.clone());
                }
            }
        }
        out
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let mut out = OpMatrix::zeros(self.dim);
        for i in 0..self.dim {
            for (j, v) in &self.rows[i] {
                out.add_entry(*j, i, v.conj());
            }
        }
        out.hermitian = self.hermitian;
        out
    }

    pub fn commutator(&self, other: &Self) -> Self {
        self.mul(other).sub(&other.mul(self))
    }

    pub fn anticommutator(&self, other: &Self) -> Self {
        self.mul(other).add(&other.mul(self))
    }

    pub fn is_zero(&self) -> bool {
        self.rows.iter().all(|r| r.is_empty())
    }

    pub fn max_abs(&self) -> f64 {
        self.rows
            .iter()
            .flat_map(|r| r.values())
            .map(|v| v.abs_f64())
            .fold(0.0, f64::max)
    }

    /// Largest entry modulus over the given columns — the residual of an
    /// operator identity asserted on an interior sector.
    pub fn max_abs_on_columns(&self, columns: &[usize]) -> f64 {
        let mut mask = vec![false; self.dim];
        for &c in columns {
            mask[c] = true;
        }
        self.rows
            .iter()
            .flat_map(|r| r.iter())
            .filter(|(j, _)| mask[**j])
            .map(|(_, v)| v.abs_f64())
            .fold(0.0, f64::max)
    }

    pub fn is_zero_on_columns(&self, columns: &[usize]) -> bool {
        let mut mask = vec![false; self.dim];
        for &c in columns {
            mask[c] = true;
        }
        self.rows.iter().all(|r| r.keys().all(|j| !mask[*j]))
    }

    pub fn diagonal(&self) -> Vec<T> {
        (0..self.dim).map(|i| self.entry(i, i)).collect()
    }

    /// Diagonal of `A†A` (column norms squared); cheap even when `A²` is not.
    pub fn gram_diagonal(&self) -> Vec<T> {
        let mut out = vec![T::zero(); self.dim];
        for row in &self.rows {
            for (j, v) in row {
                out[*j] = out[*j].clone() + v.conj() * v.clone();
            }
        }
        out
    }

    pub fn apply(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.dim);
        self.rows
            .iter()
            .map(|row| {
                let mut acc = T::zero();
                for (j, v) in row {
                    acc = acc + v.clone() * x[*j].clone();
                }
                acc
            })
            .collect()
    }

    /// Block-diagonal direct sum.
    pub fn direct_sum(blocks: &[&OpMatrix<T>]) -> Self {
        let dim = blocks.iter().map(|b| b.dim).sum();
        let mut out = OpMatrix::zeros(dim);
        let mut offset = 0;
        for b in blocks {
            for i in 0..b.dim {
                for (j, v) in &b.rows[i] {
                    out.add_entry(offset + i, offset + j, v.clone());
                }
            }
            offset += b.dim;
        }
        out.hermitian = blocks.iter().all(|b| b.hermitian);
        out
    }

    /// Compression to the given index subset (in the subset's order).
    pub fn restrict(&self, indices: &[usize]) -> Self {
        let mut pos = vec![usize::MAX; self.dim];
        for (p, &i) in indices.iter().enumerate() {
            pos[i] = p;
        }
        let mut out = OpMatrix::zeros(indices.len());
        for (p, &i) in indices.iter().enumerate() {
            for (j, v) in &self.rows[i] {
                if pos[*j] != usize::MAX {
                    out.add_entry(p, pos[*j], v.clone());
                }
            }
        }
        out
    }

    pub fn map_entries<U: Scalar>(&self, mut f: impl FnMut(&T) -> U) -> OpMatrix<U> {
        let mut out = OpMatrix::zeros(self.dim);
        for i in 0..self.dim {
            for (j, v) in &self.rows[i] {
                out.add_entry(i, *j, f(v));
            }
        }
        out
    }
}

impl<T: RealScalar> OpMatrix<T> {
    /// Dense row-major `f64` copy.
    pub fn to_dense_f64(&self) -> Vec<f64> {
        let mut dense = vec![0.0; self.dim * self.dim];
        for i in 0..self.dim {
            for (j, v) in &self.rows[i] {
                dense[i * self.dim + j] = v.to_f64();
            }
        }
        dense
    }
}

/// Sparse-triplet JSON dump `{dim, hermitian, entries: [[i, j, re, im]]}`,
/// with basis-state labels when provided.
pub fn matrix_to_json<T: Scalar>(
    m: &OpMatrix<T>,
    labels: Option<&[String]>,
    value: impl Fn(&T) -> (f64, f64),
) -> serde_json::Value {
    let mut entries = Vec::with_capacity(m.nnz());
    for i in 0..m.dim {
        for (j, v) in &m.rows[i] {
            let (re, im) = value(v);
            entries.push(serde_json::json!([i, j, re, im]));
        }
    }
    serde_json::json!({
        "dim": m.dim,
        "hermitian": m.hermitian,
        "entries": entries,
        "basis_labels": labels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{CScalar, SqrtRat};
    use num_traits::Zero;

    #[test]
    fn product_and_commutator() {
        let mut a = OpMatrix::<f64>::zeros(2);
        a.add_entry(0, 1, 1.0);
        let mut b = OpMatrix::<f64>::zeros(2);
        b.add_entry(1, 0, 1.0);
        let ab = a.mul(&b);
        assert_eq!(ab.entry(0, 0), 1.0);
        let comm = a.commutator(&b);
        assert_eq!(comm.entry(0, 0), 1.0);
        assert_eq!(comm.entry(1, 1), -1.0);
    }

    #[test]
    fn adjoint_conjugates() {
        let mut m = OpMatrix::<CScalar<f64>>::zeros(2);
        m.add_entry(0, 1, CScalar::new(1.0, 2.0));
        let a = m.adjoint();
        assert_eq!(a.entry(1, 0), CScalar::new(1.0, -2.0));
        assert!(a.entry(0, 1).is_zero());
    }

    #[test]
    fn exact_cancellation_prunes_entries() {
        let mut m = OpMatrix::<SqrtRat>::zeros(1);
        m.add_entry(0, 0, SqrtRat::sqrt_nat(2));
        m.add_entry(0, 0, -SqrtRat::sqrt_nat(2));
        assert!(m.is_zero());
        assert_eq!(m.nnz(), 0);
    }

    #[test]
    fn hermitian_verification() {
        let mut m = OpMatrix::<f64>::zeros(2);
        m.add_entry(0, 1, 1.0);
        m.add_entry(1, 0, 1.0);
        assert!(m.clone().into_hermitian(0.0).is_ok());
        let mut n = OpMatrix::<f64>::zeros(2);
        n.add_entry(0, 1, 1.0);
        assert!(matches!(n.into_hermitian(0.0), Err(MatrixError::NotHermitian(_))));
    }

    #[test]
    fn restriction_compresses() {
        let mut m = OpMatrix::<f64>::zeros(3);
        m.add_entry(0, 2, 5.0);
        m.add_entry(1, 1, 7.0);
        let r = m.restrict(&[0, 2]);
        assert_eq!(r.dim(), 2);
        assert_eq!(r.entry(0, 1), 5.0);
        assert_eq!(r.entry(1, 1), 0.0);
    }
}
