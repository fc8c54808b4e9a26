//! Exact integer matrices and normal forms.
//!
//! Everything here runs over `BigInt`: Smith normal form pivots blow up
//! intermediate entries, and the torsion factors downstream must be exact.
//! `smith_normal_form` tracks the unimodular transforms and their inverses,
//! which is what the quotient-group generators need.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LatticeError {
    #[error("column dimension mismatch: sublattice lives in Z^{found}, ambient is Z^{ambient}")]
    AmbientMismatch { ambient: usize, found: usize },
    #[error("matrix shape mismatch: ({0}, {1}) vs ({2}, {3})")]
    ShapeMismatch(usize, usize, usize, usize),
}

/// Dense rectangular integer matrix, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntMatrix {
    rows: usize,
    cols: usize,
    data: Vec<BigInt>,
}

impl IntMatrix {
    pub fn zero(rows: usize, cols: usize) -> Self {
        IntMatrix { rows, cols, data: vec![BigInt::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = IntMatrix::zero(n, n);
        for i in 0..n {
            m.set(i, i, BigInt::one());
        }
        m
    }

    pub fn from_rows(rows: &[&[i64]]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        let mut m = IntMatrix::zero(r, c);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), c, "ragged rows");
            for (j, v) in row.iter().enumerate() {
                m.set(i, j, BigInt::from(*v));
            }
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> BigInt) -> Self {
        let mut m = IntMatrix::zero(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &BigInt {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: BigInt) {
        self.data[i * self.cols + j] = v;
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|v| v.is_zero())
    }

    pub fn column(&self, j: usize) -> Vec<BigInt> {
        (0..self.rows).map(|i| self.get(i, j).clone()).collect()
    }

    pub fn from_columns(rows: usize, columns: &[Vec<BigInt>]) -> Self {
        let mut m = IntMatrix::zero(rows, columns.len());
        for (j, col) in columns.iter().enumerate() {
            assert_eq!(col.len(), rows, "column length mismatch");
            for (i, v) in col.iter().enumerate() {
                m.set(i, j, v.clone());
            }
        }
        m
    }

    pub fn transpose(&self) -> Self {
        IntMatrix::from_fn(self.cols, self.rows, |i, j| self.get(j, i).clone())
    }

    pub fn mul(&self, other: &Self) -> Result<Self, LatticeError> {
        if self.cols != other.rows {
            return Err(LatticeError::ShapeMismatch(self.rows, self.cols, other.rows, other.cols));
        }
        let mut out = IntMatrix::zero(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = other.get(k, j);
                    if !b.is_zero() {
                        let v = out.get(i, j) + a * b;
                        out.set(i, j, v);
                    }
                }
            }
        }
        Ok(out)
    }

    fn row_swap(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    fn col_swap(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for i in 0..self.rows {
            self.data.swap(i * self.cols + a, i * self.cols + b);
        }
    }

    /// row_dst += c · row_src
    fn row_axpy(&mut self, dst: usize, src: usize, c: &BigInt) {
        if c.is_zero() {
            return;
        }
        for j in 0..self.cols {
            let v = self.get(dst, j) + c * self.get(src, j);
            self.set(dst, j, v);
        }
    }

    /// col_dst += c · col_src
    fn col_axpy(&mut self, dst: usize, src: usize, c: &BigInt) {
        if c.is_zero() {
            return;
        }
        for i in 0..self.rows {
            let v = self.get(i, dst) + c * self.get(i, src);
            self.set(i, dst, v);
        }
    }

    fn row_neg(&mut self, i: usize) {
        for j in 0..self.cols {
            let v = -self.get(i, j).clone();
            self.set(i, j, v);
        }
    }

    fn col_neg(&mut self, j: usize) {
        for i in 0..self.rows {
            let v = -self.get(i, j).clone();
            self.set(i, j, v);
        }
    }
}

/// `u · m · v = d` with `u`, `v` unimodular and `d` diagonal satisfying the
/// divisibility chain `d_1 | d_2 | …`. Inverses are tracked alongside.
#[derive(Debug, Clone)]
pub struct SmithDecomposition {
    pub u: IntMatrix,
    pub u_inv: IntMatrix,
    pub d: IntMatrix,
    pub v: IntMatrix,
    pub v_inv: IntMatrix,
}

impl SmithDecomposition {
    pub fn rank(&self) -> usize {
        let n = self.d.rows().min(self.d.cols());
        (0..n).take_while(|&i| !self.d.get(i, i).is_zero()).count()
    }

    /// Diagonal entries ≥ 2 (the nontrivial torsion factors).
    pub fn invariant_factors(&self) -> Vec<BigInt> {
        let n = self.d.rows().min(self.d.cols());
        (0..n)
            .map(|i| self.d.get(i, i).clone())
            .filter(|v| !v.is_zero() && !v.is_one())
            .collect()
    }
}

pub fn smith_normal_form(m: &IntMatrix) -> SmithDecomposition {
    let rows = m.rows();
    let cols = m.cols();
    let mut d = m.clone();
    let mut u = IntMatrix::identity(rows);
    let mut u_inv = IntMatrix::identity(rows);
    let mut v = IntMatrix::identity(cols);
    let mut v_inv = IntMatrix::identity(cols);

    // Mirrored elementary operations. Row op L on d ⇒ u ← L·u and
    // u_inv ← u_inv·L⁻¹; column op R on d ⇒ v ← v·R and v_inv ← R⁻¹·v_inv.
    macro_rules! d_row_swap {
        ($a:expr, $b:expr) => {{
            d.row_swap($a, $b);
            u.row_swap($a, $b);
            u_inv.col_swap($a, $b);
        }};
    }
    macro_rules! d_col_swap {
        ($a:expr, $b:expr) => {{
            d.col_swap($a, $b);
            v.col_swap($a, $b);
            v_inv.row_swap($a, $b);
        }};
    }
    macro_rules! d_row_axpy {
        ($dst:expr, $src:expr, $c:expr) => {{
            let c: BigInt = $c;
            d.row_axpy($dst, $src, &c);
            u.row_axpy($dst, $src, &c);
            u_inv.col_axpy($src, $dst, &(-&c));
        }};
    }
    macro_rules! d_col_axpy {
        ($dst:expr, $src:expr, $c:expr) => {{
            let c: BigInt = $c;
            d.col_axpy($dst, $src, &c);
            v.col_axpy($dst, $src, &c);
            v_inv.row_axpy($src, $dst, &(-&c));
        }};
    }

    let steps = rows.min(cols);
    for t in 0..steps {
        'pivot: loop {
            // smallest nonzero |entry| in the trailing block
            let mut pivot: Option<(usize, usize)> = None;
            for i in t..rows {
                for j in t..cols {
                    if !d.get(i, j).is_zero()
                        && pivot.is_none_or(|(pi, pj)| d.get(i, j).abs() < d.get(pi, pj).abs())
                    {
                        pivot = Some((i, j));
                    }
                }
            }
            let Some((pi, pj)) = pivot else {
                break 'pivot;
            };
            d_row_swap!(t, pi);
            d_col_swap!(t, pj);

            let mut dirty = false;
            for i in t + 1..rows {
                if !d.get(i, t).is_zero() {
                    let q = d.get(i, t).div_floor(d.get(t, t));
                    d_row_axpy!(i, t, -q);
                    if !d.get(i, t).is_zero() {
                        dirty = true;
                    }
                }
            }
            for j in t + 1..cols {
                if !d.get(t, j).is_zero() {
                    let q = d.get(t, j).div_floor(d.get(t, t));
                    d_col_axpy!(j, t, -q);
                    if !d.get(t, j).is_zero() {
                        dirty = true;
                    }
                }
            }
            if dirty {
                continue 'pivot;
            }

            // divisibility fix-up: fold a non-divisible entry into row t
            let p = d.get(t, t).clone();
            let offender = (t + 1..rows)
                .flat_map(|i| (t + 1..cols).map(move |j| (i, j)))
                .find(|&(i, j)| !d.get(i, j).mod_floor(&p).is_zero());
            match offender {
                Some((i, _)) => {
                    d_row_axpy!(t, i, BigInt::one());
                    continue 'pivot;
                }
                None => break 'pivot,
            }
        }
    }

    for t in 0..steps {
        if d.get(t, t).is_negative() {
            d.row_neg(t);
            u.row_neg(t);
            u_inv.col_neg(t);
        }
    }

    SmithDecomposition { u, u_inv, d, v, v_inv }
}

/// Saturated basis (as columns) of the integer kernel `{x : m·x = 0}`.
/// Saturation is automatic: the kernel columns come from a unimodular `v`.
pub fn kernel_lattice(m: &IntMatrix) -> IntMatrix {
    let snf = smith_normal_form(m);
    let rank = snf.rank();
    let cols: Vec<Vec<BigInt>> = (rank..m.cols()).map(|j| snf.v.column(j)).collect();
    IntMatrix::from_columns(m.cols(), &cols)
}

/// Finitely generated abelian group in invariant-factor form:
/// `ℤ^free_rank ⊕ ⨁ ℤ/d_i` with `d_1 | d_2 | …`, every `d_i ≥ 2`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AbelianGroup {
    pub free_rank: usize,
    pub invariant_factors: Vec<BigInt>,
}

impl AbelianGroup {
    pub fn free(rank: usize) -> Self {
        AbelianGroup { free_rank: rank, invariant_factors: Vec::new() }
    }

    pub fn trivial() -> Self {
        AbelianGroup::free(0)
    }

    pub fn is_trivial(&self) -> bool {
        self.free_rank == 0 && self.invariant_factors.is_empty()
    }

    pub fn torsion_order(&self) -> BigInt {
        self.invariant_factors.iter().product()
    }

    /// Canonical invariant factors of a direct sum, recomputed via the
    /// Smith normal form of the block-diagonal relation matrix.
    pub fn direct_sum(parts: &[&AbelianGroup]) -> AbelianGroup {
        let free: usize = parts.iter().map(|g| g.free_rank).sum();
        let torsion: Vec<BigInt> =
            parts.iter().flat_map(|g| g.invariant_factors.iter().cloned()).collect();
        if torsion.is_empty() {
            return AbelianGroup::free(free);
        }
        let n = torsion.len();
        let rel = IntMatrix::from_fn(n, n, |i, j| if i == j { torsion[i].clone() } else { BigInt::zero() });
        let mut g = quotient_group(n, &rel).expect("square relation matrix");
        g.free_rank += free;
        g
    }
}

impl std::fmt::Display for AbelianGroup {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.is_trivial() {
            return write!(f, "0");
        }
        let mut parts = Vec::new();
        match self.free_rank {
            0 => {}
            1 => parts.push("Z".to_string()),
            r => parts.push(format!("Z^{r}")),
        }
        for d in &self.invariant_factors {
            parts.push(format!("Z/{d}"));
        }
        write!(f, "{}", parts.join(" ⊕ "))
    }
}

/// Structure of `ℤ^ambient_rank / image(sublattice)`, columns as generators.
pub fn quotient_group(ambient_rank: usize, sublattice: &IntMatrix) -> Result<AbelianGroup, LatticeError> {
    if sublattice.rows() != ambient_rank && !(sublattice.cols() == 0 && sublattice.rows() == 0) {
        return Err(LatticeError::AmbientMismatch { ambient: ambient_rank, found: sublattice.rows() });
    }
    if sublattice.cols() == 0 {
        return Ok(AbelianGroup::free(ambient_rank));
    }
    let snf = smith_normal_form(sublattice);
    Ok(AbelianGroup {
        free_rank: ambient_rank - snf.rank(),
        invariant_factors: snf.invariant_factors(),
    })
}

/// Column-echelon Hermite basis of a sublattice: pivots on strictly
/// increasing rows, pivot entries positive, later columns zero on earlier
/// pivot rows. Supports canonical coset reduction and membership tests.
#[derive(Debug, Clone)]
pub struct HermiteBasis {
    ambient: usize,
    columns: Vec<Vec<BigInt>>,
    pivots: Vec<usize>,
}

pub fn hermite_normal_form(m: &IntMatrix) -> HermiteBasis {
    let rows = m.rows();
    let mut cols: Vec<Vec<BigInt>> = (0..m.cols()).map(|j| m.column(j)).collect();
    cols.retain(|c| c.iter().any(|v| !v.is_zero()));

    let mut pivots = Vec::new();
    let mut next = 0usize; // next column slot to fill
    for row in 0..rows {
        // gcd-eliminate entries of `row` across columns next..:
        loop {
            let mut best: Option<usize> = None;
            for (j, col) in cols.iter().enumerate().skip(next) {
                if !col[row].is_zero()
                    && best.is_none_or(|b| col[row].abs() < cols[b][row].abs())
                {
                    best = Some(j);
                }
            }
            let Some(b) = best else { break };
            cols.swap(next, b);
            let mut dirty = false;
            let pivot = cols[next][row].clone();
            for j in next + 1..cols.len() {
                if !cols[j][row].is_zero() {
                    let q = cols[j][row].div_floor(&pivot);
                    let pivot_col = cols[next].clone();
                    for (v, p) in cols[j].iter_mut().zip(&pivot_col) {
                        *v = &*v - &q * p;
                    }
                    if !cols[j][row].is_zero() {
                        dirty = true;
                    }
                }
            }
            if !dirty {
                break;
            }
        }
        if next < cols.len() && !cols[next][row].is_zero() {
            if cols[next][row].is_negative() {
                for v in cols[next].iter_mut() {
                    *v = -v.clone();
                }
            }
            // reduce earlier columns' entries on this pivot row into [0, pivot)
            let pivot = cols[next][row].clone();
            for j in 0..next {
                let q = cols[j][row].div_floor(&pivot);
                if !q.is_zero() {
                    let pivot_col = cols[next].clone();
                    for (v, p) in cols[j].iter_mut().zip(&pivot_col) {
                        *v = &*v - &q * p;
                    }
                }
            }
            pivots.push(row);
            next += 1;
        }
        if next == cols.len() {
            break;
        }
    }
    cols.truncate(next);
    HermiteBasis { ambient: rows, columns: cols, pivots }
}

impl HermiteBasis {
    pub fn ambient_rank(&self) -> usize {
        self.ambient
    }

    pub fn rank(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[Vec<BigInt>] {
        &self.columns
    }

    pub fn pivots(&self) -> &[usize] {
        &self.pivots
    }

    /// Canonical coset representative: pivot-row coordinates land in
    /// `[0, pivot)`. Equal outputs iff equal cosets.
    pub fn reduce(&self, vec: &[BigInt]) -> Vec<BigInt> {
        assert_eq!(vec.len(), self.ambient, "vector/ambient mismatch");
        let mut out = vec.to_vec();
        for (j, &p) in self.pivots.iter().enumerate() {
            let q = out[p].div_floor(&self.columns[j][p]);
            if !q.is_zero() {
                for (v, c) in out.iter_mut().zip(&self.columns[j]) {
                    *v = &*v - &q * c;
                }
            }
        }
        out
    }

    pub fn contains(&self, vec: &[BigInt]) -> bool {
        self.reduce(vec).iter().all(|v| v.is_zero())
    }
}
