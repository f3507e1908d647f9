//! Dense matrices and vectors over a prime field, with the exact
//! elimination routines the code constructions rest on: reduced
//! row-echelon form, rank, null space, linear solving, and the
//! exhaustive MDS predicate.

use itertools::Itertools;

use crate::error::{Error, Result};
use crate::field::PrimeField;

/// Column vector of residues.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldVector {
    field: PrimeField,
    entries: Vec<u64>,
}

impl FieldVector {
    pub fn new(field: PrimeField, entries: Vec<u64>) -> Self {
        let entries = entries.into_iter().map(|x| field.reduce(x)).collect();
        FieldVector { field, entries }
    }

    pub fn zeros(field: PrimeField, len: usize) -> Self {
        FieldVector {
            field,
            entries: vec![0; len],
        }
    }

    pub fn field(&self) -> PrimeField {
        self.field
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, i: usize) -> u64 {
        self.entries[i]
    }

    pub fn as_slice(&self) -> &[u64] {
        &self.entries
    }

    /// The subvector picked out by `indices`, in their order.
    pub fn restrict(&self, indices: &[usize]) -> FieldVector {
        FieldVector {
            field: self.field,
            entries: indices.iter().map(|&i| self.entries[i]).collect(),
        }
    }

    pub fn slice(&self, range: std::ops::Range<usize>) -> FieldVector {
        FieldVector {
            field: self.field,
            entries: self.entries[range].to_vec(),
        }
    }
}

/// Dense row-major matrix over F_p.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldMatrix {
    field: PrimeField,
    rows: usize,
    cols: usize,
    entries: Vec<u64>,
}

impl FieldMatrix {
    pub fn zeros(field: PrimeField, rows: usize, cols: usize) -> Self {
        FieldMatrix {
            field,
            rows,
            cols,
            entries: vec![0; rows * cols],
        }
    }

    pub fn identity(field: PrimeField, n: usize) -> Self {
        let mut m = Self::zeros(field, n, n);
        for i in 0..n {
            m.set(i, i, 1 % field.modulus());
        }
        m
    }

    /// Builds a matrix from row slices, reducing every entry mod p.
    pub fn from_rows(field: PrimeField, rows: &[&[u64]]) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != ncols) {
            return Err(Error::ShapeError("ragged rows".into()));
        }
        let entries = rows
            .iter()
            .flat_map(|r| r.iter().map(|&x| field.reduce(x)))
            .collect();
        Ok(FieldMatrix {
            field,
            rows: nrows,
            cols: ncols,
            entries,
        })
    }

    /// Builds a matrix from a row-major flat array.
    pub fn from_flat(field: PrimeField, rows: usize, cols: usize, flat: &[u64]) -> Result<Self> {
        if flat.len() != rows * cols {
            return Err(Error::ShapeError(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                flat.len()
            )));
        }
        Ok(FieldMatrix {
            field,
            rows,
            cols,
            entries: flat.iter().map(|&x| field.reduce(x)).collect(),
        })
    }

    pub fn field(&self) -> PrimeField {
        self.field
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> u64 {
        debug_assert!(r < self.rows && c < self.cols);
        self.entries[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: u64) {
        debug_assert!(r < self.rows && c < self.cols);
        self.entries[r * self.cols + c] = self.field.reduce(v);
    }

    pub fn row(&self, r: usize) -> &[u64] {
        &self.entries[r * self.cols..(r + 1) * self.cols]
    }

    pub fn as_flat(&self) -> &[u64] {
        &self.entries
    }

    pub fn scale(&self, a: u64) -> FieldMatrix {
        let a = self.field.reduce(a);
        let entries = self
            .entries
            .iter()
            .map(|&x| self.field.mul(x, a))
            .collect();
        FieldMatrix {
            entries,
            ..self.clone()
        }
    }

    pub fn transpose(&self) -> FieldMatrix {
        let mut t = FieldMatrix::zeros(self.field, self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.set(c, r, self.get(r, c));
            }
        }
        t
    }

    pub fn mul(&self, other: &FieldMatrix) -> Result<FieldMatrix> {
        if self.cols != other.rows || self.field != other.field {
            return Err(Error::ShapeError(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let f = self.field;
        let mut out = FieldMatrix::zeros(f, self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(r, k);
                if a == 0 {
                    continue;
                }
                for c in 0..other.cols {
                    let v = f.add(out.get(r, c), f.mul(a, other.get(k, c)));
                    out.set(r, c, v);
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, x: &FieldVector) -> Result<FieldVector> {
        if self.cols != x.len() || self.field != x.field() {
            return Err(Error::ShapeError(format!(
                "cannot multiply {}x{} by vector of length {}",
                self.rows,
                self.cols,
                x.len()
            )));
        }
        let f = self.field;
        let entries = (0..self.rows)
            .map(|r| {
                self.row(r)
                    .iter()
                    .zip(x.as_slice())
                    .fold(0u64, |acc, (&a, &b)| f.add(acc, f.mul(a, b)))
            })
            .collect();
        Ok(FieldVector { field: f, entries })
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|&x| x == 0)
    }

    /// The submatrix picked out by `cols`, in their order (all rows).
    pub fn select_columns(&self, cols: &[usize]) -> FieldMatrix {
        let mut out = FieldMatrix::zeros(self.field, self.rows, cols.len());
        for r in 0..self.rows {
            for (j, &c) in cols.iter().enumerate() {
                out.set(r, j, self.get(r, c));
            }
        }
        out
    }

    pub fn select_rows(&self, rows: &[usize]) -> FieldMatrix {
        let mut out = FieldMatrix::zeros(self.field, rows.len(), self.cols);
        for (i, &r) in rows.iter().enumerate() {
            for c in 0..self.cols {
                out.set(i, c, self.get(r, c));
            }
        }
        out
    }

    /// Copies `block` into `self` with its top-left corner at (r0, c0).
    pub fn paste(&mut self, r0: usize, c0: usize, block: &FieldMatrix) {
        assert!(r0 + block.rows <= self.rows && c0 + block.cols <= self.cols);
        for r in 0..block.rows {
            for c in 0..block.cols {
                self.set(r0 + r, c0 + c, block.get(r, c));
            }
        }
    }

    /// Glues `other` to the right of `self`.
    pub fn hstack(&self, other: &FieldMatrix) -> Result<FieldMatrix> {
        if self.rows != other.rows || self.field != other.field {
            return Err(Error::ShapeError("hstack row mismatch".into()));
        }
        let mut out = FieldMatrix::zeros(self.field, self.rows, self.cols + other.cols);
        out.paste(0, 0, self);
        out.paste(0, self.cols, other);
        Ok(out)
    }

    /// Reduced row-echelon form: returns (rref, rank, pivot columns).
    /// Row space is preserved; pivot entries are 1 with zeros above and
    /// below.
    pub fn rref(&self) -> (FieldMatrix, usize, Vec<usize>) {
        let f = self.field;
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut lead = 0usize;
        for col in 0..m.cols {
            if lead >= m.rows {
                break;
            }
            let Some(pivot_row) = (lead..m.rows).find(|&r| m.get(r, col) != 0) else {
                continue;
            };
            m.swap_rows(lead, pivot_row);
            let inv = f.inv(m.get(lead, col)).expect("pivot is nonzero");
            m.scale_row(lead, inv);
            for r in 0..m.rows {
                if r != lead {
                    let factor = m.get(r, col);
                    if factor != 0 {
                        m.subtract_scaled_row(r, lead, factor);
                    }
                }
            }
            pivots.push(col);
            lead += 1;
        }
        let rank = pivots.len();
        (m, rank, pivots)
    }

    pub fn rank(&self) -> usize {
        self.rref().1
    }

    /// Determinant of a square matrix, by Gaussian elimination.
    pub fn determinant(&self) -> Result<u64> {
        if self.rows != self.cols {
            return Err(Error::ShapeError("determinant of non-square matrix".into()));
        }
        let f = self.field;
        let n = self.rows;
        if n == 0 {
            return Ok(1 % f.modulus());
        }
        let mut m = self.clone();
        let mut det = 1 % f.modulus();
        for col in 0..n {
            let Some(pivot_row) = (col..n).find(|&r| m.get(r, col) != 0) else {
                return Ok(0);
            };
            if pivot_row != col {
                m.swap_rows(col, pivot_row);
                det = f.neg(det);
            }
            let pivot = m.get(col, col);
            det = f.mul(det, pivot);
            let inv = f.inv(pivot).expect("pivot is nonzero");
            for r in col + 1..n {
                let factor = f.mul(m.get(r, col), inv);
                if factor != 0 {
                    m.subtract_scaled_row(r, col, factor);
                }
            }
        }
        Ok(det)
    }

    /// Canonical basis (as rows) of `{ v : self * v^T = 0 }`, built from
    /// the RREF so the identity block sits on the non-pivot columns.
    pub fn null_space(&self) -> FieldMatrix {
        let f = self.field;
        let (rref, rank, pivots) = self.rref();
        let free: Vec<usize> = (0..self.cols).filter(|c| !pivots.contains(c)).collect();
        let mut basis = FieldMatrix::zeros(f, self.cols - rank, self.cols);
        for (i, &fc) in free.iter().enumerate() {
            basis.set(i, fc, 1);
            for (r, &pc) in pivots.iter().enumerate() {
                basis.set(i, pc, f.neg(rref.get(r, fc)));
            }
        }
        basis
    }

    /// Solves `self * X = rhs` exactly, taking free variables as zero.
    /// Returns `None` when the system is inconsistent.
    pub fn solve(&self, rhs: &FieldMatrix) -> Result<Option<FieldMatrix>> {
        if self.rows != rhs.rows || self.field != rhs.field {
            return Err(Error::ShapeError("solve shape mismatch".into()));
        }
        let aug = self.hstack(rhs)?;
        let (r, _, pivots) = aug.rref();
        if pivots.iter().any(|&c| c >= self.cols) {
            return Ok(None);
        }
        let mut x = FieldMatrix::zeros(self.field, self.cols, rhs.cols);
        for (row, &pc) in pivots.iter().enumerate() {
            for c in 0..rhs.cols {
                x.set(pc, c, r.get(row, self.cols + c));
            }
        }
        Ok(Some(x))
    }

    /// True iff every maximal square submatrix (choose `rows` of the
    /// columns) is invertible. Exhaustive over all column choices.
    pub fn is_mds(&self) -> Result<bool> {
        if self.rows > self.cols {
            return Err(Error::ShapeError(format!(
                "MDS predicate needs rows <= cols, got {}x{}",
                self.rows, self.cols
            )));
        }
        if self.rows == 0 {
            return Ok(true);
        }
        for cols in (0..self.cols).combinations(self.rows) {
            if self.select_columns(&cols).determinant()? == 0 {
                return Ok(false);
            }
        }
        Ok(true)
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for c in 0..self.cols {
            self.entries.swap(a * self.cols + c, b * self.cols + c);
        }
    }

    fn scale_row(&mut self, r: usize, a: u64) {
        let f = self.field;
        for c in 0..self.cols {
            let v = f.mul(self.get(r, c), a);
            self.set(r, c, v);
        }
    }

    /// row[r] -= factor * row[src]
    fn subtract_scaled_row(&mut self, r: usize, src: usize, factor: u64) {
        let f = self.field;
        for c in 0..self.cols {
            let v = f.sub(self.get(r, c), f.mul(factor, self.get(src, c)));
            self.set(r, c, v);
        }
    }
}

impl std::fmt::Display for FieldMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for r in 0..self.rows {
            writeln!(f, "[{}]", self.row(r).iter().join(" "))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f13() -> PrimeField {
        PrimeField::new(13).unwrap()
    }

    #[test]
    fn rref_identity_and_proportional_rows() {
        let id = FieldMatrix::identity(f13(), 2);
        let (r, rank, pivots) = id.rref();
        assert_eq!(r, id);
        assert_eq!(rank, 2);
        assert_eq!(pivots, vec![0, 1]);

        let m = FieldMatrix::from_rows(f13(), &[&[1, 2], &[2, 4]]).unwrap();
        assert_eq!(m.rank(), 1);
    }

    #[test]
    fn null_space_annihilates() {
        let m = FieldMatrix::from_rows(f13(), &[&[1, 2, 3], &[0, 1, 4]]).unwrap();
        let n = m.null_space();
        assert_eq!(n.rows(), 1);
        assert!(m.mul(&n.transpose()).unwrap().is_zero());
    }

    #[test]
    fn solve_consistent_and_inconsistent() {
        let f = f13();
        let a = FieldMatrix::from_rows(f, &[&[1, 0], &[0, 1], &[1, 1]]).unwrap();
        let b = FieldMatrix::from_rows(f, &[&[2], &[3], &[5]]).unwrap();
        let x = a.solve(&b).unwrap().unwrap();
        assert_eq!(a.mul(&x).unwrap(), b);

        let bad = FieldMatrix::from_rows(f, &[&[2], &[3], &[6]]).unwrap();
        assert!(a.solve(&bad).unwrap().is_none());
    }

    #[test]
    fn mds_examples() {
        let f = f13();
        assert!(FieldMatrix::identity(f, 2).is_mds().unwrap());
        let row = FieldMatrix::from_rows(f, &[&[1, 0, 2]]).unwrap();
        assert!(!row.is_mds().unwrap());
        let tall = FieldMatrix::zeros(f, 3, 2);
        assert!(matches!(tall.is_mds(), Err(Error::ShapeError(_))));
        let empty = FieldMatrix::zeros(f, 0, 4);
        assert!(empty.is_mds().unwrap());
    }

    #[test]
    fn determinant_matches_cofactor_expansion() {
        // independent oracle: Laplace expansion along the first row
        fn laplace(m: &FieldMatrix) -> u64 {
            let f = m.field();
            let n = m.rows();
            if n == 0 {
                return 1 % f.modulus();
            }
            if n == 1 {
                return m.get(0, 0);
            }
            let mut acc = 0u64;
            for j in 0..n {
                let cols: Vec<usize> = (0..n).filter(|&c| c != j).collect();
                let rows: Vec<usize> = (1..n).collect();
                let sub = m.select_rows(&rows).select_columns(&cols);
                let term = f.mul(m.get(0, j), laplace(&sub));
                acc = if j % 2 == 0 {
                    f.add(acc, term)
                } else {
                    f.sub(acc, term)
                };
            }
            acc
        }
        use rand::SeedableRng;
        let f = f13();
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(7);
        for n in 1..=4 {
            for _ in 0..50 {
                let flat: Vec<u64> = (0..n * n).map(|_| f.sample(&mut rng)).collect();
                let m = FieldMatrix::from_flat(f, n, n, &flat).unwrap();
                assert_eq!(m.determinant().unwrap(), laplace(&m));
            }
        }
    }

    #[test]
    fn vector_restrict_orders() {
        let v = FieldVector::new(f13(), vec![5, 6, 7, 8]);
        assert_eq!(v.restrict(&[2, 0]).as_slice(), &[7, 5]);
    }
}
