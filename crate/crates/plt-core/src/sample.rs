//! Randomized matrix constructions: Cauchy matrices, guaranteed-MDS
//! sampling via generalized Reed-Solomon structure, and plain
//! uniform-rejection sampling.

use rand::Rng;

use crate::error::{Error, Result};
use crate::field::PrimeField;
use crate::matrix::FieldMatrix;

/// Attempt cap for uniform-rejection MDS sampling.
pub const DEFAULT_REJECTION_CAP: usize = 100_000;

/// How MDS matrices are drawn.
///
/// `Grs` builds a generalized Reed-Solomon generator (distinct evaluation
/// points, nonzero column multipliers) and scrambles its basis with a
/// random invertible left factor; every maximal minor is nonzero by
/// construction. `UniformRejection` draws uniform matrices and keeps the
/// first one that passes the exhaustive MDS predicate, which makes the
/// output uniform over all MDS matrices of that shape but is only viable
/// at small sizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MdsSampler {
    Grs,
    UniformRejection,
}

/// The m x t matrix with entry (i, j) = (x_i - y_j)^{-1}.
///
/// All points must be pairwise distinct across the union of `x` and `y`;
/// the result is then super-regular (every square submatrix invertible).
pub fn cauchy_matrix(field: PrimeField, x: &[u64], y: &[u64]) -> Result<FieldMatrix> {
    let mut seen = Vec::with_capacity(x.len() + y.len());
    for &v in x.iter().chain(y) {
        let v = field.reduce(v);
        if seen.contains(&v) {
            return Err(Error::DegeneratePoints);
        }
        seen.push(v);
    }
    let mut m = FieldMatrix::zeros(field, x.len(), y.len());
    for (i, &xi) in x.iter().enumerate() {
        for (j, &yj) in y.iter().enumerate() {
            let diff = field.sub(field.reduce(xi), field.reduce(yj));
            m.set(i, j, field.inv(diff)?);
        }
    }
    Ok(m)
}

/// Draws a `rows x cols` MDS matrix.
pub fn sample_mds<R: Rng + ?Sized>(
    field: PrimeField,
    rows: usize,
    cols: usize,
    mode: MdsSampler,
    rng: &mut R,
) -> Result<FieldMatrix> {
    sample_mds_with_cap(field, rows, cols, mode, rng, DEFAULT_REJECTION_CAP)
}

pub fn sample_mds_with_cap<R: Rng + ?Sized>(
    field: PrimeField,
    rows: usize,
    cols: usize,
    mode: MdsSampler,
    rng: &mut R,
    cap: usize,
) -> Result<FieldMatrix> {
    if rows > cols {
        return Err(Error::ShapeError(format!(
            "MDS sampling needs rows <= cols, got {rows}x{cols}"
        )));
    }
    if rows == 0 {
        return Ok(FieldMatrix::zeros(field, 0, cols));
    }
    match mode {
        MdsSampler::Grs => {
            if cols as u64 > field.modulus() {
                return Err(Error::FieldTooSmall(format!(
                    "GRS mode needs {cols} distinct evaluation points in F_{}",
                    field.modulus()
                )));
            }
            let points = field.sample_distinct(rng, cols)?;
            let mut g = FieldMatrix::zeros(field, rows, cols);
            for (j, &w) in points.iter().enumerate() {
                let gamma = field.sample_nonzero(rng);
                let mut pw = gamma;
                for i in 0..rows {
                    g.set(i, j, pw);
                    pw = field.mul(pw, w);
                }
            }
            let basis = random_invertible(field, rows, rng, cap)?;
            basis.mul(&g)
        }
        MdsSampler::UniformRejection => {
            for _ in 0..cap {
                let flat: Vec<u64> = (0..rows * cols).map(|_| field.sample(rng)).collect();
                let m = FieldMatrix::from_flat(field, rows, cols, &flat)?;
                if m.is_mds()? {
                    return Ok(m);
                }
            }
            Err(Error::SamplingExhausted(cap))
        }
    }
}

/// Uniform invertible n x n matrix, by rejection on the determinant.
pub fn random_invertible<R: Rng + ?Sized>(
    field: PrimeField,
    n: usize,
    rng: &mut R,
    cap: usize,
) -> Result<FieldMatrix> {
    for _ in 0..cap {
        let flat: Vec<u64> = (0..n * n).map(|_| field.sample(rng)).collect();
        let m = FieldMatrix::from_flat(field, n, n, &flat)?;
        if m.determinant()? != 0 {
            return Ok(m);
        }
    }
    Err(Error::SamplingExhausted(cap))
}

/// Uniform k-subset of `0..n`, returned sorted ascending.
pub fn random_subset<R: Rng + ?Sized>(rng: &mut R, n: usize, k: usize) -> Vec<usize> {
    assert!(k <= n);
    let mut pool: Vec<usize> = (0..n).collect();
    for i in 0..k {
        let j = rng.gen_range(i..n);
        pool.swap(i, j);
    }
    let mut chosen = pool[..k].to_vec();
    chosen.sort_unstable();
    chosen
}

/// Uniform permutation of `0..n` (Fisher-Yates).
pub fn random_permutation<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.gen_range(0..=i);
        perm.swap(i, j);
    }
    perm
}
