//! Code-level constructions on MDS matrices: dual (parity-check)
//! computation, length extension with pinned column positions, generator
//! recovery from a parity-check matrix, and the composite construction
//! that embeds a target generator inside a longer MDS code.

use rand::Rng;

use crate::error::{Error, Result};
use crate::field::PrimeField;
use crate::matrix::FieldMatrix;
use crate::sample::random_invertible;

/// Attempt cap per free column when extending an MDS matrix.
pub const DEFAULT_COLUMN_RETRY_CAP: usize = 10_000;

/// Full restarts of the free-column fill before giving up. A fill can
/// dead-end even when an extension exists (over small fields the
/// column-by-column choices can reach a set with no valid next
/// column), and a fresh pass almost always escapes.
pub const DEFAULT_EXTEND_RESTARTS: usize = 64;

/// Column spaces up to this size are enumerated exhaustively when
/// random tries run out, which separates "valid candidates are rare"
/// from "no valid candidate exists".
const ENUMERATION_LIMIT: u64 = 1 << 21;

/// Parity-check matrix of the code generated by an MDS matrix `v`
/// (L x D): returns the canonical (D-L) x D matrix with `v * out^T = 0`,
/// assembled from the RREF of `v` so the identity block sits on the
/// non-pivot columns. The dual of an MDS code is MDS, so the result
/// passes the MDS predicate as well.
pub fn parity_check(v: &FieldMatrix) -> Result<FieldMatrix> {
    if !v.is_mds()? {
        return Err(Error::NotMds);
    }
    let lambda = v.null_space();
    debug_assert!(v.mul(&lambda.transpose()).unwrap().is_zero());
    Ok(lambda)
}

/// Extends an MDS matrix to length `len`, pinning column `j` of `pinned`
/// at position `positions[j]` and filling the remaining columns with
/// random values, one column at a time, rejecting any candidate that
/// zeroes a maximal minor. The result restricted to `positions` equals
/// `pinned` exactly and is MDS.
pub fn extend_mds_pinned<R: Rng + ?Sized>(
    pinned: &FieldMatrix,
    len: usize,
    positions: &[usize],
    rng: &mut R,
) -> Result<FieldMatrix> {
    extend_mds_pinned_with_cap(pinned, len, positions, rng, DEFAULT_COLUMN_RETRY_CAP)
}

pub fn extend_mds_pinned_with_cap<R: Rng + ?Sized>(
    pinned: &FieldMatrix,
    len: usize,
    positions: &[usize],
    rng: &mut R,
    cap: usize,
) -> Result<FieldMatrix> {
    let field = pinned.field();
    let a = pinned.rows();
    let b = pinned.cols();
    if positions.len() != b {
        return Err(Error::ShapeError(format!(
            "{b} pinned columns but {} positions",
            positions.len()
        )));
    }
    if len < b || positions.iter().any(|&p| p >= len) {
        return Err(Error::ShapeError(format!(
            "positions must be distinct indices below target length {len}"
        )));
    }
    {
        let mut seen = vec![false; len];
        for &p in positions {
            if seen[p] {
                return Err(Error::ShapeError("pinned positions collide".into()));
            }
            seen[p] = true;
        }
    }
    if !pinned.is_mds()? {
        return Err(Error::NotMds);
    }

    let mut base = FieldMatrix::zeros(field, a, len);
    let mut pinned_cols: Vec<usize> = Vec::with_capacity(len);
    for (j, &p) in positions.iter().enumerate() {
        for r in 0..a {
            base.set(r, p, pinned.get(r, j));
        }
        pinned_cols.push(p);
    }
    let free: Vec<usize> = (0..len).filter(|c| !pinned_cols.contains(c)).collect();

    for _ in 0..DEFAULT_EXTEND_RESTARTS {
        let mut out = base.clone();
        let mut placed = pinned_cols.clone();
        let mut dead_end = false;
        for &col in &free {
            if !fill_column(&mut out, &placed, col, rng, cap) {
                dead_end = true;
                break;
            }
            placed.push(col);
        }
        if !dead_end {
            return Ok(out);
        }
    }
    Err(Error::SamplingExhausted(cap))
}

/// Fills one column so every maximal minor stays nonzero: random tries
/// first, then (for small column spaces) a uniform pick among the
/// exhaustively enumerated valid candidates. False means no valid
/// candidate exists and the caller must restart the fill.
fn fill_column<R: Rng + ?Sized>(
    out: &mut FieldMatrix,
    placed: &[usize],
    col: usize,
    rng: &mut R,
    cap: usize,
) -> bool {
    let field = out.field();
    let a = out.rows();
    for _ in 0..cap {
        for r in 0..a {
            out.set(r, col, field.sample(rng));
        }
        if column_keeps_mds(out, placed, col) {
            return true;
        }
    }
    let p = field.modulus();
    let space = p.checked_pow(a as u32).unwrap_or(u64::MAX);
    if space > ENUMERATION_LIMIT {
        return false;
    }
    let mut valid = Vec::new();
    for code in 0..space {
        let mut v = code;
        for r in 0..a {
            out.set(r, col, v % p);
            v /= p;
        }
        if column_keeps_mds(out, placed, col) {
            valid.push(code);
        }
    }
    if valid.is_empty() {
        return false;
    }
    let mut code = valid[rng.gen_range(0..valid.len())];
    for r in 0..a {
        out.set(r, col, code % p);
        code /= p;
    }
    true
}

/// Checks every maximal minor that involves `candidate` together with
/// already-placed columns. The placed set is MDS by induction, so this
/// is the only new obligation.
fn column_keeps_mds(m: &FieldMatrix, placed: &[usize], candidate: usize) -> bool {
    use itertools::Itertools;
    let a = m.rows();
    if a == 0 {
        return true;
    }
    if a == 1 {
        return m.get(0, candidate) != 0;
    }
    for others in placed.iter().copied().combinations(a - 1) {
        let mut cols = others;
        cols.push(candidate);
        if m.select_columns(&cols).determinant().unwrap() == 0 {
            return false;
        }
    }
    true
}

/// Generator matrix of the code whose parity-check matrix is `h`
/// (a x n, full row rank): returns the canonical (n-a) x n basis of the
/// null space, so `out * h^T = 0`. When `h` is MDS the null space is an
/// MDS code, hence the result is MDS under any basis.
pub fn generator_from_parity(h: &FieldMatrix) -> Result<FieldMatrix> {
    if h.rank() != h.rows() {
        return Err(Error::RankError);
    }
    let g = h.null_space();
    debug_assert!(g.mul(&h.transpose()).unwrap().is_zero());
    Ok(g)
}

/// Builds an (L+R) x (D+R) MDS generator whose row space contains, for
/// each row of `v` (L x D MDS), a vector that vanishes outside
/// `positions` and equals that row on `positions` (in their order).
///
/// Pipeline: parity-check of `v`, extension of the parity matrix to
/// length `d + r` pinned at `positions`, then a generator of the code
/// that extension defines, with the basis scrambled by a random
/// invertible left factor.
pub fn embed_mds_generator<R: Rng + ?Sized>(
    v: &FieldMatrix,
    len: usize,
    positions: &[usize],
    rng: &mut R,
) -> Result<FieldMatrix> {
    let lambda = parity_check(v)?;
    let h = extend_mds_pinned(&lambda, len, positions, rng)?;
    let g = generator_from_parity(&h)?;
    let basis = random_invertible(v.field(), g.rows(), rng, DEFAULT_COLUMN_RETRY_CAP)?;
    basis.mul(&g)
}

/// The L x len matrix that carries `v` on `positions` (in order) and is
/// zero elsewhere; the demand rows the embedded generator must span.
pub fn spread_columns(v: &FieldMatrix, len: usize, positions: &[usize]) -> FieldMatrix {
    let mut u = FieldMatrix::zeros(v.field(), v.rows(), len);
    for (j, &p) in positions.iter().enumerate() {
        for r in 0..v.rows() {
            u.set(r, p, v.get(r, j));
        }
    }
    u
}

/// Solves `e * g = target` for `e`; `None` when the rows of `target` are
/// not in the row space of `g`.
pub fn solve_combination(g: &FieldMatrix, target: &FieldMatrix) -> Result<Option<FieldMatrix>> {
    let x = g.transpose().solve(&target.transpose())?;
    Ok(x.map(|m| m.transpose()))
}

/// Systematic parity check for reference: for `v = [I | a]`, the dual is
/// `[-a^T | I]`.
pub fn systematic_parity(field: PrimeField, a: &FieldMatrix) -> FieldMatrix {
    let l = a.rows();
    let r = a.cols();
    let mut out = FieldMatrix::zeros(field, r, l + r);
    for i in 0..r {
        for j in 0..l {
            out.set(i, j, field.neg(a.get(j, i)));
        }
        out.set(i, l + i, 1);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample::{sample_mds, MdsSampler};
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn f13() -> PrimeField {
        PrimeField::new(13).unwrap()
    }

    #[test]
    fn parity_of_systematic_form() {
        let f = f13();
        // [I | a] with an MDS-completing a
        let a = FieldMatrix::from_rows(f, &[&[1, 1], &[1, 2]]).unwrap();
        let v = FieldMatrix::identity(f, 2).hstack(&a).unwrap();
        assert!(v.is_mds().unwrap());
        let lambda = parity_check(&v).unwrap();
        assert_eq!(lambda, systematic_parity(f, &a));
        assert!(v.mul(&lambda.transpose()).unwrap().is_zero());
    }

    #[test]
    fn parity_rejects_non_mds() {
        let f = f13();
        let v = FieldMatrix::from_rows(f, &[&[1, 0, 0], &[0, 1, 0]]).unwrap();
        assert_eq!(parity_check(&v), Err(Error::NotMds));
    }

    #[test]
    fn parity_matches_brute_force_null_space() {
        // oracle: enumerate all of F_13^5 and collect the kernel
        let f = f13();
        let mut rng = ChaCha20Rng::seed_from_u64(21);
        let v = sample_mds(f, 2, 5, MdsSampler::Grs, &mut rng).unwrap();
        let lambda = parity_check(&v).unwrap();
        assert_eq!(lambda.rows(), 3);
        assert_eq!(lambda.rank(), 3);
        assert!(lambda.is_mds().unwrap());

        let p = 13u64;
        let mut kernel = Vec::new();
        for code in 0..p.pow(5) {
            let mut x = code;
            let vals: Vec<u64> = (0..5)
                .map(|_| {
                    let v = x % p;
                    x /= p;
                    v
                })
                .collect();
            let vec = crate::matrix::FieldVector::new(f, vals);
            if v.mul_vec(&vec).unwrap().as_slice().iter().all(|&e| e == 0) {
                kernel.push(vec);
            }
        }
        assert_eq!(kernel.len(), 13usize.pow(3));
        for r in 0..lambda.rows() {
            let row = crate::matrix::FieldVector::new(f, lambda.row(r).to_vec());
            assert!(kernel.contains(&row));
        }
    }

    #[test]
    fn extend_preserves_pins_and_mds() {
        let f = f13();
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let lambda = sample_mds(f, 2, 4, MdsSampler::Grs, &mut rng).unwrap();
        let positions = [1usize, 3, 4, 6];
        let h = extend_mds_pinned(&lambda, 7, &positions, &mut rng).unwrap();
        for (j, &p) in positions.iter().enumerate() {
            for r in 0..2 {
                assert_eq!(h.get(r, p), lambda.get(r, j));
            }
        }
        assert!(h.is_mds().unwrap());
    }

    #[test]
    fn extend_no_free_columns_is_identity_op() {
        let f = f13();
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        let lambda = sample_mds(f, 2, 4, MdsSampler::Grs, &mut rng).unwrap();
        let h = extend_mds_pinned(&lambda, 4, &[0, 1, 2, 3], &mut rng).unwrap();
        assert_eq!(h, lambda);
    }

    #[test]
    fn extend_single_row() {
        let f = f13();
        let mut rng = ChaCha20Rng::seed_from_u64(8);
        let lambda = FieldMatrix::from_rows(f, &[&[1]]).unwrap();
        let h = extend_mds_pinned(&lambda, 3, &[0], &mut rng).unwrap();
        assert_eq!(h.get(0, 0), 1);
        assert_ne!(h.get(0, 1), 0);
        assert_ne!(h.get(0, 2), 0);
    }

    #[test]
    fn generator_of_systematic_parity() {
        let f = f13();
        let h = FieldMatrix::identity(f, 2).hstack(&FieldMatrix::zeros(f, 2, 3)).unwrap();
        let g = generator_from_parity(&h).unwrap();
        let expected = FieldMatrix::zeros(f, 3, 2)
            .hstack(&FieldMatrix::identity(f, 3))
            .unwrap();
        assert_eq!(g, expected);
    }

    #[test]
    fn generator_rejects_rank_deficient() {
        let f = f13();
        let h = FieldMatrix::from_rows(f, &[&[1, 2, 3], &[2, 4, 6]]).unwrap();
        assert_eq!(generator_from_parity(&h), Err(Error::RankError));
    }

    #[test]
    fn generator_matches_brute_force_oracle() {
        let f = f13();
        let mut rng = ChaCha20Rng::seed_from_u64(31);
        let h = sample_mds(f, 2, 5, MdsSampler::Grs, &mut rng).unwrap();
        let g = generator_from_parity(&h).unwrap();
        assert_eq!(g.rows(), 3);
        assert_eq!(g.rank(), 3);
        assert!(g.mul(&h.transpose()).unwrap().is_zero());
        assert!(g.is_mds().unwrap());
    }

    #[test]
    fn embed_spans_demand_rows() {
        let f = f13();
        for seed in 0..25u64 {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            // (L, D, R) = (2, 3, 1): embed a 2x3 MDS inside a 3x4 code
            let v = sample_mds(f, 2, 3, MdsSampler::Grs, &mut rng).unwrap();
            let positions = crate::sample::random_subset(&mut rng, 4, 3);
            let g = embed_mds_generator(&v, 4, &positions, &mut rng).unwrap();
            assert_eq!(g.rows(), 3);
            assert!(g.is_mds().unwrap());
            let u = spread_columns(&v, 4, &positions);
            let e = solve_combination(&g, &u).unwrap().expect("rows must be spanned");
            assert_eq!(e.mul(&g).unwrap(), u);
        }
    }

    #[test]
    fn embed_square_degenerate() {
        // L = D: the parity matrix is empty and the row space is everything
        let f = f13();
        let mut rng = ChaCha20Rng::seed_from_u64(12);
        let v = sample_mds(f, 3, 3, MdsSampler::Grs, &mut rng).unwrap();
        let g = embed_mds_generator(&v, 3, &[0, 1, 2], &mut rng).unwrap();
        assert_eq!(g.rows(), 3);
        assert_ne!(g.determinant().unwrap(), 0);
        // same row space: v solves against g and vice versa
        assert!(solve_combination(&g, &v).unwrap().is_some());
        assert!(solve_combination(&v, &g).unwrap().is_some());
    }

    #[test]
    fn parity_identities_random_shapes() {
        let f = f13();
        for seed in 0..100u64 {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            let v = sample_mds(f, 2, 5, MdsSampler::Grs, &mut rng).unwrap();
            let lambda = parity_check(&v).unwrap();
            assert!(v.mul(&lambda.transpose()).unwrap().is_zero());
            assert_eq!(lambda.rank(), 3);
        }
    }
}
