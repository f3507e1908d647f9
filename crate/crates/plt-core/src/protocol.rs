//! The query protocol: a user who wants L linear combinations of D out
//! of K stored messages sends a block-diagonal coefficient matrix G and
//! a permutation of the message indices; the server returns y = G times
//! the permuted message vector; the user recovers the demand from a
//! fixed combination of answer rows.
//!
//! The columns of G are split into `partition_blocks` leading blocks of
//! width D and one trailing block of width D + R (R = K mod D). One
//! block is selected at random, with probability proportional to its
//! width, to carry the demand. With S = gcd(D+R, R) the trailing block
//! takes one of two shapes:
//!
//! * L <= S (`Aligned`): an L(R/S + 1)-row block built from S-wide
//!   column strips of an MDS matrix; `replicated` strips are repeated
//!   into every row-block with Cauchy weights and the remaining strips
//!   sit on a block diagonal. When the demand lands here, its strips
//!   are hidden among the others and the weights are solved so that one
//!   fixed combination of row-blocks cancels every decoy strip and
//!   leaves every demand strip with coefficient one.
//! * L > S (`Embedded`): an (L+R)-row generator of a [D+R, L+R] MDS
//!   code whose row space contains the demand rows placed on a random
//!   D-subset of positions.
//!
//! Randomness is consumed from the caller's RNG in a fixed order:
//! support shuffle, block selection, partition decoys (ascending block
//! index), trailing-block construction, then permutation fill over the
//! ascending non-demand indices. Every draw can be replaced through
//! [`QueryOverrides`], which is how the golden replays inject fixed
//! values.

use rand::Rng;

use crate::error::{Error, Result};
use crate::field::PrimeField;
use crate::matrix::{FieldMatrix, FieldVector};
use crate::mds::{
    extend_mds_pinned, generator_from_parity, parity_check, solve_combination, spread_columns,
};
use crate::sample::{
    cauchy_matrix, random_invertible, random_permutation, random_subset, sample_mds, MdsSampler,
    DEFAULT_REJECTION_CAP,
};

/// A demand: the support set W (sorted, 0-based) and the L x D MDS
/// coefficient matrix V; the user wants Z = V * X_W.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Demand {
    k: usize,
    support: Vec<usize>,
    coeffs: FieldMatrix,
}

impl Demand {
    pub fn new(k: usize, support: Vec<usize>, coeffs: FieldMatrix) -> Result<Self> {
        let d = support.len();
        let l = coeffs.rows();
        if l < 1 || l > d || d > k {
            return Err(Error::InvalidParameters(format!(
                "need 1 <= L <= D <= K, got K={k} D={d} L={l}"
            )));
        }
        if coeffs.cols() != d {
            return Err(Error::ShapeError(format!(
                "coefficient matrix is {}x{}, support has {d} indices",
                coeffs.rows(),
                coeffs.cols()
            )));
        }
        if support.windows(2).any(|w| w[0] >= w[1]) || support.iter().any(|&i| i >= k) {
            return Err(Error::InvalidParameters(
                "support must be strictly increasing indices below K".into(),
            ));
        }
        if !coeffs.is_mds()? {
            return Err(Error::NotMds);
        }
        Ok(Demand { k, support, coeffs })
    }

    /// Uniform random demand: W a uniform D-subset, V drawn by `mode`.
    pub fn random<R: Rng + ?Sized>(
        field: PrimeField,
        k: usize,
        d: usize,
        l: usize,
        mode: MdsSampler,
        rng: &mut R,
    ) -> Result<Self> {
        let support = random_subset(rng, k, d);
        let coeffs = sample_mds(field, l, d, mode, rng)?;
        Demand::new(k, support, coeffs)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn d(&self) -> usize {
        self.support.len()
    }

    pub fn l(&self) -> usize {
        self.coeffs.rows()
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn coeffs(&self) -> &FieldMatrix {
        &self.coeffs
    }

    pub fn field(&self) -> PrimeField {
        self.coeffs.field()
    }

    /// Direct evaluation Z = V * X_W; the oracle every recovery test
    /// compares against.
    pub fn evaluate(&self, x: &FieldVector) -> Result<FieldVector> {
        if x.len() != self.k {
            return Err(Error::ShapeError(format!(
                "message vector has length {}, expected {}",
                x.len(),
                self.k
            )));
        }
        self.coeffs.mul_vec(&x.restrict(&self.support))
    }
}

/// Shape of the trailing block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProtocolCase {
    /// L <= S. `replicated` strips (t) appear in every row-block with
    /// Cauchy weights; `row_blocks` strips (m) sit on the diagonal.
    Aligned { replicated: usize, row_blocks: usize },
    /// L > S. The trailing block is an embedded-generator MDS code.
    Embedded,
}

/// Column/row geometry of the query matrix for one (K, D, L).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockLayout {
    k: usize,
    d: usize,
    l: usize,
    r: usize,
    strip_width: usize,
    partition_blocks: usize,
    last_rows: usize,
    case: ProtocolCase,
}

impl BlockLayout {
    pub fn new(k: usize, d: usize, l: usize) -> Result<Self> {
        if l < 1 || l > d || d > k {
            return Err(Error::InvalidParameters(format!(
                "need 1 <= L <= D <= K, got K={k} D={d} L={l}"
            )));
        }
        let r = k % d;
        let s = if r == 0 {
            d
        } else {
            num_integer::gcd(d + r, r)
        };
        let n = k / d - 1;
        let (case, last_rows) = if l <= s {
            let t = d / s - 1;
            let m = r / s + 1;
            (
                ProtocolCase::Aligned {
                    replicated: t,
                    row_blocks: m,
                },
                l * m,
            )
        } else {
            (ProtocolCase::Embedded, l + r)
        };
        Ok(BlockLayout {
            k,
            d,
            l,
            r,
            strip_width: s,
            partition_blocks: n,
            last_rows,
            case,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }
    pub fn d(&self) -> usize {
        self.d
    }
    pub fn l(&self) -> usize {
        self.l
    }
    pub fn r(&self) -> usize {
        self.r
    }
    pub fn strip_width(&self) -> usize {
        self.strip_width
    }
    /// Number of leading D-wide blocks (one less than floor(K/D)).
    pub fn partition_blocks(&self) -> usize {
        self.partition_blocks
    }
    pub fn case(&self) -> ProtocolCase {
        self.case
    }
    pub fn last_rows(&self) -> usize {
        self.last_rows
    }
    pub fn last_cols(&self) -> usize {
        self.d + self.r
    }
    pub fn last_col_start(&self) -> usize {
        self.partition_blocks * self.d
    }
    pub fn last_row_start(&self) -> usize {
        self.partition_blocks * self.l
    }
    pub fn total_rows(&self) -> usize {
        self.partition_blocks * self.l + self.last_rows
    }

    /// Column span of block `i` (the trailing block is index
    /// `partition_blocks`).
    pub fn block_cols(&self, i: usize) -> std::ops::Range<usize> {
        if i < self.partition_blocks {
            i * self.d..(i + 1) * self.d
        } else {
            self.last_col_start()..self.k
        }
    }

    pub fn block_rows(&self, i: usize) -> std::ops::Range<usize> {
        if i < self.partition_blocks {
            i * self.l..(i + 1) * self.l
        } else {
            self.last_row_start()..self.total_rows()
        }
    }

    /// Structural region of a column: one class per leading block, and
    /// in the aligned case one class per strip of the trailing block.
    pub fn region_class(&self, col: usize) -> usize {
        let n = self.partition_blocks;
        if col < n * self.d {
            col / self.d
        } else {
            match self.case {
                ProtocolCase::Aligned { .. } => n + (col - n * self.d) / self.strip_width,
                ProtocolCase::Embedded => n,
            }
        }
    }

    pub fn region_count(&self) -> usize {
        match self.case {
            ProtocolCase::Aligned {
                replicated,
                row_blocks,
            } => self.partition_blocks + replicated + row_blocks,
            ProtocolCase::Embedded => self.partition_blocks + 1,
        }
    }

    /// Picks the demand-carrying block: each leading block with
    /// probability D/K, the trailing block with probability (D+R)/K.
    pub fn select_block<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u = rng.gen_range(0..self.k);
        (u / self.d).min(self.partition_blocks)
    }
}

/// A bijection on `0..k`, stored as the image array.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Permutation {
    images: Vec<usize>,
}

impl Permutation {
    pub fn new(images: Vec<usize>) -> Result<Self> {
        let k = images.len();
        let mut seen = vec![false; k];
        for &im in &images {
            if im >= k || seen[im] {
                return Err(Error::InvalidParameters(
                    "permutation images must be a bijection".into(),
                ));
            }
            seen[im] = true;
        }
        Ok(Permutation { images })
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn image(&self, l: usize) -> usize {
        self.images[l]
    }

    pub fn images(&self) -> &[usize] {
        &self.images
    }

    /// Scatters `x` so that out[image(l)] = x[l]; the server applies
    /// this before multiplying by the query matrix.
    pub fn scatter(&self, x: &FieldVector) -> FieldVector {
        assert_eq!(self.len(), x.len());
        let mut out = vec![0u64; x.len()];
        for (l, &im) in self.images.iter().enumerate() {
            out[im] = x.get(l);
        }
        FieldVector::new(x.field(), out)
    }
}

/// What the server receives.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Query {
    pub matrix: FieldMatrix,
    pub permutation: Permutation,
}

/// Recovery data for a demand hidden in the aligned trailing block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlignedFragments {
    /// Strips of the trailing block that carry the demand (sorted).
    pub demand_strips: Vec<usize>,
    /// (strip, coefficient) pairs over the diagonal demand strips; the
    /// demand is the c-weighted sum of the matching answer row-blocks.
    pub combiner: Vec<(usize, u64)>,
    /// Scale of every strip (the alpha values), all nonzero.
    pub strip_scales: Vec<u64>,
    /// Cauchy weight matrix (row_blocks x replicated).
    pub cauchy: FieldMatrix,
}

/// Recovery data for a demand embedded in the trailing MDS code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmbeddedFragments {
    /// Positions (within the trailing block) carrying the demand
    /// columns, sorted ascending.
    pub positions: Vec<usize>,
    /// L x (L+R) matrix with recovery = demand rows applied to the
    /// trailing answer slice.
    pub recovery: FieldMatrix,
}

/// How the demand comes back out of the answer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RecoveryBranch {
    /// Demand sits in a leading block: its answer rows are the demand.
    Direct,
    Aligned(AlignedFragments),
    Embedded(EmbeddedFragments),
}

/// Everything the user must remember to decode the answer. Never sent
/// to the server.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClientState {
    pub layout: BlockLayout,
    /// Index of the demand-carrying block (0-based; `partition_blocks`
    /// means the trailing block).
    pub chosen_block: usize,
    /// Support indices in shuffled order.
    pub shuffled_support: Vec<usize>,
    /// Coefficient matrix with columns in the same shuffled order.
    pub shuffled_coeffs: FieldMatrix,
    pub branch: RecoveryBranch,
}

/// Replaces individual random draws of query generation with fixed
/// values; any field left `None` falls back to the RNG.
#[derive(Debug, Clone, Default)]
pub struct QueryOverrides {
    /// Column order applied to (W, V): shuffled column j is original
    /// column `shuffle[j]`.
    pub shuffle: Option<Vec<usize>>,
    /// Demand-carrying block index.
    pub chosen_block: Option<usize>,
    /// Decoy matrices for the leading blocks that need one, ascending
    /// block order.
    pub partition_decoys: Option<Vec<FieldMatrix>>,
    /// Aligned branch: strips of the trailing block that carry the
    /// demand (sorted, len replicated+1).
    pub demand_strips: Option<Vec<usize>>,
    /// Aligned branch: columns for the non-demand strips, left to
    /// right, as one L x (row_blocks-1)*strip_width matrix.
    pub strip_completion: Option<FieldMatrix>,
    /// Aligned branch: the row_blocks x replicated weight matrix.
    pub cauchy_weights: Option<FieldMatrix>,
    /// Aligned branch: the free combiner coefficient (nonzero).
    pub combiner_seed: Option<u64>,
    /// Aligned branch: scales for the non-demand strips, in draw order
    /// (replicated decoy strips ascending, then leftover diagonal
    /// strips ascending); all nonzero.
    pub free_scales: Option<Vec<u64>>,
    /// Embedded branch: the D-subset of trailing positions.
    pub embed_positions: Option<Vec<usize>>,
    /// Embedded branch: parity-check matrix of the shuffled demand
    /// coefficients.
    pub parity: Option<FieldMatrix>,
    /// Embedded branch: the pinned extension of the parity matrix.
    pub pinned_extension: Option<FieldMatrix>,
    /// Embedded branch: the trailing generator used verbatim.
    pub last_block: Option<FieldMatrix>,
    /// Images for the non-demand indices, ascending index order.
    pub permutation_fill: Option<Vec<usize>>,
    /// Sampler for every internally drawn MDS matrix.
    pub decoy_sampler: Option<MdsSampler>,
}

impl QueryOverrides {
    fn sampler(&self) -> MdsSampler {
        self.decoy_sampler.unwrap_or(MdsSampler::Grs)
    }
}

/// Which content the trailing block carries.
#[derive(Debug, Clone, Copy)]
pub enum LastBlockBranch<'a> {
    /// The demand lives in a leading block; the trailing block is decoy.
    Decoy,
    /// The trailing block hides the (shuffled) demand coefficients.
    Demand(&'a FieldMatrix),
}

/// Solved alignment scales: the combiner coefficients over the diagonal
/// demand strips and the per-strip scale factors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlignmentSolution {
    pub combiner: Vec<(usize, u64)>,
    pub strip_scales: Vec<u64>,
}

/// Chooses combiner coefficients c and strip scales alpha so that the
/// c-weighted sum of the row-blocks cancels every non-demand strip and
/// scales every demand strip to exactly one.
///
/// `demand_strips` is the sorted set I of strip indices carrying the
/// demand (|I| = replicated + 1, indices in 0..replicated+row_blocks);
/// `cauchy` is the row_blocks x replicated weight matrix; `c_first`
/// seeds the combiner; `draw_scale` supplies the scales of the
/// remaining strips (must return nonzero values).
pub fn solve_alignment(
    replicated: usize,
    row_blocks: usize,
    demand_strips: &[usize],
    cauchy: &FieldMatrix,
    c_first: u64,
    mut draw_scale: impl FnMut() -> u64,
) -> Result<AlignmentSolution> {
    let t = replicated;
    let m = row_blocks;
    let field = cauchy.field();
    if cauchy.rows() != m || cauchy.cols() != t {
        return Err(Error::ShapeError(format!(
            "weight matrix is {}x{}, expected {m}x{t}",
            cauchy.rows(),
            cauchy.cols()
        )));
    }
    if demand_strips.len() != t + 1
        || demand_strips.windows(2).any(|w| w[0] >= w[1])
        || demand_strips.iter().any(|&i| i >= t + m)
    {
        return Err(Error::InvalidParameters(
            "demand strips must be a sorted (replicated+1)-subset of the strips".into(),
        ));
    }
    if c_first == 0 || c_first >= field.modulus() {
        return Err(Error::InvalidParameters(
            "combiner seed must be a nonzero residue".into(),
        ));
    }

    // Split the demand strips: those on the diagonal (>= t) drive the
    // combiner; only t replicated slots exist, so at least one demand
    // strip is diagonal.
    let diagonal: Vec<usize> = demand_strips.iter().copied().filter(|&i| i >= t).collect();
    let replicated_demand: Vec<usize> = demand_strips.iter().copied().filter(|&i| i < t).collect();
    let decoy_replicated: Vec<usize> = (0..t).filter(|i| !demand_strips.contains(i)).collect();
    let s_count = diagonal.len();
    debug_assert!(s_count >= 1);
    debug_assert_eq!(decoy_replicated.len(), s_count - 1);

    // Cancel each replicated decoy strip: the weighted Cauchy column
    // sums over the used row-blocks must vanish. With c[0] fixed the
    // remaining coefficients are the unique solution of a square
    // super-regular system.
    let mut combiner_vals = vec![0u64; s_count];
    combiner_vals[0] = c_first;
    if s_count > 1 {
        let mut lhs = FieldMatrix::zeros(field, s_count - 1, s_count - 1);
        let mut rhs = FieldMatrix::zeros(field, s_count - 1, 1);
        for (row, &j) in decoy_replicated.iter().enumerate() {
            for (col, &strip) in diagonal.iter().enumerate().skip(1) {
                lhs.set(row, col - 1, cauchy.get(strip - t, j));
            }
            rhs.set(
                row,
                0,
                field.neg(field.mul(c_first, cauchy.get(diagonal[0] - t, j))),
            );
        }
        if lhs.rank() != s_count - 1 {
            return Err(Error::DegeneratePoints);
        }
        let sol = lhs.solve(&rhs)?.ok_or(Error::DegeneratePoints)?;
        for i in 1..s_count {
            combiner_vals[i] = sol.get(i - 1, 0);
        }
    }
    if combiner_vals.iter().any(|&c| c == 0) {
        return Err(Error::DegeneratePoints);
    }

    let mut scales = vec![0u64; t + m];
    for &j in &decoy_replicated {
        scales[j] = draw_scale();
    }
    for strip in t..t + m {
        if !diagonal.contains(&strip) {
            scales[strip] = draw_scale();
        }
    }
    if scales
        .iter()
        .enumerate()
        .any(|(i, &a)| a == 0 && (decoy_replicated.contains(&i) || (i >= t && !diagonal.contains(&i))))
    {
        return Err(Error::InvalidParameters(
            "strip scales must be nonzero".into(),
        ));
    }
    // Diagonal demand strips appear once, in their own row-block.
    for (l, &strip) in diagonal.iter().enumerate() {
        scales[strip] = field.inv(combiner_vals[l])?;
    }
    // Replicated demand strips collect contributions from every used
    // row-block; scale by the inverse of that sum.
    for &strip in &replicated_demand {
        let mut sum = 0u64;
        for (l, &diag_strip) in diagonal.iter().enumerate() {
            sum = field.add(sum, field.mul(combiner_vals[l], cauchy.get(diag_strip - t, strip)));
        }
        if sum == 0 {
            return Err(Error::DegeneratePoints);
        }
        scales[strip] = field.inv(sum)?;
    }

    Ok(AlignmentSolution {
        combiner: diagonal.into_iter().zip(combiner_vals).collect(),
        strip_scales: scales,
    })
}

/// Builds the aligned trailing block [B1 | B2]: replicated strips
/// appear in every row-block weighted by the Cauchy matrix, diagonal
/// strips once each.
fn assemble_aligned_block(
    layout: &BlockLayout,
    strips: &FieldMatrix,
    scales: &[u64],
    cauchy: &FieldMatrix,
) -> FieldMatrix {
    let ProtocolCase::Aligned {
        replicated: t,
        row_blocks: m,
    } = layout.case
    else {
        unreachable!("aligned assembly on embedded layout")
    };
    let field = strips.field();
    let l = layout.l;
    let s = layout.strip_width;
    let mut g = FieldMatrix::zeros(field, l * m, layout.last_cols());
    for rb in 0..m {
        for strip in 0..t {
            let factor = field.mul(scales[strip], cauchy.get(rb, strip));
            paste_scaled_strip(&mut g, strips, rb * l, strip, s, factor);
        }
        let strip = t + rb;
        paste_scaled_strip(&mut g, strips, rb * l, strip, s, scales[strip]);
    }
    g
}

fn paste_scaled_strip(
    g: &mut FieldMatrix,
    strips: &FieldMatrix,
    row0: usize,
    strip: usize,
    width: usize,
    factor: u64,
) {
    let field = strips.field();
    for r in 0..strips.rows() {
        for c in 0..width {
            let col = strip * width + c;
            g.set(row0 + r, col, field.mul(factor, strips.get(r, col)));
        }
    }
}

/// Trailing block for an aligned layout. Returns the recovery
/// fragments when the demand branch is taken.
pub fn build_aligned_last_block<R: Rng + ?Sized>(
    layout: &BlockLayout,
    branch: LastBlockBranch<'_>,
    field: PrimeField,
    rng: &mut R,
    overrides: &QueryOverrides,
) -> Result<(FieldMatrix, Option<AlignedFragments>)> {
    let ProtocolCase::Aligned {
        replicated: t,
        row_blocks: m,
    } = layout.case
    else {
        return Err(Error::StateError("layout is not aligned".into()));
    };
    let l = layout.l;
    let s = layout.strip_width;
    let width = layout.last_cols();

    match branch {
        LastBlockBranch::Decoy => {
            let strips = sample_mds(field, l, width, overrides.sampler(), rng)?;
            let points = field.sample_distinct(rng, t + m)?;
            let cauchy = cauchy_matrix(field, &points[..m], &points[m..])?;
            let scales: Vec<u64> = (0..t + m).map(|_| field.sample_nonzero(rng)).collect();
            Ok((assemble_aligned_block(layout, &strips, &scales, &cauchy), None))
        }
        LastBlockBranch::Demand(v) => {
            let demand_strips = match &overrides.demand_strips {
                Some(ds) => {
                    let mut ds = ds.clone();
                    ds.sort_unstable();
                    ds
                }
                None => random_subset(rng, t + m, t + 1),
            };
            if demand_strips.len() != t + 1 || demand_strips.iter().any(|&i| i >= t + m) {
                return Err(Error::InvalidParameters(
                    "demand strips must pick replicated+1 of the strips".into(),
                ));
            }
            let positions: Vec<usize> = (0..layout.d)
                .map(|j| demand_strips[j / s] * s + j % s)
                .collect();
            let strips = match &overrides.strip_completion {
                Some(free_cols) => {
                    let free_strips: Vec<usize> =
                        (0..t + m).filter(|i| !demand_strips.contains(i)).collect();
                    if free_cols.rows() != l || free_cols.cols() != free_strips.len() * s {
                        return Err(Error::ShapeError(format!(
                            "strip completion must be {l}x{}",
                            free_strips.len() * s
                        )));
                    }
                    let mut full = spread_columns(v, width, &positions);
                    for (j, &strip) in free_strips.iter().enumerate() {
                        for r in 0..l {
                            for c in 0..s {
                                full.set(r, strip * s + c, free_cols.get(r, j * s + c));
                            }
                        }
                    }
                    if !full.is_mds()? {
                        return Err(Error::NotMds);
                    }
                    full
                }
                None => extend_mds_pinned(v, width, &positions, rng)?,
            };
            let cauchy = match &overrides.cauchy_weights {
                Some(w) => {
                    if w.rows() != m || w.cols() != t {
                        return Err(Error::ShapeError(format!(
                            "cauchy weights must be {m}x{t}"
                        )));
                    }
                    w.clone()
                }
                None => {
                    let points = field.sample_distinct(rng, t + m)?;
                    cauchy_matrix(field, &points[..m], &points[m..])?
                }
            };
            let c_first = match overrides.combiner_seed {
                Some(c) => c,
                None => field.sample_nonzero(rng),
            };
            // m - 1 strips stay fully random: the replicated decoys and
            // the diagonal strips not carrying demand.
            let free_count = m - 1;
            let free_scales = match &overrides.free_scales {
                Some(v) => {
                    if v.len() != free_count {
                        return Err(Error::InvalidParameters(format!(
                            "expected {free_count} free scales, got {}",
                            v.len()
                        )));
                    }
                    v.clone()
                }
                None => (0..free_count).map(|_| field.sample_nonzero(rng)).collect(),
            };
            let mut free_iter = free_scales.into_iter();
            let solution = solve_alignment(t, m, &demand_strips, &cauchy, c_first, || {
                free_iter.next().expect("free scale count was validated")
            })?;
            let g = assemble_aligned_block(layout, &strips, &solution.strip_scales, &cauchy);
            Ok((
                g,
                Some(AlignedFragments {
                    demand_strips,
                    combiner: solution.combiner,
                    strip_scales: solution.strip_scales,
                    cauchy,
                }),
            ))
        }
    }
}

/// Trailing block for an embedded layout.
pub fn build_embedded_last_block<R: Rng + ?Sized>(
    layout: &BlockLayout,
    branch: LastBlockBranch<'_>,
    field: PrimeField,
    rng: &mut R,
    overrides: &QueryOverrides,
) -> Result<(FieldMatrix, Option<EmbeddedFragments>)> {
    if layout.case != ProtocolCase::Embedded {
        return Err(Error::StateError("layout is not embedded".into()));
    }
    let l = layout.l;
    let r = layout.r;
    let width = layout.last_cols();

    match branch {
        LastBlockBranch::Decoy => {
            let g = sample_mds(field, l + r, width, overrides.sampler(), rng)?;
            Ok((g, None))
        }
        LastBlockBranch::Demand(v) => {
            let positions = match &overrides.embed_positions {
                Some(p) => {
                    let mut p = p.clone();
                    p.sort_unstable();
                    if p.len() != layout.d || p.iter().any(|&i| i >= width) {
                        return Err(Error::InvalidParameters(
                            "embed positions must be a D-subset of the trailing columns".into(),
                        ));
                    }
                    p
                }
                None => random_subset(rng, width, layout.d),
            };
            let lambda = match &overrides.parity {
                Some(lam) => {
                    if lam.rows() != layout.d - l || lam.cols() != layout.d {
                        return Err(Error::ShapeError("parity matrix has wrong shape".into()));
                    }
                    if !v.mul(&lam.transpose())?.is_zero() || !lam.is_mds()? {
                        return Err(Error::InvalidParameters(
                            "injected parity matrix is not a valid MDS dual".into(),
                        ));
                    }
                    lam.clone()
                }
                None => parity_check(v)?,
            };
            let extension = match &overrides.pinned_extension {
                Some(h) => {
                    if h.rows() != lambda.rows() || h.cols() != width {
                        return Err(Error::ShapeError("pinned extension has wrong shape".into()));
                    }
                    for (j, &p) in positions.iter().enumerate() {
                        for row in 0..lambda.rows() {
                            if h.get(row, p) != lambda.get(row, j) {
                                return Err(Error::InvalidParameters(
                                    "pinned extension disagrees with the parity matrix".into(),
                                ));
                            }
                        }
                    }
                    if !h.is_mds()? {
                        return Err(Error::NotMds);
                    }
                    h.clone()
                }
                None => extend_mds_pinned(&lambda, width, &positions, rng)?,
            };
            let g_last = match &overrides.last_block {
                Some(g) => {
                    if g.rows() != l + r || g.cols() != width {
                        return Err(Error::ShapeError("trailing block has wrong shape".into()));
                    }
                    if !g.mul(&extension.transpose())?.is_zero() || g.rank() != l + r {
                        return Err(Error::InvalidParameters(
                            "injected trailing block is not a generator for the extension".into(),
                        ));
                    }
                    g.clone()
                }
                None => {
                    let g0 = generator_from_parity(&extension)?;
                    let basis = random_invertible(field, l + r, rng, DEFAULT_REJECTION_CAP)?;
                    basis.mul(&g0)?
                }
            };
            let target = spread_columns(v, width, &positions);
            let recovery = solve_combination(&g_last, &target)?.ok_or_else(|| {
                Error::StateError("demand rows are not in the trailing row space".into())
            })?;
            if recovery.mul(&g_last)? != target {
                return Err(Error::StateError(
                    "recovery combination failed verification".into(),
                ));
            }
            Ok((
                g_last,
                Some(EmbeddedFragments {
                    positions,
                    recovery,
                }),
            ))
        }
    }
}

/// Builds the permutation: demand index `shuffled_support[j]` maps to
/// column `demand_cols[j]`; every other index maps to a uniformly
/// random unused column (ascending index order).
pub fn build_permutation<R: Rng + ?Sized>(
    k: usize,
    shuffled_support: &[usize],
    demand_cols: &[usize],
    rng: &mut R,
    fill: Option<&[usize]>,
) -> Result<Permutation> {
    debug_assert_eq!(shuffled_support.len(), demand_cols.len());
    let mut images = vec![usize::MAX; k];
    let mut used = vec![false; k];
    for (&idx, &col) in shuffled_support.iter().zip(demand_cols) {
        images[idx] = col;
        if used[col] {
            return Err(Error::InvalidParameters("demand columns collide".into()));
        }
        used[col] = true;
    }
    let others: Vec<usize> = (0..k).filter(|&i| images[i] == usize::MAX).collect();
    match fill {
        Some(fill) => {
            if fill.len() != others.len() {
                return Err(Error::InvalidParameters(format!(
                    "permutation fill needs {} images, got {}",
                    others.len(),
                    fill.len()
                )));
            }
            for (&i, &col) in others.iter().zip(fill) {
                if col >= k || used[col] {
                    return Err(Error::InvalidParameters(
                        "permutation fill reuses a column".into(),
                    ));
                }
                images[i] = col;
                used[col] = true;
            }
        }
        None => {
            let mut remaining: Vec<usize> = (0..k).filter(|&c| !used[c]).collect();
            for &i in &others {
                let pick = rng.gen_range(0..remaining.len());
                images[i] = remaining.swap_remove(pick);
            }
        }
    }
    Permutation::new(images)
}

/// Runs the full query construction with every random draw taken from
/// `rng`.
pub fn generate_query<R: Rng + ?Sized>(
    demand: &Demand,
    rng: &mut R,
) -> Result<(Query, ClientState)> {
    generate_query_with(demand, rng, &QueryOverrides::default())
}

/// Query construction with selective fixed draws; the golden replays
/// inject the published values through `overrides`.
pub fn generate_query_with<R: Rng + ?Sized>(
    demand: &Demand,
    rng: &mut R,
    overrides: &QueryOverrides,
) -> Result<(Query, ClientState)> {
    let field = demand.field();
    let layout = BlockLayout::new(demand.k(), demand.d(), demand.l())?;
    if field.modulus() <= layout.last_cols() as u64 {
        return Err(Error::FieldTooSmall(format!(
            "modulus {} cannot host a length-{} MDS extension",
            field.modulus(),
            layout.last_cols()
        )));
    }
    let d = layout.d;
    let l = layout.l;
    let n = layout.partition_blocks;

    // 1. shuffle the demand columns
    let shuffle = match &overrides.shuffle {
        Some(sh) => {
            let mut seen = vec![false; d];
            if sh.len() != d || sh.iter().any(|&j| j >= d || std::mem::replace(&mut seen[j], true))
            {
                return Err(Error::InvalidParameters(
                    "shuffle must be a permutation of the support".into(),
                ));
            }
            sh.clone()
        }
        None => random_permutation(rng, d),
    };
    let shuffled_support: Vec<usize> = shuffle.iter().map(|&j| demand.support()[j]).collect();
    let shuffled_coeffs = demand.coeffs().select_columns(&shuffle);

    // 2. pick the demand-carrying block
    let chosen_block = match overrides.chosen_block {
        Some(b) => {
            if b > n {
                return Err(Error::InvalidParameters(format!(
                    "chosen block {b} out of range 0..={n}"
                )));
            }
            b
        }
        None => layout.select_block(rng),
    };

    // 3. leading blocks, ascending: the chosen one is the shuffled
    // demand, the rest are decoys
    let mut decoys = match &overrides.partition_decoys {
        Some(list) => {
            let needed = if chosen_block < n { n - 1 } else { n };
            if list.len() != needed {
                return Err(Error::InvalidParameters(format!(
                    "expected {needed} partition decoys, got {}",
                    list.len()
                )));
            }
            for m in list {
                if m.rows() != l || m.cols() != d {
                    return Err(Error::ShapeError("partition decoy has wrong shape".into()));
                }
                if !m.is_mds()? {
                    return Err(Error::NotMds);
                }
            }
            list.clone().into_iter()
        }
        None => Vec::new().into_iter(),
    };
    let inject_decoys = overrides.partition_decoys.is_some();
    let mut leading: Vec<FieldMatrix> = Vec::with_capacity(n);
    for i in 0..n {
        if i == chosen_block {
            leading.push(shuffled_coeffs.clone());
        } else if inject_decoys {
            leading.push(decoys.next().expect("decoy count was validated"));
        } else {
            leading.push(sample_mds(field, l, d, overrides.sampler(), rng)?);
        }
    }

    // 4. trailing block
    let branch_input = if chosen_block == n {
        LastBlockBranch::Demand(&shuffled_coeffs)
    } else {
        LastBlockBranch::Decoy
    };
    let (last_block, branch) = match layout.case {
        ProtocolCase::Aligned { .. } => {
            let (g, frag) = build_aligned_last_block(&layout, branch_input, field, rng, overrides)?;
            (g, frag.map(RecoveryBranch::Aligned))
        }
        ProtocolCase::Embedded => {
            let (g, frag) =
                build_embedded_last_block(&layout, branch_input, field, rng, overrides)?;
            (g, frag.map(RecoveryBranch::Embedded))
        }
    };
    let branch = branch.unwrap_or(RecoveryBranch::Direct);

    // 5. demand column targets and the permutation
    let demand_cols: Vec<usize> = match &branch {
        RecoveryBranch::Direct => (0..d).map(|j| chosen_block * d + j).collect(),
        RecoveryBranch::Aligned(frag) => {
            let s = layout.strip_width;
            (0..d)
                .map(|j| layout.last_col_start() + frag.demand_strips[j / s] * s + j % s)
                .collect()
        }
        RecoveryBranch::Embedded(frag) => (0..d)
            .map(|j| layout.last_col_start() + frag.positions[j])
            .collect(),
    };
    let permutation = build_permutation(
        layout.k,
        &shuffled_support,
        &demand_cols,
        rng,
        overrides.permutation_fill.as_deref(),
    )?;

    // 6. assemble the block-diagonal matrix
    let mut matrix = FieldMatrix::zeros(field, layout.total_rows(), layout.k);
    for (i, block) in leading.iter().enumerate() {
        matrix.paste(i * l, i * d, block);
    }
    matrix.paste(layout.last_row_start(), layout.last_col_start(), &last_block);

    Ok((
        Query {
            matrix,
            permutation,
        },
        ClientState {
            layout,
            chosen_block,
            shuffled_support,
            shuffled_coeffs,
            branch,
        },
    ))
}

/// Server side: permutes the stored messages and applies the query
/// matrix. Needs nothing but the query itself.
pub fn compute_answer(query: &Query, x: &FieldVector) -> Result<FieldVector> {
    if query.permutation.len() != x.len() || query.matrix.cols() != x.len() {
        return Err(Error::ShapeError(format!(
            "query is for {} messages, dataset has {}",
            query.matrix.cols(),
            x.len()
        )));
    }
    if query.matrix.field() != x.field() {
        return Err(Error::ShapeError("field mismatch".into()));
    }
    let shuffled = query.permutation.scatter(x);
    query.matrix.mul_vec(&shuffled)
}

/// Client side: extracts Z = V * X_W from the answer.
pub fn recover(state: &ClientState, answer: &FieldVector) -> Result<FieldVector> {
    let layout = &state.layout;
    if answer.len() != layout.total_rows() {
        return Err(Error::StateError(format!(
            "answer has {} entries, layout expects {}",
            answer.len(),
            layout.total_rows()
        )));
    }
    let field = state.shuffled_coeffs.field();
    let l = layout.l;
    match &state.branch {
        RecoveryBranch::Direct => {
            if state.chosen_block >= layout.partition_blocks {
                return Err(Error::StateError(
                    "direct recovery needs a leading chosen block".into(),
                ));
            }
            Ok(answer.slice(state.chosen_block * l..(state.chosen_block + 1) * l))
        }
        RecoveryBranch::Aligned(frag) => {
            let ProtocolCase::Aligned { replicated: t, .. } = layout.case else {
                return Err(Error::StateError("aligned recovery on embedded layout".into()));
            };
            let last = answer.slice(layout.last_row_start()..layout.total_rows());
            let mut z = vec![0u64; l];
            for &(strip, c) in &frag.combiner {
                let rb = strip - t;
                for (row, zr) in z.iter_mut().enumerate() {
                    *zr = field.add(*zr, field.mul(c, last.get(rb * l + row)));
                }
            }
            Ok(FieldVector::new(field, z))
        }
        RecoveryBranch::Embedded(frag) => {
            let last = answer.slice(layout.last_row_start()..layout.total_rows());
            frag.recovery.mul_vec(&last)
        }
    }
}

/// True iff `matrix` is zero outside the layout's diagonal blocks.
pub fn matches_block_pattern(layout: &BlockLayout, matrix: &FieldMatrix) -> bool {
    if matrix.rows() != layout.total_rows() || matrix.cols() != layout.k {
        return false;
    }
    for block in 0..=layout.partition_blocks {
        let rows = layout.block_rows(block);
        let cols = layout.block_cols(block);
        for r in rows {
            for c in 0..layout.k {
                if !cols.contains(&c) && matrix.get(r, c) != 0 {
                    return false;
                }
            }
        }
    }
    true
}
