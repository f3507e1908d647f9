//! Executable privacy and recoverability checks.
//!
//! The privacy target is per-index: given the query, every message
//! index must be in the demand's support with the prior probability
//! D/K. Three checks approach that from different angles:
//!
//! * [`structural_posterior`] mirrors the generation model exactly. An
//!   index whose permuted column lands in a leading block is demanded
//!   iff that block was chosen (weight D/K); an index landing in the
//!   trailing block is demanded in the fraction of strip subsets (or
//!   position subsets) containing it, times the trailing selection
//!   weight (D+R)/K. Both routes reduce to the same rational, and the
//!   returned vector is exactly uniform whenever the construction is
//!   right.
//! * [`monte_carlo_audit`] treats query generation as a black box: it
//!   samples demands uniformly, generates queries, coarsens each query
//!   to the region class of every index, and estimates the posterior
//!   per observed class pattern. Any statistic of the query must show
//!   the D/K posterior, so deviations at the Monte Carlo scale expose
//!   construction bias.
//! * [`recoverability_fuzz`] replays full sessions against the direct
//!   evaluation of the demand.
//!
//! Trials run in parallel; each trial derives its own stream from the
//! master seed, so reports are independent of scheduling.

use std::collections::HashMap;

use num_rational::Ratio;
use rand::SeedableRng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::PrimeField;
use crate::matrix::{FieldMatrix, FieldVector};
use crate::protocol::{
    compute_answer, generate_query, recover, BlockLayout, Demand, Permutation, ProtocolCase,
};
use crate::sample::MdsSampler;

fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc = 1u64;
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// Exact posterior Pr(i in W | query structure) for every index, from
/// the generation model's weights. Uniformly D/K for every permutation
/// the protocol can produce.
pub fn structural_posterior(layout: &BlockLayout, permutation: &Permutation) -> Vec<Ratio<u64>> {
    let k = layout.k() as u64;
    let d = layout.d() as u64;
    let r = layout.r() as u64;
    let leading_weight = Ratio::new(d, k);
    let trailing_weight = match layout.case() {
        ProtocolCase::Aligned {
            replicated,
            row_blocks,
        } => {
            // of the C(t+m, t+1) strip subsets, C(t+m-1, t) contain a
            // fixed strip
            let t = replicated as u64;
            let m = row_blocks as u64;
            let containing = binomial(t + m - 1, t);
            let all = binomial(t + m, t + 1);
            Ratio::new(containing, all) * Ratio::new(d + r, k)
        }
        ProtocolCase::Embedded => {
            // of the C(D+R, D) position subsets, C(D+R-1, D-1) contain
            // a fixed position
            let containing = binomial(d + r - 1, d - 1);
            let all = binomial(d + r, d);
            Ratio::new(containing, all) * Ratio::new(d + r, k)
        }
    };
    let cutoff = layout.last_col_start();
    let weights: Vec<Ratio<u64>> = (0..layout.k())
        .map(|i| {
            if permutation.image(i) < cutoff {
                leading_weight
            } else {
                trailing_weight
            }
        })
        .collect();
    let total: Ratio<u64> = weights.iter().sum();
    weights
        .into_iter()
        .map(|w| w * Ratio::from_integer(d) / total)
        .collect()
}

/// Configuration for the Monte Carlo audit.
#[derive(Debug, Clone, Copy)]
pub struct AuditConfig {
    pub trials: u64,
    pub seed: u64,
    /// Observable cells with fewer samples are flagged and excluded
    /// from the deviation maximum.
    pub min_cell_count: u64,
}

impl Default for AuditConfig {
    fn default() -> Self {
        AuditConfig {
            trials: 1_000_000,
            seed: 0,
            min_cell_count: 50,
        }
    }
}

/// Result of the Monte Carlo audit.
#[derive(Debug, Clone, Serialize)]
pub struct AuditReport {
    pub k: usize,
    pub d: usize,
    pub l: usize,
    pub trials: u64,
    /// Exact target posterior D/K.
    pub target: f64,
    /// Number of distinct region-class patterns observed.
    pub distinct_observables: usize,
    /// max over (index, pattern) of |estimated posterior - D/K|.
    pub max_posterior_deviation: f64,
    /// Total-variation distance between the pattern distributions
    /// conditioned on membership, per index.
    pub per_index_tv: Vec<f64>,
    pub max_tv: f64,
    /// Cells below `min_cell_count`, excluded from the deviation max.
    pub low_sample_cells: usize,
}

#[derive(Clone)]
struct Cell {
    total: u64,
    member: Vec<u64>,
}

fn trial_rng(seed: u64, trial: u64) -> rand_chacha::ChaCha20Rng {
    let mut bytes = [0u8; 32];
    bytes[..8].copy_from_slice(&seed.to_le_bytes());
    bytes[8..16].copy_from_slice(&trial.to_le_bytes());
    rand_chacha::ChaCha20Rng::from_seed(bytes)
}

/// Samples (W, V) uniformly, generates queries, and measures the
/// posterior of the coarse observable "region class of every index".
pub fn monte_carlo_audit(
    field: PrimeField,
    k: usize,
    d: usize,
    l: usize,
    config: AuditConfig,
) -> Result<AuditReport> {
    if k > 8 {
        return Err(Error::InstanceTooLarge(format!(
            "observable enumeration is capped at K <= 8, got K={k}"
        )));
    }
    let layout = BlockLayout::new(k, d, l)?;

    let cells: HashMap<Vec<u8>, Cell> = (0..config.trials)
        .into_par_iter()
        .try_fold(
            HashMap::new,
            |mut map: HashMap<Vec<u8>, Cell>, trial| -> Result<_> {
                let mut rng = trial_rng(config.seed, trial);
                let demand =
                    Demand::random(field, k, d, l, MdsSampler::UniformRejection, &mut rng)?;
                let (query, _) = generate_query(&demand, &mut rng)?;
                let pattern: Vec<u8> = (0..k)
                    .map(|i| layout.region_class(query.permutation.image(i)) as u8)
                    .collect();
                let cell = map.entry(pattern).or_insert_with(|| Cell {
                    total: 0,
                    member: vec![0; k],
                });
                cell.total += 1;
                for &w in demand.support() {
                    cell.member[w] += 1;
                }
                Ok(map)
            },
        )
        .try_reduce(HashMap::new, |mut a, b| {
            for (pattern, cell) in b {
                let entry = a.entry(pattern).or_insert_with(|| Cell {
                    total: 0,
                    member: vec![0; k],
                });
                entry.total += cell.total;
                for (x, y) in entry.member.iter_mut().zip(&cell.member) {
                    *x += y;
                }
            }
            Ok(a)
        })?;

    let target = d as f64 / k as f64;
    let mut max_dev = 0.0f64;
    let mut low_cells = 0usize;
    for cell in cells.values() {
        if cell.total < config.min_cell_count {
            low_cells += 1;
            continue;
        }
        for &m in &cell.member {
            let est = m as f64 / cell.total as f64;
            max_dev = max_dev.max((est - target).abs());
        }
    }

    // per-index TV between pattern distributions given membership
    let mut per_index_tv = vec![0.0f64; k];
    for (i, tv) in per_index_tv.iter_mut().enumerate() {
        let n_in: u64 = cells.values().map(|c| c.member[i]).sum();
        let n_out = config.trials - n_in;
        if n_in == 0 || n_out == 0 {
            continue;
        }
        let mut acc = 0.0f64;
        for cell in cells.values() {
            let p_in = cell.member[i] as f64 / n_in as f64;
            let p_out = (cell.total - cell.member[i]) as f64 / n_out as f64;
            acc += (p_in - p_out).abs();
        }
        *tv = acc / 2.0;
    }
    let max_tv = per_index_tv.iter().cloned().fold(0.0, f64::max);

    Ok(AuditReport {
        k,
        d,
        l,
        trials: config.trials,
        target,
        distinct_observables: cells.len(),
        max_posterior_deviation: max_dev,
        per_index_tv,
        max_tv,
        low_sample_cells: low_cells,
    })
}

impl std::fmt::Display for AuditReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(
            f,
            "privacy audit (K={}, D={}, L={}): {} trials, target posterior {:.4}",
            self.k, self.d, self.l, self.trials, self.target
        )?;
        writeln!(
            f,
            "  distinct observables: {} ({} below the sample floor)",
            self.distinct_observables, self.low_sample_cells
        )?;
        writeln!(
            f,
            "  max posterior deviation: {:.5}",
            self.max_posterior_deviation
        )?;
        write!(f, "  max per-index TV distance: {:.5}", self.max_tv)
    }
}

/// One cell of the recoverability sweep.
#[derive(Debug, Clone, Serialize)]
pub struct FuzzCell {
    pub k: usize,
    pub d: usize,
    pub l: usize,
    pub runs: u64,
    pub failures: u64,
    pub first_failure_seed: Option<u64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FuzzReport {
    pub cells: Vec<FuzzCell>,
    pub total_runs: u64,
    pub all_pass: bool,
}

/// Replays full sessions (query, answer, recovery) and compares
/// against the direct evaluation of the demand. Failures are reported,
/// not raised.
pub fn recoverability_fuzz(
    field: PrimeField,
    grid: &[(usize, usize, usize)],
    seeds_per_cell: u64,
    master_seed: u64,
) -> Result<FuzzReport> {
    let cells: Vec<FuzzCell> = grid
        .par_iter()
        .map(|&(k, d, l)| -> Result<FuzzCell> {
            let mut failures = 0u64;
            let mut first = None;
            for seed in 0..seeds_per_cell {
                let mut rng = trial_rng(master_seed ^ ((k as u64) << 40 | (d as u64) << 20 | l as u64), seed);
                let demand = Demand::random(field, k, d, l, MdsSampler::Grs, &mut rng)?;
                let (query, state) = generate_query(&demand, &mut rng)?;
                let x = FieldVector::new(field, (0..k).map(|_| field.sample(&mut rng)).collect());
                let y = compute_answer(&query, &x)?;
                let ok = y.len() == state.layout.total_rows()
                    && recover(&state, &y)? == demand.evaluate(&x)?;
                if !ok {
                    failures += 1;
                    first.get_or_insert(seed);
                }
            }
            Ok(FuzzCell {
                k,
                d,
                l,
                runs: seeds_per_cell,
                failures,
                first_failure_seed: first,
            })
        })
        .collect::<Result<_>>()?;
    let total_runs = cells.iter().map(|c| c.runs).sum();
    let all_pass = cells.iter().all(|c| c.failures == 0);
    Ok(FuzzReport {
        cells,
        total_runs,
        all_pass,
    })
}

/// All supports the server could consider structurally possible:
/// each leading block's column set, and every admissible subset of the
/// trailing block (strip subsets in the aligned case, D-subsets of
/// positions in the embedded case). Returned as global column sets.
pub fn candidate_supports(layout: &BlockLayout) -> Vec<Vec<usize>> {
    use itertools::Itertools;
    let mut out = Vec::new();
    for b in 0..layout.partition_blocks() {
        out.push(layout.block_cols(b).collect());
    }
    let base = layout.last_col_start();
    match layout.case() {
        ProtocolCase::Aligned {
            replicated,
            row_blocks,
        } => {
            let s = layout.strip_width();
            for strips in (0..replicated + row_blocks).combinations(replicated + 1) {
                let cols: Vec<usize> = strips
                    .iter()
                    .flat_map(|&st| base + st * s..base + (st + 1) * s)
                    .collect();
                out.push(cols);
            }
        }
        ProtocolCase::Embedded => {
            for positions in (0..layout.last_cols()).combinations(layout.d()) {
                out.push(positions.iter().map(|&p| base + p).collect());
            }
        }
    }
    out
}

/// Whether the row space of `matrix` contains an L-dimensional
/// subspace supported on `cols` whose restriction to those columns is
/// MDS; the executable form of the necessary condition every private
/// query must satisfy.
pub fn supports_mds_subspace(matrix: &FieldMatrix, cols: &[usize], l: usize) -> Result<bool> {
    let complement: Vec<usize> = (0..matrix.cols()).filter(|c| !cols.contains(c)).collect();
    // combinations lambda with lambda * M zero outside `cols`
    let outside = matrix.select_columns(&complement);
    let lambdas = outside.transpose().null_space();
    if lambdas.rows() < l {
        return Ok(false);
    }
    let restricted = lambdas.mul(&matrix.select_columns(cols))?;
    let (basis, rank, _) = restricted.rref();
    if rank != l {
        return Ok(false);
    }
    let basis = basis.select_rows(&(0..rank).collect::<Vec<_>>());
    basis.is_mds()
}
