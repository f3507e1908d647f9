//! Reference protocol instances over F_13 with every random draw
//! pinned, reproducing two published query constructions bit-exactly:
//! one with the demand hidden in an aligned trailing block (K=20, D=8,
//! L=3) and one with an embedded-generator trailing block (K=20, D=6,
//! L=3). Used by the golden tests and the `demo` CLI subcommand.
//!
//! The aligned instance scales both row-block copies of its decoy strip
//! by the same factor, so its weight matrix is injected as all-ones
//! rather than drawn from distinct Cauchy points; likewise the embedded
//! instance pins a particular generator basis (the published one is in
//! generalized Reed-Solomon form, which the generic null-space route
//! would not pick). Every injected value is validated against the
//! construction's own contracts during replay.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::error::Result;
use crate::field::PrimeField;
use crate::matrix::{FieldMatrix, FieldVector};
use crate::mds::spread_columns;
use crate::protocol::{
    compute_answer, generate_query_with, recover, Demand, Permutation, QueryOverrides,
    RecoveryBranch,
};

/// A fully pinned protocol run with its expected outputs.
pub struct ReferenceInstance {
    pub name: &'static str,
    pub field: PrimeField,
    pub demand: Demand,
    pub overrides: QueryOverrides,
    pub expected_matrix: FieldMatrix,
    /// Expected permutation images (0-based).
    pub expected_permutation: Vec<usize>,
    /// Expected origin of each permuted slot: scatter of the identity.
    pub expected_scatter_order: Vec<usize>,
    /// Aligned instance: expected (strip, coefficient) combiner pairs.
    pub expected_combiner: Option<Vec<(usize, u64)>>,
    /// Aligned instance: expected strip scales.
    pub expected_strip_scales: Option<Vec<u64>>,
    /// Embedded instance: expected recovery matrix.
    pub expected_recovery: Option<FieldMatrix>,
}

/// Outcome of one replay assertion.
pub struct ReplayCheck {
    pub label: String,
    pub pass: bool,
}

fn f13() -> PrimeField {
    PrimeField::new(13).expect("13 is prime")
}

fn m(field: PrimeField, rows: &[&[u64]]) -> FieldMatrix {
    FieldMatrix::from_rows(field, rows).expect("fixture shape")
}

/// K=20, D=8, L=3: aligned trailing block (strips of width 4, one
/// replicated strip, two row-blocks), demand carried by the trailing
/// block.
pub fn example1() -> ReferenceInstance {
    let f = f13();
    let coeffs = m(
        f,
        &[
            &[7, 3, 12, 10, 2, 1, 5, 6],
            &[3, 6, 5, 12, 8, 3, 11, 4],
            &[5, 12, 1, 4, 6, 9, 6, 7],
        ],
    );
    let demand = Demand::new(20, vec![1, 3, 4, 6, 7, 9, 10, 11], coeffs).expect("fixture demand");

    let decoy = m(
        f,
        &[
            &[5, 8, 4, 7, 4, 3, 4, 2],
            &[7, 4, 12, 9, 1, 10, 6, 5],
            &[2, 2, 10, 6, 10, 3, 9, 6],
        ],
    );
    let completion = m(f, &[&[1, 9, 11, 2], &[7, 9, 2, 9], &[10, 9, 11, 8]]);
    let weights = m(f, &[&[1], &[1]]);

    let overrides = QueryOverrides {
        shuffle: Some(vec![5, 1, 4, 0, 3, 2, 6, 7]),
        chosen_block: Some(1),
        partition_decoys: Some(vec![decoy.clone()]),
        demand_strips: Some(vec![1, 2]),
        strip_completion: Some(completion),
        cauchy_weights: Some(weights),
        combiner_seed: Some(4),
        free_scales: Some(vec![2]),
        permutation_fill: Some(vec![2, 7, 0, 1, 8, 10, 4, 3, 11, 5, 9, 6]),
        ..Default::default()
    };

    let trailing = m(
        f,
        &[
            &[2, 5, 9, 4, 10, 4, 7, 5, 0, 0, 0, 0],
            &[1, 5, 4, 5, 4, 8, 2, 4, 0, 0, 0, 0],
            &[7, 5, 9, 3, 12, 3, 8, 11, 0, 0, 0, 0],
            &[2, 5, 9, 4, 0, 0, 0, 0, 4, 10, 2, 5],
            &[1, 5, 4, 5, 0, 0, 0, 0, 10, 2, 7, 12],
            &[7, 5, 9, 3, 0, 0, 0, 0, 12, 3, 5, 8],
        ],
    );
    let mut expected_matrix = FieldMatrix::zeros(f, 9, 20);
    expected_matrix.paste(0, 0, &decoy);
    expected_matrix.paste(3, 8, &trailing);

    ReferenceInstance {
        name: "aligned trailing block (K=20, D=8, L=3)",
        field: f,
        demand,
        overrides,
        expected_matrix,
        expected_permutation: vec![
            2, 15, 7, 13, 17, 0, 16, 14, 1, 12, 18, 19, 8, 10, 4, 3, 11, 5, 9, 6,
        ],
        expected_scatter_order: vec![
            5, 8, 0, 15, 14, 17, 19, 2, 12, 18, 13, 16, 9, 3, 7, 1, 6, 4, 10, 11,
        ],
        expected_combiner: Some(vec![(1, 4), (2, 9)]),
        expected_strip_scales: Some(vec![2, 10, 3]),
        expected_recovery: None,
    }
}

/// K=20, D=6, L=3: embedded-generator trailing block, demand carried by
/// the trailing block via parity extension.
pub fn example2() -> ReferenceInstance {
    let f = f13();
    let coeffs = m(
        f,
        &[
            &[7, 3, 12, 10, 2, 1],
            &[3, 6, 5, 12, 8, 3],
            &[5, 12, 1, 4, 6, 9],
        ],
    );
    let demand = Demand::new(20, vec![1, 3, 4, 6, 7, 9], coeffs).expect("fixture demand");

    let decoy1 = m(
        f,
        &[
            &[11, 5, 3, 1, 4, 2],
            &[7, 10, 2, 6, 6, 5],
            &[8, 7, 10, 10, 9, 6],
        ],
    );
    let decoy2 = m(
        f,
        &[
            &[5, 8, 4, 7, 4, 3],
            &[7, 4, 12, 9, 1, 10],
            &[2, 2, 10, 6, 10, 3],
        ],
    );
    let parity = m(
        f,
        &[
            &[12, 11, 3, 2, 5, 11],
            &[10, 9, 12, 12, 6, 10],
            &[4, 5, 9, 7, 2, 2],
        ],
    );
    let extension = m(
        f,
        &[
            &[12, 4, 11, 3, 3, 2, 5, 11],
            &[10, 7, 9, 12, 4, 12, 6, 10],
            &[4, 9, 5, 9, 1, 7, 2, 2],
        ],
    );
    let trailing = m(
        f,
        &[
            &[1, 4, 5, 9, 2, 8, 4, 11],
            &[3, 7, 10, 10, 7, 9, 10, 10],
            &[9, 9, 7, 1, 5, 2, 12, 2],
            &[1, 6, 1, 4, 11, 12, 4, 3],
            &[3, 4, 2, 3, 6, 7, 10, 11],
        ],
    );
    let recovery = m(
        f,
        &[
            &[11, 11, 1, 0, 0],
            &[0, 11, 11, 1, 0],
            &[0, 0, 11, 11, 1],
        ],
    );

    let overrides = QueryOverrides {
        shuffle: Some(vec![5, 1, 4, 0, 3, 2]),
        chosen_block: Some(2),
        partition_decoys: Some(vec![decoy1.clone(), decoy2.clone()]),
        embed_positions: Some(vec![0, 2, 3, 5, 6, 7]),
        parity: Some(parity),
        pinned_extension: Some(extension),
        last_block: Some(trailing.clone()),
        permutation_fill: Some(vec![6, 13, 1, 16, 5, 8, 2, 0, 3, 11, 7, 4, 9, 10]),
        ..Default::default()
    };

    let mut expected_matrix = FieldMatrix::zeros(f, 11, 20);
    expected_matrix.paste(0, 0, &decoy1);
    expected_matrix.paste(3, 6, &decoy2);
    expected_matrix.paste(6, 12, &trailing);

    ReferenceInstance {
        name: "embedded trailing block (K=20, D=6, L=3)",
        field: f,
        demand,
        overrides,
        expected_matrix,
        expected_permutation: vec![
            6, 17, 13, 14, 19, 1, 18, 15, 16, 12, 5, 8, 2, 0, 3, 11, 7, 4, 9, 10,
        ],
        expected_scatter_order: vec![
            13, 5, 12, 14, 17, 10, 0, 16, 11, 18, 19, 15, 9, 2, 3, 7, 8, 1, 6, 4,
        ],
        expected_combiner: None,
        expected_strip_scales: None,
        expected_recovery: Some(recovery),
    }
}

/// Replays an instance: regenerates the query with the pinned draws,
/// compares every published value, and runs `recovery_trials` random
/// message vectors end to end.
pub fn replay(inst: &ReferenceInstance, recovery_trials: u32) -> Result<Vec<ReplayCheck>> {
    let mut checks = Vec::new();
    let push = |label: &str, pass: bool, checks: &mut Vec<ReplayCheck>| {
        checks.push(ReplayCheck {
            label: label.to_string(),
            pass,
        });
    };

    // no draw reaches the RNG when every override is pinned, but the
    // signature wants one
    let mut rng = ChaCha20Rng::seed_from_u64(0);
    let (query, state) = generate_query_with(&inst.demand, &mut rng, &inst.overrides)?;

    push(
        "query matrix matches the published construction",
        query.matrix == inst.expected_matrix,
        &mut checks,
    );
    push(
        "permutation matches the published images",
        query.permutation.images() == inst.expected_permutation.as_slice(),
        &mut checks,
    );

    let mut order = vec![0usize; inst.demand.k()];
    for l in 0..inst.demand.k() {
        order[query.permutation.image(l)] = l;
    }
    push(
        "server-side shuffle order matches",
        order == inst.expected_scatter_order,
        &mut checks,
    );

    match (&state.branch, &inst.expected_combiner, &inst.expected_recovery) {
        (RecoveryBranch::Aligned(frag), Some(combiner), _) => {
            push(
                "solved combiner coefficients match",
                &frag.combiner == combiner,
                &mut checks,
            );
            if let Some(scales) = &inst.expected_strip_scales {
                push(
                    "solved strip scales match",
                    &frag.strip_scales == scales,
                    &mut checks,
                );
            }
        }
        (RecoveryBranch::Embedded(frag), _, Some(recovery)) => {
            push(
                "solved recovery matrix matches",
                &frag.recovery == recovery,
                &mut checks,
            );
            // the published identity: recovery applied to the trailing
            // block leaves the shuffled coefficients on the embedded
            // positions and zero elsewhere
            let layout = state.layout;
            let trailing = inst.expected_matrix.select_columns(
                &(layout.last_col_start()..inst.demand.k()).collect::<Vec<_>>(),
            );
            let trailing = trailing.select_rows(
                &(layout.last_row_start()..layout.total_rows()).collect::<Vec<_>>(),
            );
            let target = spread_columns(
                &state.shuffled_coeffs,
                layout.last_cols(),
                &frag.positions,
            );
            let product = recovery.mul(&trailing)?;
            push(
                "published recovery identity holds",
                product == target,
                &mut checks,
            );
        }
        _ => {}
    }

    let mut xrng = ChaCha20Rng::seed_from_u64(0x5eed);
    let mut all_recovered = true;
    for _ in 0..recovery_trials {
        let x = FieldVector::new(
            inst.field,
            (0..inst.demand.k())
                .map(|_| inst.field.sample(&mut xrng))
                .collect(),
        );
        let y = compute_answer(&query, &x)?;
        if recover(&state, &y)? != inst.demand.evaluate(&x)? {
            all_recovered = false;
            break;
        }
    }
    push(
        &format!("recovery equals direct evaluation on {recovery_trials} random message vectors"),
        all_recovered,
        &mut checks,
    );

    Ok(checks)
}

/// Convenience for tests: replay and assert every check.
pub fn verify(inst: &ReferenceInstance, recovery_trials: u32) -> Result<()> {
    let checks = replay(inst, recovery_trials)?;
    for c in &checks {
        if !c.pass {
            return Err(crate::error::Error::StateError(format!(
                "{}: failed check '{}'",
                inst.name, c.label
            )));
        }
    }
    Ok(())
}

/// Expected permutation images built from published 1-based values,
/// for the golden tests' cross-checks.
pub fn permutation_from_one_based(images: &[usize]) -> Result<Permutation> {
    Permutation::new(images.iter().map(|&v| v - 1).collect())
}
