//! Acceptance suite: one test per criterion, each printing a PASS line
//! (run with `--nocapture` to see them). Every tolerance is exact
//! unless stated otherwise.

use std::time::Instant;

use num_rational::Ratio;
use plt_core::audit::{
    monte_carlo_audit, recoverability_fuzz, structural_posterior, AuditConfig,
};
use plt_core::bounds::{
    closed_form_converse, compute_bounds, ilp_converse_oracle, witness_feasible,
    witness_objective,
};
use plt_core::matrix::FieldVector;
use plt_core::mds::{extend_mds_pinned, generator_from_parity, parity_check};
use plt_core::protocol::{
    compute_answer, generate_query, generate_query_with, recover, BlockLayout, Demand,
    QueryOverrides,
};
use plt_core::sample::{cauchy_matrix, random_subset, sample_mds, MdsSampler};
use plt_core::vectors::{example1, example2, verify};
use plt_core::PrimeField;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

#[test]
fn criterion_01_golden_replay_aligned() {
    let start = Instant::now();
    verify(&example1(), 100).unwrap();
    assert!(start.elapsed().as_secs_f64() < 1.0, "must finish within 1 s");
    println!("ACCEPTANCE 1 PASS: aligned reference instance replays bit-exactly, 100 recoveries");
}

#[test]
fn criterion_02_golden_replay_embedded() {
    let start = Instant::now();
    verify(&example2(), 100).unwrap();
    assert!(start.elapsed().as_secs_f64() < 1.0, "must finish within 1 s");
    println!("ACCEPTANCE 2 PASS: embedded reference instance replays bit-exactly with the published recovery matrix");
}

#[test]
fn criterion_03_rate_attainment() {
    let start = Instant::now();
    // the exact identity on the whole sweep: L / rows(G) equals the
    // capacity lower bound as a rational
    for k in 1..=24usize {
        for d in 1..=k {
            for l in 1..=d {
                let layout = BlockLayout::new(k, d, l).unwrap();
                let bounds = compute_bounds(k as u64, d as u64, l as u64).unwrap();
                assert_eq!(
                    Ratio::new(l as u64, layout.total_rows() as u64),
                    bounds.lower,
                    "({k},{d},{l})"
                );
            }
        }
    }
    // generated queries carry exactly that many rows; sub-grid kept to
    // trailing widths where exhaustive MDS completion stays cheap
    let f = PrimeField::new(101).unwrap();
    let mut checked = 0usize;
    for k in 1..=24usize {
        for d in 1..=k {
            if d + k % d > 10 {
                continue;
            }
            for l in 1..=d {
                let mut rng = ChaCha20Rng::seed_from_u64((k * 625 + d * 25 + l) as u64);
                let demand = Demand::random(f, k, d, l, MdsSampler::Grs, &mut rng).unwrap();
                let (query, state) = generate_query(&demand, &mut rng).unwrap();
                assert_eq!(query.matrix.rows(), state.layout.total_rows());
                let bounds = compute_bounds(k as u64, d as u64, l as u64).unwrap();
                assert_eq!(
                    Ratio::new(l as u64, query.matrix.rows() as u64),
                    bounds.lower
                );
                checked += 1;
            }
        }
    }
    // both demand placements at the worked shapes
    for (k, d, l) in [(20usize, 8, 3), (20, 6, 3), (12, 4, 2)] {
        let layout = BlockLayout::new(k, d, l).unwrap();
        for chosen in 0..=layout.partition_blocks() {
            let mut rng = ChaCha20Rng::seed_from_u64(chosen as u64);
            let demand = Demand::random(f, k, d, l, MdsSampler::Grs, &mut rng).unwrap();
            let overrides = QueryOverrides {
                chosen_block: Some(chosen),
                ..Default::default()
            };
            let (query, _) = generate_query_with(&demand, &mut rng, &overrides).unwrap();
            assert_eq!(query.matrix.rows(), layout.total_rows());
            checked += 1;
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 30.0, "sweep must finish within 30 s, took {elapsed:.1}");
    println!(
        "ACCEPTANCE 3 PASS: L/rows(G) equals the capacity lower bound for all K<=24 ({checked} queries generated)"
    );
}

#[test]
fn criterion_04_converse_oracle_agreement() {
    let start = Instant::now();
    let mut instances = 0usize;
    for k in 1..=30u64 {
        for d in 1..=k {
            for l in 1..=d {
                let (value, witness) = ilp_converse_oracle(k, d, l).unwrap();
                let closed = closed_form_converse(k, d, l).unwrap();
                assert_eq!(value, closed, "({k},{d},{l})");
                assert_eq!(value, l * (k / d) + l.min(k % d));
                assert!(witness_feasible(&witness, k, d));
                assert_eq!(witness_objective(&witness, l), value);
                instances += 1;
            }
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 60.0, "sweep must finish within 60 s, took {elapsed:.1}");
    println!(
        "ACCEPTANCE 4 PASS: exhaustive program oracle equals the closed form on {instances} instances"
    );
}

#[test]
fn criterion_05_tightness_classification() {
    for k in 1..=30u64 {
        for d in 1..=k {
            for l in 1..=d {
                let b = compute_bounds(k, d, l).unwrap();
                let r = k % d;
                let predicted = r <= l || (r > 0 && d % r == 0);
                assert_eq!(b.tight, predicted, "({k},{d},{l})");
                if predicted {
                    assert_eq!(b.lower, b.upper, "({k},{d},{l})");
                } else {
                    assert!(b.lower < b.upper, "({k},{d},{l})");
                }
            }
        }
    }
    println!("ACCEPTANCE 5 PASS: bounds coincide exactly when R <= L or R | D, and differ otherwise");
}

#[test]
fn criterion_06_recoverability_fuzz() {
    let start = Instant::now();
    let f = PrimeField::new(13).unwrap();
    let mut grid = Vec::new();
    for k in 1..=20usize {
        for d in 1..=k {
            if (d + k % d) as u64 >= 13 {
                continue;
            }
            for l in 1..=d {
                grid.push((k, d, l));
            }
        }
    }
    let seeds_per_cell = 1000u64.div_ceil(grid.len() as u64).max(1);
    let report = recoverability_fuzz(f, &grid, seeds_per_cell, 2024).unwrap();
    assert!(report.total_runs >= 1000, "ran {}", report.total_runs);
    for cell in &report.cells {
        assert_eq!(
            cell.failures, 0,
            "({},{},{}) first failing seed {:?}",
            cell.k, cell.d, cell.l, cell.first_failure_seed
        );
    }
    assert!(report.all_pass);
    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 60.0, "fuzz must finish within 60 s, took {elapsed:.1}");
    println!(
        "ACCEPTANCE 6 PASS: {} end-to-end sessions over {} cells all recovered V*X_W exactly",
        report.total_runs,
        report.cells.len()
    );
}

#[test]
fn criterion_07_structural_privacy() {
    let f = PrimeField::new(13).unwrap();
    // 200 generated queries per case; posterior must equal D/K as a
    // rational for every index
    for (k, d, l) in [(20usize, 8, 3), (20, 6, 3)] {
        let layout = BlockLayout::new(k, d, l).unwrap();
        let expected = Ratio::new(d as u64, k as u64);
        for seed in 0..200u64 {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            let demand = Demand::random(f, k, d, l, MdsSampler::Grs, &mut rng).unwrap();
            let (query, _) = generate_query(&demand, &mut rng).unwrap();
            let posterior = structural_posterior(&layout, &query.permutation);
            assert!(
                posterior.iter().all(|&p| p == expected),
                "({k},{d},{l}) seed {seed}"
            );
        }
    }
    println!("ACCEPTANCE 7 PASS: structural posterior is exactly D/K for 200 queries per case");
}

#[test]
fn criterion_08_monte_carlo_privacy() {
    let f = PrimeField::new(13).unwrap();
    for (k, d, l) in [(5usize, 2, 1), (7usize, 3, 2)] {
        let report = monte_carlo_audit(
            f,
            k,
            d,
            l,
            AuditConfig {
                trials: 1_000_000,
                seed: 7,
                min_cell_count: 50,
            },
        )
        .unwrap();
        assert!(
            report.max_posterior_deviation <= 0.02,
            "({k},{d},{l}): {report}"
        );
        assert!(report.max_tv <= 0.02, "({k},{d},{l}): {report}");
        assert_eq!(report.low_sample_cells, 0, "({k},{d},{l}): {report}");
        println!(
            "ACCEPTANCE 8 progress ({k},{d},{l}): deviation {:.5}, TV {:.5} over {} observables",
            report.max_posterior_deviation, report.max_tv, report.distinct_observables
        );
    }
    println!("ACCEPTANCE 8 PASS: Monte Carlo posterior within 0.02 of D/K at one million trials per instance");
}

#[test]
fn criterion_09_algebra_suite() {
    let start = Instant::now();
    let f = PrimeField::new(13).unwrap();

    // parity identities, 500 random instances per shape
    for (l, d) in [(2usize, 5usize), (3, 6)] {
        for seed in 0..500u64 {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            let v = sample_mds(f, l, d, MdsSampler::Grs, &mut rng).unwrap();
            let lambda = parity_check(&v).unwrap();
            assert!(v.mul(&lambda.transpose()).unwrap().is_zero(), "seed {seed}");
            assert_eq!(lambda.rows(), d - l);
            assert_eq!(lambda.rank(), d - l);
            assert!(lambda.is_mds().unwrap(), "seed {seed}");
        }
    }

    // pinned extension, 500 random instances per shape
    for (rows, cols, len) in [(2usize, 4usize, 7usize), (3, 6, 8)] {
        for seed in 0..500u64 {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            let pinned = sample_mds(f, rows, cols, MdsSampler::Grs, &mut rng).unwrap();
            let positions = random_subset(&mut rng, len, cols);
            let h = extend_mds_pinned(&pinned, len, &positions, &mut rng).unwrap();
            for (j, &p) in positions.iter().enumerate() {
                for r in 0..rows {
                    assert_eq!(h.get(r, p), pinned.get(r, j), "seed {seed}");
                }
            }
            assert!(h.is_mds().unwrap(), "seed {seed}");
        }
    }

    // generator from parity, 500 random instances
    for seed in 0..500u64 {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let h = sample_mds(f, 2, 5, MdsSampler::Grs, &mut rng).unwrap();
        let g = generator_from_parity(&h).unwrap();
        assert!(g.mul(&h.transpose()).unwrap().is_zero(), "seed {seed}");
        assert_eq!(g.rank(), 3);
        assert!(g.is_mds().unwrap(), "seed {seed}");
    }

    // Cauchy super-regularity, exhaustive up to 5x5
    use itertools::Itertools;
    let big = PrimeField::new(101).unwrap();
    for seed in 0..20u64 {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let pts = big.sample_distinct(&mut rng, 10).unwrap();
        let c = cauchy_matrix(big, &pts[..5], &pts[5..]).unwrap();
        for size in 1..=5usize {
            for rows in (0..5).combinations(size) {
                for cols in (0..5usize).combinations(size) {
                    let sub = c.select_rows(&rows).select_columns(&cols);
                    assert_ne!(sub.determinant().unwrap(), 0, "seed {seed}");
                }
            }
        }
    }

    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 30.0, "suite must finish within 30 s, took {elapsed:.1}");
    println!("ACCEPTANCE 9 PASS: parity/extension/generator identities over 500 instances per shape; Cauchy super-regular up to 5x5");
}

#[test]
fn criterion_10_service_round_trip() {
    let start = Instant::now();
    let f = PrimeField::new(13).unwrap();

    // library route: dataset -> server thread -> retrieve
    let dataset = plt_service::Dataset::generate(f, 20, 7);
    let local = dataset.as_vector();
    let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    {
        let dataset = dataset.clone();
        std::thread::spawn(move || plt_service::server::serve_listener(listener, dataset));
    }
    for (d, l, seed) in [(6usize, 3usize, 1u64), (8, 3, 2), (4, 2, 3)] {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let demand = Demand::random(f, 20, d, l, MdsSampler::Grs, &mut rng).unwrap();
        let outcome = plt_service::retrieve(addr, &demand, seed).unwrap();
        assert_eq!(
            outcome.demand_values,
            demand.evaluate(&local).unwrap().as_slice()
        );
        let layout = BlockLayout::new(20, d, l).unwrap();
        assert_eq!(outcome.downloaded, layout.total_rows());
        assert_eq!(
            outcome.rate,
            Ratio::new(l as u64, layout.total_rows() as u64)
        );
    }

    // binary route: gen-dataset, serve, retrieve as processes
    let bin = env!("CARGO_BIN_EXE_plt");
    let dir = tempfile::tempdir().unwrap();
    let data_path = dir.path().join("data.txt");
    let status = std::process::Command::new(bin)
        .args([
            "gen-dataset",
            "--k",
            "20",
            "--p",
            "13",
            "--seed",
            "7",
            "--out",
        ])
        .arg(&data_path)
        .status()
        .unwrap();
    assert!(status.success());

    let port_probe = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let port = port_probe.local_addr().unwrap().port();
    drop(port_probe);
    let listen = format!("127.0.0.1:{port}");
    let mut server = std::process::Command::new(bin)
        .args(["serve", "--dataset"])
        .arg(&data_path)
        .args(["--listen", &listen])
        .spawn()
        .unwrap();
    // wait for readiness
    let mut ready = false;
    for _ in 0..100 {
        if std::net::TcpStream::connect(&listen).is_ok() {
            ready = true;
            break;
        }
        std::thread::sleep(std::time::Duration::from_millis(20));
    }
    assert!(ready, "server process did not come up");

    let coeffs_path = dir.path().join("v.txt");
    std::fs::write(
        &coeffs_path,
        "7 3 12 10 2 1\n3 6 5 12 8 3\n5 12 1 4 6 9\n",
    )
    .unwrap();
    let output = std::process::Command::new(bin)
        .args(["retrieve", "--addr", &listen, "--support", "2,4,5,7,8,10"])
        .args(["--coeffs-file"])
        .arg(&coeffs_path)
        .args(["--seed", "5"])
        .output()
        .unwrap();
    server.kill().ok();
    assert!(
        output.status.success(),
        "retrieve failed: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    let stdout = String::from_utf8_lossy(&output.stdout);

    // oracle: same dataset (seed 7), published coefficient rows
    let coeffs = plt_core::FieldMatrix::from_rows(
        f,
        &[
            &[7, 3, 12, 10, 2, 1],
            &[3, 6, 5, 12, 8, 3],
            &[5, 12, 1, 4, 6, 9],
        ],
    )
    .unwrap();
    let demand = Demand::new(20, vec![1, 3, 4, 6, 7, 9], coeffs).unwrap();
    let expected = demand.evaluate(&local).unwrap();
    let expected_line = format!(
        "Z = [{}]",
        expected
            .as_slice()
            .iter()
            .map(u64::to_string)
            .collect::<Vec<_>>()
            .join(" ")
    );
    assert!(
        stdout.contains(&expected_line),
        "stdout was: {stdout}, expected {expected_line}"
    );
    assert!(
        stdout.contains("downloaded 11 symbols"),
        "stdout was: {stdout}"
    );

    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 5.0, "round trip must finish within 5 s, took {elapsed:.1}");
    println!("ACCEPTANCE 10 PASS: dataset/serve/retrieve round trip recovers the oracle demand with download = rows(G)");
    let _ = FieldVector::zeros(f, 1);
}
