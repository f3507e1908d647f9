use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use plt_core::audit::{monte_carlo_audit, AuditConfig};
use plt_core::bounds::{closed_form_converse, compute_bounds, ilp_converse_oracle};
use plt_core::protocol::Demand;
use plt_core::sample::{sample_mds, MdsSampler};
use plt_core::vectors::{example1, example2, replay};
use plt_core::{FieldMatrix, PrimeField};
use plt_service::{retrieve, Dataset};
use rand::SeedableRng;

const DEFAULT_LISTEN: &str = "127.0.0.1:7713";

#[derive(Parser)]
#[command(
    name = "plt",
    about = "Private linear transformation over a single server: capacity bounds, dataset tooling, server, client, audits, and reference replays"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the exact capacity bounds for an instance
    Bounds {
        #[arg(long)]
        k: u64,
        #[arg(long)]
        d: u64,
        #[arg(long)]
        l: u64,
    },
    /// Exhaustively minimize the answer-size program and cross-check
    /// the closed form
    IlpOracle {
        #[arg(long)]
        k: u64,
        #[arg(long)]
        d: u64,
        #[arg(long)]
        l: u64,
    },
    /// Write a random dataset file
    GenDataset {
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 13)]
        p: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output path; stdout when omitted
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Serve a dataset over TCP
    Serve {
        #[arg(long)]
        dataset: PathBuf,
        /// Listen address; defaults to $PLT_LISTEN or 127.0.0.1:7713
        #[arg(long)]
        listen: Option<String>,
    },
    /// Retrieve L combinations of a D-subset from a server
    Retrieve {
        /// Server address, host:port
        #[arg(long)]
        addr: String,
        /// Demand support, 1-based comma-separated indices
        #[arg(long, value_delimiter = ',')]
        support: Vec<usize>,
        /// File with L lines of D space-separated coefficients
        #[arg(long, conflicts_with = "random_dim")]
        coeffs_file: Option<PathBuf>,
        /// Draw a random MDS coefficient matrix with this many rows
        #[arg(long)]
        random_dim: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Monte Carlo privacy audit of query generation
    Audit {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        d: usize,
        #[arg(long)]
        l: usize,
        #[arg(long, default_value_t = 1_000_000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 13)]
        p: u64,
        /// Also write the report as JSON
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Replay a published reference construction and verify it
    /// bit-exactly
    Demo {
        /// Which instance: 1 (aligned) or 2 (embedded)
        #[arg(long)]
        example: u8,
    },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, Box<dyn std::error::Error>> {
    match cli.command {
        Command::Bounds { k, d, l } => {
            let b = compute_bounds(k, d, l)?;
            println!(
                "R={} S={} lower={} upper={} tight={}",
                b.r,
                b.s,
                b.lower,
                b.upper,
                if b.tight { "yes" } else { "no" }
            );
        }
        Command::IlpOracle { k, d, l } => {
            let (value, witness) = ilp_converse_oracle(k, d, l)?;
            let closed = closed_form_converse(k, d, l)?;
            let terms: Vec<String> = witness
                .iter()
                .enumerate()
                .filter(|(_, &t)| t > 0)
                .map(|(idx, &t)| format!("T_{}={}", idx + 1, t))
                .collect();
            println!(
                "optimum={value} closed_form={closed} witness: {}",
                terms.join(" ")
            );
            if value != closed {
                eprintln!("oracle and closed form disagree");
                return Ok(ExitCode::FAILURE);
            }
        }
        Command::GenDataset { k, p, seed, out } => {
            let field = PrimeField::new(p)?;
            let dataset = Dataset::generate(field, k, seed);
            match out {
                Some(path) => {
                    dataset.save(&path)?;
                    eprintln!("wrote {} messages over F_{p} to {}", k, path.display());
                }
                None => print!("{}", dataset.to_text()),
            }
        }
        Command::Serve { dataset, listen } => {
            let dataset = Dataset::load(&dataset)?;
            let addr = listen
                .or_else(|| std::env::var("PLT_LISTEN").ok())
                .unwrap_or_else(|| DEFAULT_LISTEN.to_string());
            plt_service::server::serve(dataset, addr)?;
        }
        Command::Retrieve {
            addr,
            support,
            coeffs_file,
            random_dim,
            seed,
        } => {
            let (p, k) = plt_service::client::fetch_hello(&addr)?;
            let field = PrimeField::new(p)?;
            if support.is_empty() {
                return Err("demand support is empty".into());
            }
            if support.iter().any(|&i| i == 0 || i > k) {
                return Err(format!("support indices must lie in 1..={k}").into());
            }
            let mut zero_based: Vec<usize> = support.iter().map(|&i| i - 1).collect();
            zero_based.sort_unstable();
            zero_based.dedup();
            if zero_based.len() != support.len() {
                return Err("support indices must be distinct".into());
            }
            let d = zero_based.len();
            let coeffs = match (coeffs_file, random_dim) {
                (Some(path), None) => parse_matrix(&std::fs::read_to_string(path)?, field, d)?,
                (None, Some(l)) => {
                    let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(seed ^ 0xC0FFEE);
                    sample_mds(field, l, d, MdsSampler::Grs, &mut rng)?
                }
                _ => return Err("provide exactly one of --coeffs-file or --random-dim".into()),
            };
            let demand = Demand::new(k, zero_based, coeffs)?;
            let outcome = retrieve(&addr, &demand, seed)?;
            let z: Vec<String> = outcome.demand_values.iter().map(u64::to_string).collect();
            println!("Z = [{}]", z.join(" "));
            println!(
                "downloaded {} symbols; rate {}",
                outcome.downloaded, outcome.rate
            );
            println!(
                "bounds: lower {} upper {} ({})",
                outcome.bounds.lower,
                outcome.bounds.upper,
                if outcome.bounds.tight {
                    "tight"
                } else {
                    "gap"
                }
            );
        }
        Command::Audit {
            k,
            d,
            l,
            trials,
            seed,
            p,
            json,
        } => {
            let field = PrimeField::new(p)?;
            let report = monte_carlo_audit(
                field,
                k,
                d,
                l,
                AuditConfig {
                    trials,
                    seed,
                    ..Default::default()
                },
            )?;
            println!("{report}");
            if let Some(path) = json {
                std::fs::write(&path, serde_json::to_string_pretty(&report)?)?;
                eprintln!("wrote JSON report to {}", path.display());
            }
        }
        Command::Demo { example } => {
            let inst = match example {
                1 => example1(),
                2 => example2(),
                other => return Err(format!("no reference instance {other}").into()),
            };
            println!("replaying: {}", inst.name);
            let checks = replay(&inst, 100)?;
            let mut ok = true;
            for c in &checks {
                println!("  [{}] {}", if c.pass { "PASS" } else { "FAIL" }, c.label);
                ok &= c.pass;
            }
            if !ok {
                return Ok(ExitCode::FAILURE);
            }
            println!("all checks passed");
        }
    }
    Ok(ExitCode::SUCCESS)
}

/// Parses a coefficient matrix: one row per line, space-separated.
fn parse_matrix(
    text: &str,
    field: PrimeField,
    expected_cols: usize,
) -> Result<FieldMatrix, Box<dyn std::error::Error>> {
    let mut rows: Vec<Vec<u64>> = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row: Vec<u64> = line
            .split_whitespace()
            .map(str::parse)
            .collect::<Result<_, _>>()?;
        if row.len() != expected_cols {
            return Err(format!(
                "coefficient row has {} entries, support has {expected_cols}",
                row.len()
            )
            .into());
        }
        rows.push(row);
    }
    let refs: Vec<&[u64]> = rows.iter().map(Vec::as_slice).collect();
    Ok(FieldMatrix::from_rows(field, &refs)?)
}
