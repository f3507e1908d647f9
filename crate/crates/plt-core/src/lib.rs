//! Single-server private linear transformation with per-index privacy.
//!
//! A server stores K field elements; a user wants L linear combinations
//! (with MDS coefficients) of a D-subset of them without revealing, for
//! any single index, whether it is part of the computation. This crate
//! provides:
//!
//! * exact linear algebra over prime fields ([`field`], [`matrix`],
//!   [`sample`]),
//! * the MDS code constructions the protocol builds on ([`mds`]),
//! * exact download-rate capacity bounds plus an exhaustive
//!   integer-program oracle ([`bounds`]),
//! * query generation, the server answer, and demand recovery
//!   ([`protocol`]),
//! * privacy and recoverability audits ([`audit`]),
//! * the reference instances over F_13 used by golden tests and the
//!   `demo` subcommand of the CLI ([`vectors`]).

pub mod audit;
pub mod bounds;
pub mod error;
pub mod field;
pub mod matrix;
pub mod mds;
pub mod protocol;
pub mod sample;
pub mod vectors;

pub use error::{Error, Result};
pub use field::PrimeField;
pub use matrix::{FieldMatrix, FieldVector};
