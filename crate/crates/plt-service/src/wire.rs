//! JSON-lines wire protocol: one UTF-8 JSON object per line. The
//! server greets with `hello`, the client sends `query`, the server
//! replies `answer` or `error`. Permutations travel 1-indexed.

use plt_core::protocol::{Permutation, Query};
use plt_core::{FieldMatrix, PrimeField};
use serde::{Deserialize, Serialize};

use crate::error::{Result, ServiceError};

pub mod code {
    pub const BAD_MESSAGE: &str = "BAD_MESSAGE";
    pub const BAD_PERMUTATION: &str = "BAD_PERMUTATION";
    pub const FIELD_MISMATCH: &str = "FIELD_MISMATCH";
    pub const SHAPE_MISMATCH: &str = "SHAPE_MISMATCH";
    pub const ENTRY_RANGE: &str = "ENTRY_RANGE";
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum WireMessage {
    Hello {
        p: u64,
        k: usize,
    },
    Query {
        p: u64,
        k: usize,
        rows: usize,
        cols: usize,
        /// Row-major coefficient matrix, reduced mod p.
        g: Vec<u64>,
        /// 1-indexed permutation images.
        pi: Vec<usize>,
    },
    Answer {
        y: Vec<u64>,
    },
    Error {
        code: String,
        detail: String,
    },
}

impl WireMessage {
    pub fn error(code: &str, detail: impl Into<String>) -> Self {
        WireMessage::Error {
            code: code.to_string(),
            detail: detail.into(),
        }
    }
}

/// One message per line; serialization is deterministic (fixed field
/// order), so identical queries yield identical bytes.
pub fn encode(msg: &WireMessage) -> String {
    let mut s = serde_json::to_string(msg).expect("wire messages serialize");
    s.push('\n');
    s
}

pub fn decode(line: &str) -> Result<WireMessage> {
    serde_json::from_str(line.trim_end()).map_err(|e| ServiceError::Malformed(e.to_string()))
}

pub fn query_to_wire(query: &Query, field: PrimeField) -> WireMessage {
    WireMessage::Query {
        p: field.modulus(),
        k: query.matrix.cols(),
        rows: query.matrix.rows(),
        cols: query.matrix.cols(),
        g: query.matrix.as_flat().to_vec(),
        pi: query.permutation.images().iter().map(|&i| i + 1).collect(),
    }
}

/// Validates a wire query against the dataset parameters and rebuilds
/// the in-memory form. Returns (code, detail) on rejection.
pub fn query_from_wire(
    msg: &WireMessage,
    field: PrimeField,
    dataset_len: usize,
) -> std::result::Result<Query, (String, String)> {
    let WireMessage::Query {
        p,
        k,
        rows,
        cols,
        g,
        pi,
    } = msg
    else {
        return Err((
            code::BAD_MESSAGE.to_string(),
            "expected a query message".to_string(),
        ));
    };
    if *p != field.modulus() {
        return Err((
            code::FIELD_MISMATCH.to_string(),
            format!("query is over F_{p}, dataset over F_{}", field.modulus()),
        ));
    }
    if *k != dataset_len || *cols != dataset_len {
        return Err((
            code::SHAPE_MISMATCH.to_string(),
            format!("query addresses {k} messages, dataset stores {dataset_len}"),
        ));
    }
    if g.len() != rows * cols {
        return Err((
            code::SHAPE_MISMATCH.to_string(),
            format!("{rows}x{cols} matrix needs {} entries, got {}", rows * cols, g.len()),
        ));
    }
    if let Some(&bad) = g.iter().find(|&&e| e >= *p) {
        return Err((
            code::ENTRY_RANGE.to_string(),
            format!("entry {bad} is not reduced mod {p}"),
        ));
    }
    if pi.len() != dataset_len {
        return Err((
            code::BAD_PERMUTATION.to_string(),
            format!("permutation has {} images, expected {dataset_len}", pi.len()),
        ));
    }
    if pi.iter().any(|&i| i == 0 || i > dataset_len) {
        return Err((
            code::BAD_PERMUTATION.to_string(),
            "permutation images must lie in 1..=K".to_string(),
        ));
    }
    let zero_based: Vec<usize> = pi.iter().map(|&i| i - 1).collect();
    let permutation = Permutation::new(zero_based).map_err(|_| {
        (
            code::BAD_PERMUTATION.to_string(),
            "permutation images are not a bijection".to_string(),
        )
    })?;
    let matrix = FieldMatrix::from_flat(field, *rows, *cols, g).map_err(|e| {
        (code::SHAPE_MISMATCH.to_string(), e.to_string())
    })?;
    Ok(Query {
        matrix,
        permutation,
    })
}
