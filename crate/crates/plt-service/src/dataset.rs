//! Flat-file message store: first line `p K`, second line the K
//! residues, space-separated decimal.

use std::path::Path;

use plt_core::{FieldVector, PrimeField};
use rand::{Rng, SeedableRng};

use crate::error::{Result, ServiceError};

#[derive(Debug, Clone)]
pub struct Dataset {
    field: PrimeField,
    messages: Vec<u64>,
}

impl Dataset {
    pub fn new(field: PrimeField, messages: Vec<u64>) -> Result<Self> {
        if let Some(&bad) = messages.iter().find(|&&m| m >= field.modulus()) {
            return Err(ServiceError::Dataset(format!(
                "residue {bad} is not reduced mod {}",
                field.modulus()
            )));
        }
        Ok(Dataset { field, messages })
    }

    /// Uniform random messages, reproducible from the seed.
    pub fn generate(field: PrimeField, k: usize, seed: u64) -> Self {
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(seed);
        let messages = (0..k).map(|_| rng.gen_range(0..field.modulus())).collect();
        Dataset { field, messages }
    }

    pub fn field(&self) -> PrimeField {
        self.field
    }

    pub fn len(&self) -> usize {
        self.messages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.messages.is_empty()
    }

    pub fn messages(&self) -> &[u64] {
        &self.messages
    }

    pub fn as_vector(&self) -> FieldVector {
        FieldVector::new(self.field, self.messages.clone())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| ServiceError::Dataset("empty file".into()))?;
        let mut parts = header.split_whitespace();
        let p: u64 = parts
            .next()
            .ok_or_else(|| ServiceError::Dataset("missing modulus".into()))?
            .parse()
            .map_err(|e| ServiceError::Dataset(format!("bad modulus: {e}")))?;
        let k: usize = parts
            .next()
            .ok_or_else(|| ServiceError::Dataset("missing message count".into()))?
            .parse()
            .map_err(|e| ServiceError::Dataset(format!("bad message count: {e}")))?;
        if parts.next().is_some() {
            return Err(ServiceError::Dataset("trailing tokens in header".into()));
        }
        let field = PrimeField::new(p)?;
        let body = lines
            .next()
            .ok_or_else(|| ServiceError::Dataset("missing message line".into()))?;
        let messages: Vec<u64> = body
            .split_whitespace()
            .map(|t| {
                t.parse()
                    .map_err(|e| ServiceError::Dataset(format!("bad residue '{t}': {e}")))
            })
            .collect::<Result<_>>()?;
        if messages.len() != k {
            return Err(ServiceError::Dataset(format!(
                "header promises {k} messages, found {}",
                messages.len()
            )));
        }
        Dataset::new(field, messages)
    }

    pub fn to_text(&self) -> String {
        let body: Vec<String> = self.messages.iter().map(u64::to_string).collect();
        format!(
            "{} {}\n{}\n",
            self.field.modulus(),
            self.messages.len(),
            body.join(" ")
        )
    }

    pub fn load(path: &Path) -> Result<Self> {
        Dataset::parse(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }
}
