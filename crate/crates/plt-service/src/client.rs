//! Client side of the wire protocol: generate a query, exchange one
//! round with the server, recover the demand, and report download
//! statistics against the capacity bounds.

use std::io::{BufRead, BufReader, Write};
use std::net::{TcpStream, ToSocketAddrs};

use num_rational::Ratio;
use plt_core::bounds::{compute_bounds, CapacityBounds};
use plt_core::protocol::{generate_query, recover, Demand};
use plt_core::FieldVector;
use rand::SeedableRng;

use crate::error::{Result, ServiceError};
use crate::wire::{decode, encode, query_to_wire, WireMessage};

#[derive(Debug)]
pub struct RetrieveOutcome {
    /// The recovered demand vector Z = V * X_W.
    pub demand_values: Vec<u64>,
    /// Field symbols downloaded (answer length).
    pub downloaded: usize,
    /// Achieved rate L / downloaded.
    pub rate: Ratio<u64>,
    pub bounds: CapacityBounds,
}

/// Connects just long enough to learn the server's field and message
/// count from its greeting.
pub fn fetch_hello(addr: impl ToSocketAddrs) -> Result<(u64, usize)> {
    let stream = TcpStream::connect(addr)?;
    let mut reader = BufReader::new(stream);
    let mut line = String::new();
    reader.read_line(&mut line)?;
    match decode(&line)? {
        WireMessage::Hello { p, k } => Ok((p, k)),
        other => Err(ServiceError::UnexpectedMessage(format!("{other:?}"))),
    }
}

/// Runs one full retrieval against a server. The demand is validated
/// before any network activity.
pub fn retrieve(addr: impl ToSocketAddrs, demand: &Demand, seed: u64) -> Result<RetrieveOutcome> {
    let bounds = compute_bounds(demand.k() as u64, demand.d() as u64, demand.l() as u64)?;
    let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(seed);
    let (query, state) = generate_query(demand, &mut rng)?;

    let stream = TcpStream::connect(addr)?;
    let mut writer = stream.try_clone()?;
    let mut reader = BufReader::new(stream);

    let mut line = String::new();
    reader.read_line(&mut line)?;
    match decode(&line)? {
        WireMessage::Hello { p, k } => {
            if p != demand.field().modulus() {
                return Err(ServiceError::Remote {
                    code: crate::wire::code::FIELD_MISMATCH.to_string(),
                    detail: format!("server stores residues mod {p}"),
                });
            }
            if k != demand.k() {
                return Err(ServiceError::Remote {
                    code: crate::wire::code::SHAPE_MISMATCH.to_string(),
                    detail: format!("server stores {k} messages, demand assumes {}", demand.k()),
                });
            }
        }
        other => {
            return Err(ServiceError::UnexpectedMessage(format!("{other:?}")));
        }
    }

    writer.write_all(encode(&query_to_wire(&query, demand.field())).as_bytes())?;
    writer.flush()?;

    line.clear();
    reader.read_line(&mut line)?;
    let y = match decode(&line)? {
        WireMessage::Answer { y } => y,
        WireMessage::Error { code, detail } => {
            return Err(ServiceError::Remote { code, detail });
        }
        other => return Err(ServiceError::UnexpectedMessage(format!("{other:?}"))),
    };

    let downloaded = y.len();
    if downloaded != query.matrix.rows() {
        return Err(ServiceError::Malformed(format!(
            "answer has {downloaded} entries, query matrix has {} rows",
            query.matrix.rows()
        )));
    }
    let answer = FieldVector::new(demand.field(), y);
    let z = recover(&state, &answer)?;
    Ok(RetrieveOutcome {
        demand_values: z.as_slice().to_vec(),
        downloaded,
        rate: Ratio::new(demand.l() as u64, downloaded as u64),
        bounds,
    })
}
