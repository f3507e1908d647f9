//! TCP answer server. Per connection: send `hello`, read one query
//! line, reply with `answer` or a structured `error`. Malformed input
//! never takes the server down. The server learns the demand
//! parameters only from the query's declared shape.

use std::io::{BufRead, BufReader, Write};
use std::net::{TcpListener, TcpStream, ToSocketAddrs};
use std::sync::Arc;

use plt_core::protocol::compute_answer;

use crate::dataset::Dataset;
use crate::error::Result;
use crate::wire::{code, encode, decode, query_from_wire, WireMessage};

/// Computes the reply for one wire message; pure, hence the same query
/// bytes always produce the same answer bytes.
pub fn answer_wire_query(dataset: &Dataset, msg: &WireMessage) -> WireMessage {
    match query_from_wire(msg, dataset.field(), dataset.len()) {
        Ok(query) => match compute_answer(&query, &dataset.as_vector()) {
            Ok(y) => WireMessage::Answer {
                y: y.as_slice().to_vec(),
            },
            Err(e) => WireMessage::error(code::SHAPE_MISMATCH, e.to_string()),
        },
        Err((code, detail)) => WireMessage::Error { code, detail },
    }
}

fn handle_connection(stream: TcpStream, dataset: &Dataset) -> Result<()> {
    let mut writer = stream.try_clone()?;
    writer.write_all(
        encode(&WireMessage::Hello {
            p: dataset.field().modulus(),
            k: dataset.len(),
        })
        .as_bytes(),
    )?;
    writer.flush()?;

    let mut reader = BufReader::new(stream);
    let mut line = String::new();
    if reader.read_line(&mut line)? == 0 {
        return Ok(()); // peer went away before sending a query
    }
    let reply = match decode(&line) {
        Ok(msg) => answer_wire_query(dataset, &msg),
        Err(e) => WireMessage::error(code::BAD_MESSAGE, e.to_string()),
    };
    writer.write_all(encode(&reply).as_bytes())?;
    writer.flush()?;
    Ok(())
}

/// Serves connections from an already-bound listener, one worker
/// thread per connection; the dataset is immutable and shared.
pub fn serve_listener(listener: TcpListener, dataset: Dataset) -> Result<()> {
    let dataset = Arc::new(dataset);
    for stream in listener.incoming() {
        match stream {
            Ok(stream) => {
                let dataset = Arc::clone(&dataset);
                std::thread::spawn(move || {
                    if let Err(e) = handle_connection(stream, &dataset) {
                        eprintln!("connection error: {e}");
                    }
                });
            }
            Err(e) => eprintln!("accept error: {e}"),
        }
    }
    Ok(())
}

/// Binds and serves forever.
pub fn serve(dataset: Dataset, addr: impl ToSocketAddrs) -> Result<()> {
    let listener = TcpListener::bind(addr)?;
    eprintln!(
        "serving {} messages over F_{} on {}",
        dataset.len(),
        dataset.field().modulus(),
        listener.local_addr()?
    );
    serve_listener(listener, dataset)
}

#[cfg(test)]
mod tests {
    use super::*;
    use plt_core::PrimeField;

    #[test]
    fn deterministic_per_query_bytes() {
        let f = PrimeField::new(13).unwrap();
        let dataset = Dataset::new(f, vec![1, 2, 3]).unwrap();
        let msg = WireMessage::Query {
            p: 13,
            k: 3,
            rows: 1,
            cols: 3,
            g: vec![1, 1, 1],
            pi: vec![1, 2, 3],
        };
        let a = encode(&answer_wire_query(&dataset, &msg));
        let b = encode(&answer_wire_query(&dataset, &msg));
        assert_eq!(a, b);
        assert_eq!(decode(&a).unwrap(), WireMessage::Answer { y: vec![6] });
    }

    #[test]
    fn error_codes_surface() {
        let f = PrimeField::new(13).unwrap();
        let dataset = Dataset::new(f, vec![1, 2, 3]).unwrap();
        let msg = WireMessage::Query {
            p: 13,
            k: 3,
            rows: 1,
            cols: 3,
            g: vec![1, 1, 1],
            pi: vec![1, 1, 3],
        };
        let WireMessage::Error { code: c, .. } = answer_wire_query(&dataset, &msg) else {
            panic!("expected error");
        };
        assert_eq!(c, code::BAD_PERMUTATION);
    }
}
