//! Service layer for the private linear transformation protocol:
//! dataset files, the JSON-lines wire format, a TCP answer server, and
//! the retrieving client. The `plt` binary exposes all of it plus the
//! capacity-bound and audit tooling on the command line.

pub mod client;
pub mod dataset;
pub mod error;
pub mod server;
pub mod wire;

pub use client::{retrieve, RetrieveOutcome};
pub use dataset::Dataset;
pub use error::{Result, ServiceError};
