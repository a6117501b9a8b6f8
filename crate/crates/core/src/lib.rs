//! Secret key generation over a Gaussian wiretap channel in which the
//! eavesdropper controls the medium and injects noise she knows.
//!
//! The crate covers channel simulation, estimation of the channel and of the
//! eavesdropper's distribution with confidence levels, finite-length bounds on
//! leaked information, universal hashing, LDPC-based reverse reconciliation,
//! and a driver that ties these together into a key agreement run.

pub mod csvio;
pub mod error;
pub mod estimation;
pub mod gaussmodel;
pub mod hashing;
pub mod normal;
pub mod protocol;
pub mod quadrature;
pub mod reconciliation;
pub mod secbounds;

pub use error::{Error, Result};
