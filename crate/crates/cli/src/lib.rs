//! Support library for the `qutel` binary: JSON state files and the
//! report envelope, exposed so integration tests and fixture tooling can
//! reuse them.

pub mod report;
pub mod statefile;
