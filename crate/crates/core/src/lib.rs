//! Simulation, attack synthesis and round-complexity audits for two-party
//! quantum coin flipping.

pub mod adversary;
pub mod cli;
pub mod error;
pub mod family;
pub mod protocol;
pub mod qdist;
pub mod qmatrix;
pub mod report;
pub mod sim;
pub mod trajectory;

pub use error::{Error, Result};
