//! Simulation and algorithm library for sampling, inference and counting
//! over local Gibbs distributions in the LOCAL and SLOCAL models, validated
//! at desk scale against brute-force oracles.

pub mod corpus;
pub mod error;
pub mod gibbs;
pub mod inference;
pub mod graph;
pub mod oracle;
pub mod samplers;
pub mod ssm;
pub mod runtime;

pub use error::{Error, Result};
