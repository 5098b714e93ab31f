//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown node id {0}")]
    UnknownNode(u64),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("configuration is incomplete: node {0} unassigned")]
    IncompleteConfig(u64),

    #[error("conflicting assignment at node {node}: {a} vs {b}")]
    ConflictingAssignment { node: u64, a: usize, b: usize },

    #[error("partial configuration is infeasible{}", detail_suffix(.0))]
    Infeasible(Option<String>),

    #[error("state budget exceeded: needed about {needed:e} states, budget is {budget:e}")]
    BudgetExceeded { needed: f64, budget: f64 },

    #[error("tape budget exceeded: more than {max_paths} outcome paths")]
    TapeBudgetExceeded { max_paths: usize },

    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("contract violation: {0}")]
    ContractViolation(String),

    #[error("inferencer contract breach: {0}")]
    InferencerBreach(String),
}

fn detail_suffix(detail: &Option<String>) -> String {
    match detail {
        Some(d) => format!(": {d}"),
        None => String::new(),
    }
}

pub type Result<T> = std::result::Result<T, Error>;
