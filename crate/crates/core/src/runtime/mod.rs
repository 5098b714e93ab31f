//! Execution engines for the LOCAL and SLOCAL models, labeled per-node
//! randomness, network decomposition, and the SLOCAL -> LOCAL transform
//! with locally certifiable failures.

use std::collections::BTreeMap;

use crate::gibbs::Symbol;

mod decomp;
mod local;
mod slocal;
mod tape;
mod transform;

pub use decomp::{network_decomposition, validate_decomposition, Decomposition, DecompositionParams};
pub use local::{run_local, LocalOutputs, LocalView, ViewTape};
pub use slocal::{
    effective_locality, run_slocal, LocalityReport, SlocalAlgorithm, SlocalPass, StepContext,
};
pub use tape::{
    derive_seed, draw_bernoulli, enumerate_outcomes, DrawLabel, SeededTape, Tape,
    DEFAULT_TAPE_BUDGET,
};
pub use transform::{
    compile_schedule, execute_schedule, slocal_to_local, CompiledSchedule, TransformReport,
};

/// Per-node result: output symbol (if any) plus the local failure flag.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeResult {
    pub value: Option<Symbol>,
    pub failed: bool,
}

/// Per-node output values and locally certifiable failure flags.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SampleOutcome {
    per_node: BTreeMap<u64, NodeResult>,
}

impl SampleOutcome {
    pub fn insert(&mut self, v: u64, r: NodeResult) {
        self.per_node.insert(v, r);
    }

    pub fn value(&self, v: u64) -> Option<Symbol> {
        self.per_node.get(&v).and_then(|r| r.value)
    }

    pub fn failed(&self, v: u64) -> bool {
        self.per_node.get(&v).map_or(false, |r| r.failed)
    }

    pub fn any_failed(&self) -> bool {
        self.per_node.values().any(|r| r.failed)
    }

    pub fn failed_count(&self) -> usize {
        self.per_node.values().filter(|r| r.failed).count()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, &NodeResult)> {
        self.per_node.iter().map(|(&v, r)| (v, r))
    }

    pub fn len(&self) -> usize {
        self.per_node.len()
    }

    pub fn is_empty(&self) -> bool {
        self.per_node.is_empty()
    }

    /// Output values keyed by node, for nodes that produced one.
    pub fn values_map(&self) -> BTreeMap<u64, Symbol> {
        self.per_node
            .iter()
            .filter_map(|(&v, r)| r.value.map(|s| (v, s)))
            .collect()
    }
}

impl FromIterator<(u64, NodeResult)> for SampleOutcome {
    fn from_iter<T: IntoIterator<Item = (u64, NodeResult)>>(iter: T) -> Self {
        SampleOutcome {
            per_node: iter.into_iter().collect(),
        }
    }
}
