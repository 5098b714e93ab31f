//! The LOCAL execution engine.
//!
//! A t-round algorithm at node v is a pure function of v's radius-t view:
//! the induced ball subgraph, the inputs of ball nodes, and their labeled
//! randomness. Views are built by extraction and the algorithm receives only
//! the view, so reading outside it is structurally impossible.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::graph::Graph;

use super::tape::{DrawLabel, SeededTape, Tape};

/// Everything a node may legally read in `radius` rounds.
pub struct LocalView<'a, I> {
    center: u64,
    radius: u32,
    subgraph: Graph,
    inputs: BTreeMap<u64, &'a I>,
}

impl<'a, I> LocalView<'a, I> {
    pub fn center(&self) -> u64 {
        self.center
    }

    pub fn radius(&self) -> u32 {
        self.radius
    }

    /// The ball's induced subgraph, with original node ids.
    pub fn subgraph(&self) -> &Graph {
        &self.subgraph
    }

    pub fn input(&self, v: u64) -> Result<&I> {
        self.inputs
            .get(&v)
            .copied()
            .ok_or_else(|| Error::ContractViolation(format!("node {v} outside the radius-{} view", self.radius)))
    }

    pub fn nodes(&self) -> &[u64] {
        self.subgraph.node_ids()
    }
}

/// Randomness handles for the nodes inside one view.
pub struct ViewTape<'t> {
    tape: &'t mut SeededTape,
    allowed: Vec<u64>,
    radius: u32,
}

impl ViewTape<'_> {
    /// Draw from the stream of a node inside the view.
    pub fn draw(&mut self, node: u64, purpose: &str, probs: &[f64]) -> Result<usize> {
        if self.allowed.binary_search(&node).is_err() {
            return Err(Error::ContractViolation(format!(
                "randomness of node {node} outside the radius-{} view",
                self.radius
            )));
        }
        Ok(self.tape.draw_index(DrawLabel::new(node, 0, purpose), probs))
    }
}

/// Per-node outputs of a LOCAL run: value plus local failure flag.
pub type LocalOutputs<O> = BTreeMap<u64, (O, bool)>;

/// Runs a t-round LOCAL algorithm on every node. Each node's result is a
/// pure function of its view and the per-label randomness derived from
/// `seed`, so any evaluation order gives identical results.
pub fn run_local<I, O>(
    g: &Graph,
    inputs: &BTreeMap<u64, I>,
    t: u32,
    seed: u64,
    alg: impl Fn(&LocalView<'_, I>, &mut ViewTape<'_>) -> Result<(O, bool)>,
) -> Result<LocalOutputs<O>> {
    let mut tape = SeededTape::new(seed);
    let mut out = BTreeMap::new();
    for &v in g.node_ids() {
        let ball = g.ball(v, t)?;
        let subgraph = g.induced(&ball)?;
        let mut view_inputs = BTreeMap::new();
        for &u in &ball {
            if let Some(x) = inputs.get(&u) {
                view_inputs.insert(u, x);
            }
        }
        let view = LocalView {
            center: v,
            radius: t,
            subgraph,
            inputs: view_inputs,
        };
        let mut vt = ViewTape {
            tape: &mut tape,
            allowed: ball.iter().copied().collect(),
            radius: t,
        };
        let (value, failed) = alg(&view, &mut vt)?;
        out.insert(v, (value, failed));
    }
    Ok(out)
}
