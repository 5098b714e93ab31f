//! The model catalog: hardcore, two-spin, list colorings, and matchings
//! expressed as hardcore on the line graph.
//!
//! All factors are built from node-local parameters so the resulting
//! distribution classes are translation-invariant; ids only ever break ties
//! in algorithm schedules. Every catalog model has locality at most 1
//! (unary and edge factors), which construction asserts.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::graph::{Graph, LineGraphMap};

use super::{Factor, GibbsSpec, Symbol};

fn assert_edge_locality(spec: &GibbsSpec) -> Result<()> {
    if spec.locality() > 1 {
        return Err(Error::InvalidInput(format!(
            "catalog model built with locality {} > 1",
            spec.locality()
        )));
    }
    Ok(())
}

/// Weighted independent sets: alphabet {0 = empty, 1 = occupied}, a unary
/// factor (1, lambda) per vertex and a hard edge factor forbidding adjacent
/// occupation.
pub fn hardcore(g: Graph, lambda: f64) -> Result<GibbsSpec> {
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(Error::InvalidInput(format!("hardcore needs lambda >= 0, got {lambda}")));
    }
    let mut factors = Vec::new();
    for &v in g.node_ids() {
        factors.push(Factor::new(vec![v], 2, &[1.0, lambda])?);
    }
    for (u, v) in g.edges() {
        factors.push(Factor::new(vec![u, v], 2, &[1.0, 1.0, 1.0, 0.0])?);
    }
    let spec = GibbsSpec::new(g, 2, factors)?;
    assert_edge_locality(&spec)?;
    Ok(spec)
}

/// Two-spin model: edge tables ((beta, 1), (1, gamma)) and a vertex field
/// (lambda, 1).
pub fn two_spin(g: Graph, beta: f64, gamma: f64, lambda: f64) -> Result<GibbsSpec> {
    for (name, x) in [("beta", beta), ("gamma", gamma), ("lambda", lambda)] {
        if !(x.is_finite() && x >= 0.0) {
            return Err(Error::InvalidInput(format!("two_spin needs {name} >= 0, got {x}")));
        }
    }
    let mut factors = Vec::new();
    for &v in g.node_ids() {
        factors.push(Factor::new(vec![v], 2, &[lambda, 1.0])?);
    }
    for (u, v) in g.edges() {
        factors.push(Factor::new(vec![u, v], 2, &[beta, 1.0, 1.0, gamma])?);
    }
    let spec = GibbsSpec::new(g, 2, factors)?;
    assert_edge_locality(&spec)?;
    Ok(spec)
}

/// List colorings: hard inequality factors on edges plus a unary mask that
/// zeroes the colours missing from each node's list. Conditioning and lists
/// therefore share one mechanism.
pub fn coloring(g: Graph, lists: &BTreeMap<u64, Vec<Symbol>>) -> Result<GibbsSpec> {
    let q = 1 + lists
        .values()
        .flatten()
        .copied()
        .max()
        .ok_or_else(|| Error::InvalidInput("coloring needs at least one list".into()))?;
    let mut factors = Vec::new();
    for &v in g.node_ids() {
        let list = lists
            .get(&v)
            .ok_or_else(|| Error::InvalidInput(format!("no colour list for node {v}")))?;
        if list.is_empty() {
            return Err(Error::InvalidInput(format!("empty colour list at node {v}")));
        }
        let mut mask = vec![0.0; q];
        for &c in list {
            mask[c] = 1.0;
        }
        factors.push(Factor::new(vec![v], q, &mask)?);
    }
    let mut neq = vec![1.0; q * q];
    for c in 0..q {
        neq[c * q + c] = 0.0;
    }
    for (u, v) in g.edges() {
        factors.push(Factor::new(vec![u, v], q, &neq)?);
    }
    let spec = GibbsSpec::new(g, q, factors)?;
    assert_edge_locality(&spec)?;
    Ok(spec)
}

/// Proper q-colorings: every node gets the full list 0..q.
pub fn coloring_uniform(g: Graph, q: usize) -> Result<GibbsSpec> {
    let full: Vec<Symbol> = (0..q).collect();
    let lists = g.node_ids().iter().map(|&v| (v, full.clone())).collect();
    coloring(g, &lists)
}

/// Monomer-dimer / matchings with edge weight lambda, expressed as hardcore
/// with weights on the line graph. The edge <-> node mapping is returned so
/// results translate back to the original graph.
pub fn matching(g: &Graph, lambda: f64) -> Result<(GibbsSpec, LineGraphMap)> {
    let (lg, map) = g.line_graph();
    let spec = hardcore(lg, lambda)?;
    Ok((spec, map))
}
