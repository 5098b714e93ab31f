//! The standard desk-scale instance corpus shared by tests, the acceptance
//! suite, and the CLI examples. Tiers nest: every tier contains the ones
//! below it.

use std::sync::Arc;

use crate::gibbs::{coloring_uniform, hardcore, matching, two_spin, Instance};
use crate::graph::families::*;

pub struct CorpusEntry {
    pub name: &'static str,
    pub instance: Instance,
    /// Whether the spec is locally admissible (certified exhaustively in
    /// the corpus tests).
    pub locally_admissible: bool,
}

fn entry(name: &'static str, spec: crate::gibbs::GibbsSpec, locally_admissible: bool) -> CorpusEntry {
    CorpusEntry {
        name,
        instance: Instance::unpinned(Arc::new(spec)).unwrap(),
        locally_admissible,
    }
}

/// Instances on at most 5 nodes: hardcore at activities {0.5, 1, 2} on
/// P3/P4/C5, 3-colorings of P4 and K3, and the matching model of P4.
pub fn tier_n5() -> Vec<CorpusEntry> {
    let mut out = Vec::new();
    for (g, gname) in [(path(3), "p3"), (path(4), "p4"), (cycle(5), "c5")] {
        for (lambda, lname) in [(0.5, "0.5"), (1.0, "1"), (2.0, "2")] {
            let name: &'static str = Box::leak(
                format!("hardcore-{gname}-lambda-{lname}").into_boxed_str(),
            );
            out.push(entry(name, hardcore(g.clone(), lambda).unwrap(), true));
        }
    }
    out.push(entry("coloring-p4-q3", coloring_uniform(path(4), 3).unwrap(), true));
    out.push(entry("coloring-k3-q3", coloring_uniform(complete(3), 3).unwrap(), true));
    out.push(entry(
        "matching-p4",
        matching(&path(4), 1.0).unwrap().0,
        true,
    ));
    out
}

/// Instances on at most 8 nodes.
pub fn tier_n8() -> Vec<CorpusEntry> {
    let mut out = tier_n5();
    out.push(entry("hardcore-c6-lambda-1", hardcore(cycle(6), 1.0).unwrap(), true));
    out.push(entry("hardcore-c8-lambda-0.8", hardcore(cycle(8), 0.8).unwrap(), true));
    out.push(entry(
        "two-spin-p4",
        two_spin(path(4), 0.6, 0.8, 1.2).unwrap(),
        true,
    ));
    out.push(entry("coloring-c5-q3", coloring_uniform(cycle(5), 3).unwrap(), true));
    out.push(entry(
        "matching-c6",
        matching(&cycle(6), 1.5).unwrap().0,
        true,
    ));
    out
}

/// Instances on at most 12 nodes.
pub fn tier_n12() -> Vec<CorpusEntry> {
    let mut out = tier_n8();
    out.push(entry("hardcore-grid-3x3", hardcore(grid(3, 3), 1.0).unwrap(), true));
    out.push(entry("hardcore-c12-lambda-1", hardcore(cycle(12), 1.0).unwrap(), true));
    out.push(entry(
        "two-spin-c10",
        two_spin(cycle(10), 0.5, 1.5, 1.0).unwrap(),
        true,
    ));
    out.push(entry(
        "matching-c8",
        matching(&cycle(8), 1.0).unwrap().0,
        true,
    ));
    out.push(entry(
        "coloring-p6-q3",
        coloring_uniform(path(6), 3).unwrap(),
        true,
    ));
    out
}

/// Every feasible pinning of the instance leaving `keep_free` unpinned,
/// by exhaustive enumeration. Exponential in n.
pub fn all_feasible_pinnings(inst: &Instance, keep_free: u64) -> Vec<crate::gibbs::PartialConfig> {
    let spec = inst.spec();
    let ids: Vec<u64> = spec
        .graph()
        .node_ids()
        .iter()
        .copied()
        .filter(|&v| v != keep_free)
        .collect();
    let base = spec.q() + 1;
    let mut counter = vec![0usize; ids.len()];
    let mut out = Vec::new();
    loop {
        let pins = crate::gibbs::PartialConfig::from_pairs(
            ids.iter()
                .zip(&counter)
                .filter(|(_, &c)| c > 0)
                .map(|(&v, &c)| (v, c - 1)),
        )
        .unwrap();
        if spec
            .find_feasible_extension(&pins, 10_000_000)
            .unwrap()
            .is_some()
        {
            out.push(pins);
        }
        let mut i = 0;
        loop {
            if i == counter.len() {
                return out;
            }
            counter[i] += 1;
            if counter[i] < base {
                break;
            }
            counter[i] = 0;
            i += 1;
        }
    }
}
