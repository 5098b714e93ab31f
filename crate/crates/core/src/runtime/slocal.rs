//! The SLOCAL execution engine.
//!
//! An SLOCAL algorithm scans the nodes in a given ordering, once per pass.
//! While processing v in pass i it may read node states within the pass's
//! declared read radius and write states within its declared write radius;
//! the step context enforces both. The engine reports the effective
//! single-pass locality r1' + 2 * sum_{i>=2} ri' where ri' = read + write
//! radius of pass i, together with the radii actually used.

use std::cell::Cell;
use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::graph::{Dist, Graph, NodeOrdering};

use super::tape::{DrawLabel, Tape};
use super::{NodeResult, SampleOutcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SlocalPass {
    pub read_radius: u32,
    pub write_radius: u32,
}

impl SlocalPass {
    pub fn read_only(read_radius: u32) -> Self {
        SlocalPass {
            read_radius,
            write_radius: 0,
        }
    }

    /// Locality charge of this pass once remote writes are folded into
    /// reads.
    pub fn effective(&self) -> u32 {
        self.read_radius + self.write_radius
    }
}

/// Effective single-pass locality of a multi-pass algorithm.
pub fn effective_locality(passes: &[SlocalPass]) -> u32 {
    match passes.split_first() {
        None => 0,
        Some((first, rest)) => {
            first.effective() + 2 * rest.iter().map(SlocalPass::effective).sum::<u32>()
        }
    }
}

/// A multi-pass SLOCAL algorithm over per-node states.
pub trait SlocalAlgorithm {
    type State: Clone;

    fn passes(&self) -> Vec<SlocalPass>;

    fn init_state(&self, node: u64) -> Self::State;

    /// Process the node `ctx.center()` in pass `ctx.pass()`.
    fn process(&self, ctx: &mut StepContext<'_, Self::State>) -> Result<()>;

    /// Per-node output and failure flag after all passes.
    fn finalize(&self, node: u64, state: &Self::State) -> NodeResult;
}

/// Radius-checked access to the engine while one node is being processed.
pub struct StepContext<'a, S> {
    pass: usize,
    center: u64,
    center_idx: usize,
    read_radius: u32,
    write_radius: u32,
    graph: &'a Graph,
    dist_row: &'a [Dist],
    states: &'a mut [S],
    ranks: &'a BTreeMap<u64, usize>,
    tape: &'a mut dyn Tape,
    max_read: &'a Cell<u32>,
    max_write: &'a Cell<u32>,
    written: &'a mut BTreeSet<u64>,
}

impl<'a, S> StepContext<'a, S> {
    pub fn pass(&self) -> usize {
        self.pass
    }

    pub fn center(&self) -> u64 {
        self.center
    }

    pub fn graph(&self) -> &Graph {
        self.graph
    }

    fn checked_dist(&self, u: u64, radius: u32, what: &str) -> Result<(usize, u32)> {
        let i = self.graph.index_of(u)?;
        match self.dist_row[i] {
            Dist::Finite(d) if d <= radius => Ok((i, d)),
            d => Err(Error::ContractViolation(format!(
                "{what} at node {u} (distance {d:?}) beyond declared radius {radius} of node {}",
                self.center
            ))),
        }
    }

    /// Read a node's state within the pass's read radius.
    pub fn state(&self, u: u64) -> Result<&S> {
        let (i, d) = self.checked_dist(u, self.read_radius, "state read")?;
        self.max_read.set(self.max_read.get().max(d));
        Ok(&self.states[i])
    }

    /// Write a node's state within the pass's write radius.
    pub fn state_mut(&mut self, u: u64) -> Result<&mut S> {
        let (i, d) = self.checked_dist(u, self.write_radius, "state write")?;
        self.max_write.set(self.max_write.get().max(d));
        self.written.insert(u);
        Ok(&mut self.states[i])
    }

    /// The processing rank of a node in the ordering, readable within the
    /// read radius.
    pub fn rank_of(&self, u: u64) -> Result<usize> {
        let (_, d) = self.checked_dist(u, self.read_radius, "rank read")?;
        self.max_read.set(self.max_read.get().max(d));
        Ok(self.ranks[&u])
    }

    /// Nodes within the read radius, ascending by id.
    pub fn readable_nodes(&self) -> Vec<u64> {
        self.graph
            .node_ids()
            .iter()
            .enumerate()
            .filter(|&(i, _)| self.dist_row[i].at_most(self.read_radius))
            .map(|(_, &v)| v)
            .collect()
    }

    pub fn dist_from_center(&self, u: u64) -> Result<Dist> {
        Ok(self.dist_row[self.graph.index_of(u)?])
    }

    /// Labeled draw for the node being processed.
    pub fn draw(&mut self, purpose: &str, probs: &[f64]) -> usize {
        self.tape.draw_index(
            DrawLabel::new(self.center, self.pass as u32 + 1, purpose),
            probs,
        )
    }
}

/// Locality accounting of one SLOCAL run.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalityReport {
    pub declared: Vec<SlocalPass>,
    pub measured_read: Vec<u32>,
    pub measured_write: Vec<u32>,
    pub effective_locality: u32,
}

/// Runs a multi-pass SLOCAL algorithm in the given ordering.
///
/// `tainted` seeds failure propagation: while processing a node, if any
/// node within the pass's read radius is tainted, the processed node (and
/// everything it writes) becomes tainted too; tainted nodes report
/// `failed = true` in the outcome. Pass an empty set for a plain run.
pub fn run_slocal<A: SlocalAlgorithm>(
    g: &Graph,
    alg: &A,
    ordering: &NodeOrdering,
    tape: &mut dyn Tape,
    tainted: &BTreeSet<u64>,
) -> Result<(SampleOutcome, LocalityReport, BTreeSet<u64>)> {
    let passes = alg.passes();
    let ranks = ordering.ranks();
    if ranks.len() != g.n() {
        return Err(Error::InvalidInput("ordering does not match the graph".into()));
    }
    let mut states: Vec<A::State> = g.node_ids().iter().map(|&v| alg.init_state(v)).collect();
    let dist_rows: Vec<Vec<Dist>> = (0..g.n()).map(|i| g.bfs_idx(i)).collect();
    let mut tainted = tainted.clone();
    let mut measured_read = vec![0u32; passes.len()];
    let mut measured_write = vec![0u32; passes.len()];

    for (pi, pass) in passes.iter().enumerate() {
        let max_read = Cell::new(0u32);
        let max_write = Cell::new(0u32);
        for &v in ordering.nodes() {
            let vi = g.index_of(v)?;
            let dist_row = &dist_rows[vi];
            let reads_taint = !tainted.is_empty()
                && g.node_ids().iter().enumerate().any(|(i, id)| {
                    dist_row[i].at_most(pass.read_radius) && tainted.contains(id)
                });
            let mut written = BTreeSet::new();
            let mut ctx = StepContext {
                pass: pi,
                center: v,
                center_idx: vi,
                read_radius: pass.read_radius,
                write_radius: pass.write_radius,
                graph: g,
                dist_row,
                states: &mut states,
                ranks: &ranks,
                tape,
                max_read: &max_read,
                max_write: &max_write,
                written: &mut written,
            };
            let _ = ctx.center_idx;
            alg.process(&mut ctx)?;
            if reads_taint {
                tainted.insert(v);
                tainted.extend(written);
            }
        }
        measured_read[pi] = max_read.get();
        measured_write[pi] = max_write.get();
    }

    let mut outcome = SampleOutcome::default();
    for (i, &v) in g.node_ids().iter().enumerate() {
        let mut res = alg.finalize(v, &states[i]);
        if tainted.contains(&v) {
            res.failed = true;
        }
        outcome.insert(v, res);
    }
    let report = LocalityReport {
        effective_locality: effective_locality(&passes),
        declared: passes,
        measured_read,
        measured_write,
    };
    Ok((outcome, report, tainted))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::families::*;
    use crate::runtime::tape::SeededTape;

    /// Greedy proper coloring: one pass, radius 1, pick the lowest colour
    /// unused by already-processed neighbours.
    struct GreedyColoring;

    impl SlocalAlgorithm for GreedyColoring {
        type State = Option<usize>;

        fn passes(&self) -> Vec<SlocalPass> {
            vec![SlocalPass::read_only(1)]
        }

        fn init_state(&self, _node: u64) -> Self::State {
            None
        }

        fn process(&self, ctx: &mut StepContext<'_, Self::State>) -> Result<()> {
            let mut used = BTreeSet::new();
            let v = ctx.center();
            for u in ctx.graph().neighbors(v)?.collect::<Vec<_>>() {
                if let Some(c) = *ctx.state(u)? {
                    used.insert(c);
                }
            }
            let colour = (0..).find(|c| !used.contains(c)).unwrap();
            *ctx.state_mut(v)? = Some(colour);
            Ok(())
        }

        fn finalize(&self, _node: u64, state: &Self::State) -> NodeResult {
            NodeResult {
                value: *state,
                failed: false,
            }
        }
    }

    #[test]
    fn greedy_coloring_is_proper_on_every_ordering() {
        let g = erdos_renyi(10, 0.4, 5);
        for seed in 0..6 {
            let ordering = NodeOrdering::random(&g, seed);
            let mut tape = SeededTape::new(0);
            let (out, report, tainted) =
                run_slocal(&g, &GreedyColoring, &ordering, &mut tape, &BTreeSet::new()).unwrap();
            assert!(tainted.is_empty());
            assert_eq!(report.effective_locality, 1);
            for (u, v) in g.edges() {
                assert_ne!(out.value(u), out.value(v));
            }
            let delta = g.max_degree();
            assert!(out
                .iter()
                .all(|(_, r)| r.value.unwrap() <= delta));
        }
    }

    #[test]
    fn effective_locality_formula() {
        // Three passes with radii (t, t, 3t + l) at t = 2, l = 1.
        let t = 2;
        let l = 1;
        let passes = vec![
            SlocalPass::read_only(t),
            SlocalPass::read_only(t),
            SlocalPass::read_only(3 * t + l),
        ];
        assert_eq!(effective_locality(&passes), t + 2 * (t + 3 * t + l));
        // Remote writes charge their radius on top of reads.
        let with_writes = vec![
            SlocalPass::read_only(t),
            SlocalPass::read_only(t),
            SlocalPass {
                read_radius: 3 * t + l,
                write_radius: t,
            },
        ];
        assert_eq!(
            effective_locality(&with_writes),
            t + 2 * (t + 3 * t + l + t)
        );
    }

    #[test]
    fn read_beyond_radius_is_rejected() {
        struct FarReader;
        impl SlocalAlgorithm for FarReader {
            type State = ();
            fn passes(&self) -> Vec<SlocalPass> {
                vec![SlocalPass::read_only(1)]
            }
            fn init_state(&self, _: u64) {}
            fn process(&self, ctx: &mut StepContext<'_, ()>) -> Result<()> {
                if ctx.center() == 0 {
                    ctx.state(4)?;
                }
                Ok(())
            }
            fn finalize(&self, _: u64, _: &()) -> NodeResult {
                NodeResult {
                    value: None,
                    failed: false,
                }
            }
        }
        let g = path(6);
        let ordering = NodeOrdering::by_id(&g);
        let mut tape = SeededTape::new(0);
        let res = run_slocal(&g, &FarReader, &ordering, &mut tape, &BTreeSet::new());
        assert!(matches!(res, Err(Error::ContractViolation(_))));
    }

    #[test]
    fn taint_propagates_through_reads() {
        let g = path(5);
        let ordering = NodeOrdering::by_id(&g);
        let mut tape = SeededTape::new(0);
        let seed: BTreeSet<u64> = [4u64].into();
        let (out, _, tainted) =
            run_slocal(&g, &GreedyColoring, &ordering, &mut tape, &seed).unwrap();
        // Node 3 reads within radius 1 of the tainted node 4.
        assert!(tainted.contains(&3));
        assert!(out.failed(4) && out.failed(3));
        // Node 2 was processed before 3 became tainted.
        assert!(!out.failed(2));
    }
}
