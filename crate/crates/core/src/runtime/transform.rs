//! Compiling SLOCAL algorithms into the LOCAL model.
//!
//! The transform builds a network decomposition of the power graph
//! G^(r+1), where r is the algorithm's effective locality, and simulates
//! the algorithm cluster-by-cluster in color order. This induces the
//! color-major, id-minor ordering over the nodes: clusters of one color are
//! mutually further than r+1 apart, so their simulations commute and the
//! sequential run in that ordering reproduces the chromatic schedule
//! exactly. Nodes in clusters that overflow the decomposition contract, and
//! nodes whose computation reads failed territory, raise their failure
//! flag; conditioned on no failures the output distribution is the SLOCAL
//! algorithm's under the induced ordering.

use std::collections::BTreeSet;

use crate::error::Result;
use crate::graph::{Graph, NodeOrdering};

use super::decomp::{network_decomposition, Decomposition, DecompositionParams};
use super::slocal::{effective_locality, run_slocal, LocalityReport, SlocalAlgorithm};
use super::tape::{derive_seed, SeededTape, Tape};
use super::SampleOutcome;

/// A fixed decomposition plus the ordering and round accounting it induces.
#[derive(Debug, Clone)]
pub struct CompiledSchedule {
    pub decomposition: Decomposition,
    /// Effective single-pass locality r of the compiled algorithm.
    pub effective_locality: u32,
    /// Exponent r+1 of the power graph the decomposition ran on.
    pub power_exponent: u32,
    /// Induced ordering: color-major, id-minor.
    pub ordering: NodeOrdering,
    /// Compiled LOCAL radius: colors_used * (r + 1) * (max cluster radius
    /// in the power graph + 1).
    pub compiled_radius: u64,
}

impl CompiledSchedule {
    pub fn failed_nodes(&self) -> &BTreeSet<u64> {
        &self.decomposition.failed
    }
}

/// Builds the decomposition-driven schedule for an algorithm of effective
/// locality r on `g`. Locality-0 algorithms have no inter-node dependence
/// and get the trivial schedule: singleton clusters, one color, no failures.
pub fn compile_schedule(
    g: &Graph,
    passes_locality: u32,
    seed: u64,
    params: &DecompositionParams,
) -> Result<CompiledSchedule> {
    let r = passes_locality;
    if r == 0 {
        let decomposition = Decomposition {
            cluster_of: g.node_ids().iter().map(|&v| (v, v)).collect(),
            color_of_cluster: g.node_ids().iter().map(|&v| (v, 0)).collect(),
            failed: BTreeSet::new(),
            color_bound: 1,
            radius_cap: 0,
            colors_used: 1,
            radius_of_cluster: g.node_ids().iter().map(|&v| (v, 0)).collect(),
        };
        return Ok(CompiledSchedule {
            decomposition,
            effective_locality: 0,
            power_exponent: 1,
            ordering: NodeOrdering::by_id(g),
            compiled_radius: 1,
        });
    }
    let power = g.power_graph(r + 1)?;
    let decomposition = network_decomposition(&power, derive_seed(seed, "decomp"), params);
    let mut order: Vec<u64> = g.node_ids().to_vec();
    order.sort_by_key(|&v| (decomposition.color_of_node(v), v));
    let ordering = NodeOrdering::new(g, order)?;
    let compiled_radius = decomposition.colors_used as u64
        * (r as u64 + 1)
        * (decomposition.max_cluster_radius() as u64 + 1);
    Ok(CompiledSchedule {
        decomposition,
        effective_locality: r,
        power_exponent: r + 1,
        ordering,
        compiled_radius,
    })
}

/// Runs the algorithm under a fixed schedule, drawing algorithm randomness
/// from `tape`. Failure flags combine the decomposition's failed clusters
/// with downstream reads of failed territory.
pub fn execute_schedule<A: SlocalAlgorithm>(
    g: &Graph,
    alg: &A,
    schedule: &CompiledSchedule,
    tape: &mut dyn Tape,
) -> Result<(SampleOutcome, LocalityReport)> {
    let (outcome, report, _) = run_slocal(
        g,
        alg,
        &schedule.ordering,
        tape,
        &schedule.decomposition.failed,
    )?;
    Ok((outcome, report))
}

/// Full transform report alongside the outputs.
#[derive(Debug, Clone)]
pub struct TransformReport {
    pub schedule: CompiledSchedule,
    pub locality: LocalityReport,
    /// Nodes whose failure flag was raised by the transform itself: failed
    /// clusters plus downstream readers of failed territory. Failures at
    /// other nodes come from the algorithm's own flags.
    pub transform_failed: BTreeSet<u64>,
}

/// One-shot SLOCAL -> LOCAL transform: decompose, induce the ordering,
/// simulate. Decomposition randomness and algorithm randomness both derive
/// from `seed` on disjoint labels.
pub fn slocal_to_local<A: SlocalAlgorithm>(
    g: &Graph,
    alg: &A,
    seed: u64,
    params: &DecompositionParams,
) -> Result<(SampleOutcome, TransformReport)> {
    let r = effective_locality(&alg.passes());
    let schedule = compile_schedule(g, r, seed, params)?;
    let mut tape = SeededTape::new(derive_seed(seed, "alg"));
    let (outcome, locality, tainted) = run_slocal(
        g,
        alg,
        &schedule.ordering,
        &mut tape,
        &schedule.decomposition.failed,
    )?;
    Ok((
        outcome,
        TransformReport {
            schedule,
            locality,
            transform_failed: tainted,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::families::*;
    use crate::runtime::decomp::validate_decomposition;
    use crate::runtime::slocal::{SlocalPass, StepContext};
    use crate::runtime::NodeResult;
    use crate::Error;

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
            let v = ctx.center();
            let mut used = BTreeSet::new();
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
    fn compiled_greedy_coloring_is_proper_where_not_failed() {
        for seed in 0..10u64 {
            let g = erdos_renyi(24, 0.15, seed);
            let (out, report) =
                slocal_to_local(&g, &GreedyColoring, seed, &DecompositionParams::default())
                    .unwrap();
            let power = g.power_graph(report.schedule.power_exponent).unwrap();
            validate_decomposition(&power, &report.schedule.decomposition).unwrap();
            for (u, v) in g.edges() {
                if !out.failed(u) && !out.failed(v) {
                    assert_ne!(out.value(u), out.value(v));
                }
            }
        }
    }

    #[test]
    fn locality_zero_bypasses_decomposition() {
        struct Constant;
        impl SlocalAlgorithm for Constant {
            type State = u8;
            fn passes(&self) -> Vec<SlocalPass> {
                vec![SlocalPass::read_only(0)]
            }
            fn init_state(&self, _: u64) -> u8 {
                0
            }
            fn process(&self, ctx: &mut StepContext<'_, u8>) -> Result<()> {
                let v = ctx.center();
                *ctx.state_mut(v)? = 7;
                Ok(())
            }
            fn finalize(&self, _: u64, s: &u8) -> NodeResult {
                NodeResult {
                    value: Some(*s as usize),
                    failed: false,
                }
            }
        }
        let g = cycle(9);
        let (out, report) =
            slocal_to_local(&g, &Constant, 1, &DecompositionParams::default()).unwrap();
        assert_eq!(report.schedule.power_exponent, 1);
        assert_eq!(report.schedule.compiled_radius, 1);
        assert!(out.iter().all(|(_, r)| r.value == Some(7) && !r.failed));
        // Identical to a direct LOCAL run at t = 0.
        let inputs: std::collections::BTreeMap<u64, ()> =
            g.node_ids().iter().map(|&v| (v, ())).collect();
        let direct = crate::runtime::run_local(&g, &inputs, 0, 1, |_, _| {
            Ok::<(usize, bool), Error>((7usize, false))
        })
        .unwrap();
        for (&v, &(x, f)) in &direct {
            assert_eq!(out.value(v), Some(x));
            assert_eq!(out.failed(v), f);
        }
    }

    #[test]
    fn induced_ordering_is_color_major() {
        let g = cycle(16);
        let (_, report) =
            slocal_to_local(&g, &GreedyColoring, 3, &DecompositionParams::default()).unwrap();
        let d = &report.schedule.decomposition;
        let colors: Vec<u32> = report
            .schedule
            .ordering
            .nodes()
            .iter()
            .map(|&v| d.color_of_node(v))
            .collect();
        assert!(colors.windows(2).all(|w| w[0] <= w[1]));
    }
}
