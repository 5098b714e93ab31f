//! Randomized network decomposition by exponential-shift clustering.
//!
//! Every node draws a geometric delay and joins the node minimizing
//! (dist - delay), ties toward the smaller id; the cluster graph is then
//! greedily colored in ascending center order. A cluster whose weak radius
//! exceeds the cap, or whose color lands beyond the bound, fails wholesale;
//! failures are the output contract, never an error. The delay parameter is
//! chosen so the expected failure mass stays within the configured budget.

use std::collections::{BTreeMap, BTreeSet, BinaryHeap};
use std::cmp::Reverse;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::graph::{Dist, Graph};

use super::tape::derive_seed;

#[derive(Debug, Clone)]
pub struct DecompositionParams {
    /// Color bound C = ceil(color_factor * log2 n).
    pub color_factor: f64,
    /// Radius cap R = ceil(radius_factor * log2 n).
    pub radius_factor: f64,
    /// Target on the expected number of failed nodes; defaults to 1/n^2.
    pub failure_budget: Option<f64>,
}

impl Default for DecompositionParams {
    fn default() -> Self {
        DecompositionParams {
            color_factor: 4.0,
            radius_factor: 4.0,
            failure_budget: None,
        }
    }
}

impl DecompositionParams {
    pub fn budget_for(&self, n: usize) -> f64 {
        self.failure_budget
            .unwrap_or_else(|| 1.0 / ((n.max(1) as f64) * (n.max(1) as f64)))
    }
}

/// Cluster id per node, color per cluster, and the failed node set.
#[derive(Debug, Clone)]
pub struct Decomposition {
    /// node id -> cluster center id.
    pub cluster_of: BTreeMap<u64, u64>,
    /// cluster center id -> color index.
    pub color_of_cluster: BTreeMap<u64, u32>,
    pub failed: BTreeSet<u64>,
    /// Color bound C the run was configured with.
    pub color_bound: u32,
    /// Radius cap R the run was configured with.
    pub radius_cap: u32,
    pub colors_used: u32,
    /// Weak radius (in the decomposed graph) per cluster center.
    pub radius_of_cluster: BTreeMap<u64, u32>,
}

impl Decomposition {
    pub fn color_of_node(&self, v: u64) -> u32 {
        self.color_of_cluster[&self.cluster_of[&v]]
    }

    pub fn max_cluster_radius(&self) -> u32 {
        self.radius_of_cluster.values().copied().max().unwrap_or(0)
    }

    /// Members of each cluster, keyed by center.
    pub fn clusters(&self) -> BTreeMap<u64, Vec<u64>> {
        let mut m: BTreeMap<u64, Vec<u64>> = BTreeMap::new();
        for (&v, &c) in &self.cluster_of {
            m.entry(c).or_default().push(v);
        }
        m
    }
}

/// Decomposes `g` with randomized exponential-shift clustering.
pub fn network_decomposition(g: &Graph, seed: u64, params: &DecompositionParams) -> Decomposition {
    let n = g.n();
    let log2n = (n.max(2) as f64).log2();
    let radius_cap = (params.radius_factor * log2n).ceil() as u32;
    let color_bound = (params.color_factor * log2n).ceil() as u32;

    // Geometric delay parameter. A node fails only if some center's delay
    // exceeds the cap (union bound over n centers, n nodes per cluster),
    // and downstream consumers of failed territory amplify the mass by at
    // most another factor of n; a per-delay tail of budget/n^3 keeps the
    // expected failure mass within budget.
    let nf = n.max(1) as f64;
    let tail_target = (params.budget_for(n) / (nf * nf * nf)).clamp(1e-300, 0.5);
    let p = (1.0 - tail_target.powf(1.0 / (radius_cap as f64 + 1.0))).clamp(0.05, 0.95);

    let mut delay = vec![0u32; n];
    for (i, &v) in g.node_ids().iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &format!("decomp-shift-{v}")));
        let u: f64 = rng.gen();
        delay[i] = ((1.0 - u).ln() / (1.0 - p).ln()).floor() as u32;
    }

    // Shifted multi-source BFS: node v joins the center minimizing
    // (dist(c, v) - delay_c), ties toward the smaller center id. Keys are
    // shifted by max delay to stay non-negative.
    let max_delay = delay.iter().copied().max().unwrap_or(0);
    let mut best: Vec<Option<(u32, u64)>> = vec![None; n];
    let mut heap: BinaryHeap<Reverse<(u32, u64, usize)>> = BinaryHeap::new();
    for (i, &v) in g.node_ids().iter().enumerate() {
        heap.push(Reverse((max_delay - delay[i], v, i)));
    }
    while let Some(Reverse((key, center, i))) = heap.pop() {
        match best[i] {
            Some((k, c)) if (k, c) <= (key, center) => continue,
            _ => {}
        }
        best[i] = Some((key, center));
        for &j in g.adj_idx(i) {
            let cand = (key + 1, center);
            if best[j].map_or(true, |(k, c)| cand < (k, c)) {
                heap.push(Reverse((cand.0, cand.1, j)));
            }
        }
    }

    let mut cluster_of = BTreeMap::new();
    let mut radius_of_cluster: BTreeMap<u64, u32> = BTreeMap::new();
    for (i, &v) in g.node_ids().iter().enumerate() {
        let (key, center) = best[i].expect("every node reaches itself");
        cluster_of.insert(v, center);
        // dist(center, v) = key - (max_delay - delay_center).
        let ci = g.index_of(center).unwrap();
        let d = key - (max_delay - delay[ci]);
        let r = radius_of_cluster.entry(center).or_insert(0);
        *r = (*r).max(d);
    }

    // Greedy coloring of the cluster graph in ascending center order.
    let mut cluster_adj: BTreeMap<u64, BTreeSet<u64>> = BTreeMap::new();
    for center in radius_of_cluster.keys() {
        cluster_adj.entry(*center).or_default();
    }
    for (u, v) in g.edges() {
        let cu = cluster_of[&u];
        let cv = cluster_of[&v];
        if cu != cv {
            cluster_adj.get_mut(&cu).unwrap().insert(cv);
            cluster_adj.get_mut(&cv).unwrap().insert(cu);
        }
    }
    let mut color_of_cluster: BTreeMap<u64, u32> = BTreeMap::new();
    let mut colors_used = 0u32;
    for (&center, neigh) in &cluster_adj {
        let used: BTreeSet<u32> = neigh
            .iter()
            .filter_map(|c| color_of_cluster.get(c).copied())
            .collect();
        let color = (0..).find(|c| !used.contains(c)).unwrap();
        colors_used = colors_used.max(color + 1);
        color_of_cluster.insert(center, color);
    }

    // Failure contract: radius overflow or color overflow fails the whole
    // cluster.
    let mut failed = BTreeSet::new();
    for (&v, &c) in &cluster_of {
        if radius_of_cluster[&c] > radius_cap || color_of_cluster[&c] >= color_bound {
            failed.insert(v);
        }
    }

    Decomposition {
        cluster_of,
        color_of_cluster,
        failed,
        color_bound,
        radius_cap,
        colors_used,
        radius_of_cluster,
    }
}

/// Structural validity: same-color clusters are non-adjacent in `g`, and
/// every non-failed cluster respects the radius cap. Returns the offending
/// description on violation; used by tests and the acceptance suite.
pub fn validate_decomposition(g: &Graph, d: &Decomposition) -> std::result::Result<(), String> {
    for (u, v) in g.edges() {
        let cu = d.cluster_of[&u];
        let cv = d.cluster_of[&v];
        if cu != cv && d.color_of_cluster[&cu] == d.color_of_cluster[&cv] {
            return Err(format!("adjacent clusters {cu} and {cv} share a color"));
        }
    }
    for (&center, members) in &d.clusters() {
        if members.iter().any(|m| d.failed.contains(m)) {
            continue;
        }
        for &m in members {
            match g.dist(center, m) {
                Ok(Dist::Finite(x)) if x <= d.radius_cap => {}
                other => {
                    return Err(format!(
                        "non-failed cluster {center} has member {m} at distance {other:?} beyond cap {}",
                        d.radius_cap
                    ))
                }
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::families::*;

    #[test]
    fn single_node() {
        let g = path(1);
        let d = network_decomposition(&g, 0, &DecompositionParams::default());
        assert_eq!(d.cluster_of[&0], 0);
        assert_eq!(d.color_of_node(0), 0);
        assert!(d.failed.is_empty());
    }

    #[test]
    fn disconnected_components_are_independent() {
        let g = Graph::new(0..6, &[(0, 1), (1, 2), (3, 4), (4, 5)]).unwrap();
        let d = network_decomposition(&g, 3, &DecompositionParams::default());
        validate_decomposition(&g, &d).unwrap();
        // No cluster spans components.
        for (&v, &c) in &d.cluster_of {
            assert!(g.dist(v, c).unwrap().is_finite());
        }
    }

    #[test]
    fn path_contract_over_seeds() {
        let g = path(64);
        let params = DecompositionParams::default();
        for seed in 0..100 {
            let d = network_decomposition(&g, seed, &params);
            validate_decomposition(&g, &d).unwrap();
            assert!(d.colors_used <= d.color_bound, "colors {} > C {}", d.colors_used, d.color_bound);
            assert!(d.failed.is_empty(), "unexpected failures on a path");
        }
    }

    #[test]
    fn deterministic_in_seed() {
        let g = erdos_renyi(40, 0.1, 11);
        let a = network_decomposition(&g, 5, &DecompositionParams::default());
        let b = network_decomposition(&g, 5, &DecompositionParams::default());
        assert_eq!(a.cluster_of, b.cluster_of);
        assert_eq!(a.color_of_cluster, b.color_of_cluster);
    }
}
