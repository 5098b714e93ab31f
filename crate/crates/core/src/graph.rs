//! Simple undirected graphs with hop distances, balls, power graphs and
//! line graphs.
//!
//! Node ids are arbitrary `u64` values, not required to be contiguous.
//! Internally nodes are stored in ascending id order and all adjacency is
//! kept on dense indices; every public surface speaks ids.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::error::{Error, Result};

/// Hop distance. Disconnected pairs are `Infinity`, never a large finite
/// stand-in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Dist {
    Finite(u32),
    Infinity,
}

impl Dist {
    pub fn is_finite(self) -> bool {
        matches!(self, Dist::Finite(_))
    }

    /// Finite value, panicking on `Infinity`.
    pub fn unwrap(self) -> u32 {
        match self {
            Dist::Finite(d) => d,
            Dist::Infinity => panic!("distance is infinite"),
        }
    }

    pub fn at_most(self, r: u32) -> bool {
        match self {
            Dist::Finite(d) => d <= r,
            Dist::Infinity => false,
        }
    }
}

impl PartialOrd for Dist {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Dist {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        use Dist::*;
        match (self, other) {
            (Finite(a), Finite(b)) => a.cmp(b),
            (Finite(_), Infinity) => std::cmp::Ordering::Less,
            (Infinity, Finite(_)) => std::cmp::Ordering::Greater,
            (Infinity, Infinity) => std::cmp::Ordering::Equal,
        }
    }
}

/// A simple undirected graph: no self-loops, no parallel edges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    /// Node ids in ascending order.
    ids: Vec<u64>,
    index: BTreeMap<u64, usize>,
    /// Adjacency lists on dense indices, each sorted ascending.
    adj: Vec<Vec<usize>>,
}

impl Graph {
    /// Builds a graph from node ids and undirected edges.
    ///
    /// Rejects duplicate ids, self-loops, repeated edges and edges touching
    /// unknown ids.
    pub fn new(nodes: impl IntoIterator<Item = u64>, edges: &[(u64, u64)]) -> Result<Self> {
        let mut ids: Vec<u64> = nodes.into_iter().collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidInput("duplicate node id".into()));
        }
        let index: BTreeMap<u64, usize> = ids.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let mut adj = vec![Vec::new(); ids.len()];
        let mut seen = BTreeSet::new();
        for &(u, v) in edges {
            if u == v {
                return Err(Error::InvalidInput(format!("self-loop at node {u}")));
            }
            let iu = *index.get(&u).ok_or(Error::UnknownNode(u))?;
            let iv = *index.get(&v).ok_or(Error::UnknownNode(v))?;
            let key = (iu.min(iv), iu.max(iv));
            if !seen.insert(key) {
                return Err(Error::InvalidInput(format!("duplicate edge {u}-{v}")));
            }
            adj[iu].push(iv);
            adj[iv].push(iu);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        Ok(Graph { ids, index, adj })
    }

    pub fn n(&self) -> usize {
        self.ids.len()
    }

    /// Node ids in ascending order.
    pub fn node_ids(&self) -> &[u64] {
        &self.ids
    }

    pub fn contains(&self, v: u64) -> bool {
        self.index.contains_key(&v)
    }

    pub fn index_of(&self, v: u64) -> Result<usize> {
        self.index.get(&v).copied().ok_or(Error::UnknownNode(v))
    }

    pub fn id_of(&self, idx: usize) -> u64 {
        self.ids[idx]
    }

    pub fn degree(&self, v: u64) -> Result<usize> {
        Ok(self.adj[self.index_of(v)?].len())
    }

    pub fn max_degree(&self) -> usize {
        self.adj.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn neighbors(&self, v: u64) -> Result<impl Iterator<Item = u64> + '_> {
        let idx = self.index_of(v)?;
        Ok(self.adj[idx].iter().map(move |&i| self.ids[i]))
    }

    pub(crate) fn adj_idx(&self, idx: usize) -> &[usize] {
        &self.adj[idx]
    }

    /// Undirected edges as (low id, high id) pairs in ascending order.
    pub fn edges(&self) -> Vec<(u64, u64)> {
        let mut out = Vec::new();
        for (i, list) in self.adj.iter().enumerate() {
            for &j in list {
                if i < j {
                    out.push((self.ids[i], self.ids[j]));
                }
            }
        }
        out
    }

    pub fn has_edge(&self, u: u64, v: u64) -> Result<bool> {
        let iu = self.index_of(u)?;
        let iv = self.index_of(v)?;
        Ok(self.adj[iu].binary_search(&iv).is_ok())
    }

    /// BFS distances from `v` to every node, dense-indexed.
    pub fn bfs(&self, v: u64) -> Result<Vec<Dist>> {
        Ok(self.bfs_idx(self.index_of(v)?))
    }

    pub(crate) fn bfs_idx(&self, src: usize) -> Vec<Dist> {
        let mut dist = vec![Dist::Infinity; self.ids.len()];
        dist[src] = Dist::Finite(0);
        let mut queue = VecDeque::from([src]);
        while let Some(u) = queue.pop_front() {
            let du = dist[u].unwrap();
            for &w in &self.adj[u] {
                if dist[w] == Dist::Infinity {
                    dist[w] = Dist::Finite(du + 1);
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    /// Shortest-path distance between two nodes.
    pub fn dist(&self, u: u64, v: u64) -> Result<Dist> {
        let iv = self.index_of(v)?;
        Ok(self.bfs(u)?[iv])
    }

    /// Minimum distance from `v` to any node of `set`.
    pub fn dist_to_set(&self, v: u64, set: &BTreeSet<u64>) -> Result<Dist> {
        let d = self.bfs(v)?;
        let mut best = Dist::Infinity;
        for &u in set {
            let du = d[self.index_of(u)?];
            if du < best {
                best = du;
            }
        }
        Ok(best)
    }

    /// The r-ball around `v`: all nodes at distance at most `r`.
    pub fn ball(&self, v: u64, r: u32) -> Result<BTreeSet<u64>> {
        let d = self.bfs(v)?;
        Ok(self
            .ids
            .iter()
            .enumerate()
            .filter(|&(i, _)| d[i].at_most(r))
            .map(|(_, &id)| id)
            .collect())
    }

    /// Nodes at distance exactly `r` from `v`.
    pub fn sphere(&self, v: u64, r: u32) -> Result<BTreeSet<u64>> {
        let d = self.bfs(v)?;
        Ok(self
            .ids
            .iter()
            .enumerate()
            .filter(|&(i, _)| d[i] == Dist::Finite(r))
            .map(|(_, &id)| id)
            .collect())
    }

    /// Largest finite distance from `v`.
    pub fn eccentricity(&self, v: u64) -> Result<u32> {
        Ok(self
            .bfs(v)?
            .iter()
            .filter_map(|d| match d {
                Dist::Finite(x) => Some(*x),
                Dist::Infinity => None,
            })
            .max()
            .unwrap_or(0))
    }

    /// Largest finite pairwise distance.
    pub fn diameter(&self) -> u32 {
        (0..self.n())
            .flat_map(|i| {
                self.bfs_idx(i).into_iter().filter_map(|d| match d {
                    Dist::Finite(x) => Some(x),
                    Dist::Infinity => None,
                })
            })
            .max()
            .unwrap_or(0)
    }

    /// k-th power graph: same nodes, edge {u,v} iff 1 <= dist(u,v) <= k.
    pub fn power_graph(&self, k: u32) -> Result<Graph> {
        if k < 1 {
            return Err(Error::InvalidInput("power graph needs k >= 1".into()));
        }
        let mut edges = Vec::new();
        for i in 0..self.n() {
            let d = self.bfs_idx(i);
            for j in (i + 1)..self.n() {
                if d[j] != Dist::Finite(0) && d[j].at_most(k) {
                    edges.push((self.ids[i], self.ids[j]));
                }
            }
        }
        Graph::new(self.ids.clone(), &edges)
    }

    /// Subgraph induced by `nodes` (edges with both endpoints inside).
    pub fn induced(&self, nodes: &BTreeSet<u64>) -> Result<Graph> {
        for &v in nodes {
            self.index_of(v)?;
        }
        let edges: Vec<(u64, u64)> = self
            .edges()
            .into_iter()
            .filter(|(u, v)| nodes.contains(u) && nodes.contains(v))
            .collect();
        Graph::new(nodes.iter().copied(), &edges)
    }

    /// Line graph: one node per edge, adjacency iff the edges share an
    /// endpoint. Returns the graph plus the edge <-> node mapping used to
    /// translate matching instances back and forth.
    pub fn line_graph(&self) -> (Graph, LineGraphMap) {
        let edges = self.edges();
        let m = edges.len();
        let mut lg_edges = Vec::new();
        for i in 0..m {
            for j in (i + 1)..m {
                let (a, b) = edges[i];
                let (c, d) = edges[j];
                if a == c || a == d || b == c || b == d {
                    lg_edges.push((i as u64, j as u64));
                }
            }
        }
        let lg = Graph::new(0..m as u64, &lg_edges).expect("line graph construction is internal");
        let node_of_edge = edges
            .iter()
            .enumerate()
            .map(|(i, &e)| (e, i as u64))
            .collect();
        (
            lg,
            LineGraphMap {
                edge_of_node: edges,
                node_of_edge,
            },
        )
    }
}

/// Mapping between the edges of a graph and the nodes of its line graph.
#[derive(Debug, Clone)]
pub struct LineGraphMap {
    /// Line-graph node id (by index) -> original edge as (low, high).
    pub edge_of_node: Vec<(u64, u64)>,
    /// Original edge (low, high) -> line-graph node id.
    pub node_of_edge: BTreeMap<(u64, u64), u64>,
}

impl LineGraphMap {
    pub fn node_for_edge(&self, u: u64, v: u64) -> Option<u64> {
        self.node_of_edge.get(&(u.min(v), u.max(v))).copied()
    }
}

/// A processing order over the nodes of a graph: a permutation of the ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeOrdering {
    order: Vec<u64>,
}

impl NodeOrdering {
    pub fn new(g: &Graph, order: Vec<u64>) -> Result<Self> {
        if order.len() != g.n() {
            return Err(Error::InvalidInput(format!(
                "ordering has {} entries for {} nodes",
                order.len(),
                g.n()
            )));
        }
        let set: BTreeSet<u64> = order.iter().copied().collect();
        if set.len() != order.len() || !g.node_ids().iter().all(|v| set.contains(v)) {
            return Err(Error::InvalidInput("ordering is not a permutation of V".into()));
        }
        Ok(NodeOrdering { order })
    }

    /// The default order: increasing unique id.
    pub fn by_id(g: &Graph) -> Self {
        NodeOrdering {
            order: g.node_ids().to_vec(),
        }
    }

    /// Seeded uniformly random permutation (Fisher-Yates).
    pub fn random(g: &Graph, seed: u64) -> Self {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let mut order = g.node_ids().to_vec();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        order.shuffle(&mut rng);
        NodeOrdering { order }
    }

    pub fn nodes(&self) -> &[u64] {
        &self.order
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// Position of each node in the order, keyed by id.
    pub fn ranks(&self) -> BTreeMap<u64, usize> {
        self.order
            .iter()
            .enumerate()
            .map(|(i, &v)| (v, i))
            .collect()
    }
}

/// Convenience constructors for the small standard graphs used everywhere
/// in the test corpus.
pub mod families {
    use super::Graph;

    /// Path on `n` nodes 0..n-1.
    pub fn path(n: u64) -> Graph {
        let edges: Vec<_> = (0..n.saturating_sub(1)).map(|i| (i, i + 1)).collect();
        Graph::new(0..n, &edges).unwrap()
    }

    /// Cycle on `n >= 3` nodes.
    pub fn cycle(n: u64) -> Graph {
        assert!(n >= 3);
        let mut edges: Vec<_> = (0..n - 1).map(|i| (i, i + 1)).collect();
        edges.push((n - 1, 0));
        Graph::new(0..n, &edges).unwrap()
    }

    /// Complete graph on `n` nodes.
    pub fn complete(n: u64) -> Graph {
        let mut edges = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                edges.push((i, j));
            }
        }
        Graph::new(0..n, &edges).unwrap()
    }

    /// Star with `leaves` leaves around center 0.
    pub fn star(leaves: u64) -> Graph {
        let edges: Vec<_> = (1..=leaves).map(|i| (0, i)).collect();
        Graph::new(0..=leaves, &edges).unwrap()
    }

    /// w x h grid, node id = row * w + col.
    pub fn grid(w: u64, h: u64) -> Graph {
        let mut edges = Vec::new();
        for r in 0..h {
            for c in 0..w {
                let v = r * w + c;
                if c + 1 < w {
                    edges.push((v, v + 1));
                }
                if r + 1 < h {
                    edges.push((v, v + w));
                }
            }
        }
        Graph::new(0..w * h, &edges).unwrap()
    }

    /// Tree in which every internal node has degree `delta`, truncated at
    /// `depth`. Root is node 0 with `delta` children; deeper internal nodes
    /// have `delta - 1` children. Ids are assigned in BFS order.
    pub fn regular_tree(delta: u32, depth: u32) -> Graph {
        assert!(delta >= 2);
        let mut edges = Vec::new();
        let mut next_id: u64 = 1;
        let mut frontier = vec![(0u64, 0u32)];
        let mut nodes = vec![0u64];
        while let Some((v, d)) = frontier.pop() {
            if d == depth {
                continue;
            }
            let children = if d == 0 { delta } else { delta - 1 };
            for _ in 0..children {
                let c = next_id;
                next_id += 1;
                nodes.push(c);
                edges.push((v, c));
                frontier.push((c, d + 1));
            }
        }
        Graph::new(nodes, &edges).unwrap()
    }

    /// Erdos-Renyi graph G(n, p) with a seeded RNG.
    pub fn erdos_renyi(n: u64, p: f64, seed: u64) -> Graph {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut edges = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                if rng.gen::<f64>() < p {
                    edges.push((i, j));
                }
            }
        }
        Graph::new(0..n, &edges).unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::families::*;
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn dist_basics() {
        let g = path(3);
        assert_eq!(g.dist(0, 2).unwrap(), Dist::Finite(2));
        assert_eq!(g.dist(1, 1).unwrap(), Dist::Finite(0));
        let two = Graph::new(0..4, &[(0, 1), (2, 3)]).unwrap();
        assert_eq!(two.dist(0, 3).unwrap(), Dist::Infinity);
        assert!(matches!(g.dist(0, 9), Err(Error::UnknownNode(9))));
    }

    #[test]
    fn ball_basics() {
        let g = path(4);
        assert_eq!(g.ball(1, 0).unwrap(), BTreeSet::from([1]));
        assert_eq!(g.ball(1, 1).unwrap(), BTreeSet::from([0, 1, 2]));
        assert_eq!(g.ball(1, 10).unwrap().len(), 4); // saturates at V
    }

    #[test]
    fn power_graph_examples() {
        let g = path(3);
        assert_eq!(g.power_graph(1).unwrap(), g);
        let p3_2 = g.power_graph(2).unwrap();
        assert_eq!(p3_2.edges().len(), 3); // triangle

        // C6^2 is 4-regular; adjacency checked against brute force.
        let c6 = cycle(6);
        let p = c6.power_graph(2).unwrap();
        for &v in p.node_ids() {
            assert_eq!(p.degree(v).unwrap(), 4);
        }
        for &u in c6.node_ids() {
            for &v in c6.node_ids() {
                if u < v {
                    let d = c6.dist(u, v).unwrap().unwrap();
                    assert_eq!(p.has_edge(u, v).unwrap(), d >= 1 && d <= 2);
                }
            }
        }
    }

    #[test]
    fn line_graph_examples() {
        let (lg, _) = complete(3).line_graph();
        assert_eq!(lg.n(), 3);
        assert_eq!(lg.edges().len(), 3); // K3 -> K3

        let (lg, map) = path(3).line_graph();
        assert_eq!(lg.n(), 2);
        assert_eq!(lg.edges().len(), 1); // shared endpoint 1
        assert_eq!(map.node_for_edge(1, 0), Some(map.node_of_edge[&(0, 1)]));

        let (lg, _) = star(3).line_graph();
        assert_eq!(lg.n(), 3);
        assert_eq!(lg.edges().len(), 3); // K1,3 -> triangle
    }

    #[test]
    fn ordering_validation() {
        let g = path(3);
        assert!(NodeOrdering::new(&g, vec![2, 0, 1]).is_ok());
        assert!(NodeOrdering::new(&g, vec![0, 0, 1]).is_err());
        assert!(NodeOrdering::new(&g, vec![0, 1]).is_err());
        assert_eq!(NodeOrdering::by_id(&g).nodes(), &[0, 1, 2]);
    }

    prop_compose! {
        fn random_graph(max_n: u64)(n in 2..=max_n)(n in Just(n), seed in any::<u64>(), p in 0.0..1.0f64) -> Graph {
            erdos_renyi(n, p, seed)
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        // dist is a metric on each connected component.
        #[test]
        fn dist_is_metric(g in random_graph(32)) {
            let n = g.n();
            let all: Vec<Vec<Dist>> = (0..n).map(|i| g.bfs_idx(i)).collect();
            for i in 0..n {
                prop_assert_eq!(all[i][i], Dist::Finite(0));
                for j in 0..n {
                    prop_assert_eq!(all[i][j], all[j][i]);
                    for k in 0..n {
                        if let (Dist::Finite(a), Dist::Finite(b)) = (all[i][j], all[j][k]) {
                            prop_assert!(all[i][k].at_most(a + b));
                        }
                    }
                }
            }
        }

        #[test]
        fn balls_are_nested(g in random_graph(16), r in 0u32..6) {
            for &v in g.node_ids() {
                let small = g.ball(v, r).unwrap();
                let big = g.ball(v, r + 1).unwrap();
                prop_assert!(small.is_subset(&big));
            }
        }

        // dist in G^k equals ceil(dist_G / k) for connected pairs.
        #[test]
        fn power_graph_dist(g in random_graph(16), k in 1u32..4) {
            let p = g.power_graph(k).unwrap();
            for &u in g.node_ids() {
                for &v in g.node_ids() {
                    match g.dist(u, v).unwrap() {
                        Dist::Finite(d) => {
                            let expect = (d + k - 1) / k;
                            prop_assert_eq!(p.dist(u, v).unwrap(), Dist::Finite(expect));
                        }
                        Dist::Infinity => prop_assert_eq!(p.dist(u, v).unwrap(), Dist::Infinity),
                    }
                }
            }
        }

        // Line-graph distance differs from the closest-endpoint distance by
        // at most 1.
        #[test]
        fn line_graph_dist(g in random_graph(12)) {
            let (lg, map) = g.line_graph();
            let m = lg.n();
            for a in 0..m {
                for b in 0..m {
                    if a == b { continue; }
                    let (u1, u2) = map.edge_of_node[a];
                    let (w1, w2) = map.edge_of_node[b];
                    let dd = [
                        g.dist(u1, w1).unwrap(), g.dist(u1, w2).unwrap(),
                        g.dist(u2, w1).unwrap(), g.dist(u2, w2).unwrap(),
                    ];
                    let closest = dd.iter().copied().min().unwrap();
                    let dl = lg.dist(a as u64, b as u64).unwrap();
                    match (closest, dl) {
                        (Dist::Finite(c), Dist::Finite(l)) => {
                            prop_assert!(l.abs_diff(c) <= 1, "closest {} line {}", c, l);
                        }
                        (Dist::Infinity, Dist::Infinity) => {}
                        other => prop_assert!(false, "mismatch {:?}", other),
                    }
                }
            }
        }
    }
}
