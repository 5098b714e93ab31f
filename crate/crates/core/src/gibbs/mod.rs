//! Factor-graph Gibbs specifications, partial configurations, feasibility
//! and self-reduction by conditioning.
//!
//! A [`GibbsSpec`] is a graph, an alphabet `0..q`, and a list of factors;
//! the weight of a full configuration is the product of all factor
//! evaluations. Hard constraints are represented by an exact [`Weight::Zero`]
//! flag so that feasibility decisions are purely structural and never
//! threshold-based.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::graph::{Dist, Graph};

mod admissible;
mod models;

pub use admissible::{check_local_admissibility, AdmissibilityVerdict};
pub use models::{coloring, coloring_uniform, hardcore, matching, two_spin};

pub type Symbol = usize;

/// Default cap on the alphabet size relative to n; a sanity bound, not a
/// semantic limit. Specs that need more call [`GibbsSpec::with_alphabet_cap`].
pub fn default_alphabet_cap(n: usize) -> usize {
    16.max(4 * n * n)
}

/// Alphabet of symbols `0..size`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Alphabet {
    size: usize,
}

impl Alphabet {
    pub fn new(size: usize) -> Result<Self> {
        if size == 0 {
            return Err(Error::InvalidInput("alphabet must have q >= 1".into()));
        }
        Ok(Alphabet { size })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn symbols(&self) -> impl Iterator<Item = Symbol> {
        0..self.size
    }

    pub fn contains(&self, s: Symbol) -> bool {
        s < self.size
    }
}

/// A non-negative factor value. Exact zeros carry their own variant so hard
/// constraints cannot be blurred by floating-point rounding.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Weight {
    Zero,
    Pos(f64),
}

impl Weight {
    pub fn from_f64(x: f64) -> Result<Weight> {
        if x == 0.0 {
            Ok(Weight::Zero)
        } else if x.is_finite() && x > 0.0 {
            Ok(Weight::Pos(x))
        } else {
            Err(Error::InvalidInput(format!("factor value {x} is not a finite non-negative real")))
        }
    }

    pub fn is_zero(self) -> bool {
        matches!(self, Weight::Zero)
    }

    /// Numeric value; exactly 0.0 for `Zero`.
    pub fn value(self) -> f64 {
        match self {
            Weight::Zero => 0.0,
            Weight::Pos(x) => x,
        }
    }

    pub fn times(self, other: Weight) -> Weight {
        match (self, other) {
            (Weight::Pos(a), Weight::Pos(b)) => Weight::Pos(a * b),
            _ => Weight::Zero,
        }
    }
}

impl std::ops::Mul for Weight {
    type Output = Weight;
    fn mul(self, rhs: Weight) -> Weight {
        self.times(rhs)
    }
}

/// A constraint: a table over the assignments of an ordered, duplicate-free
/// scope of nodes. The table is dense, indexed in mixed radix with the first
/// scope node most significant.
#[derive(Debug, Clone, PartialEq)]
pub struct Factor {
    scope: Vec<u64>,
    q: usize,
    table: Vec<Weight>,
}

impl Factor {
    pub fn new(scope: Vec<u64>, q: usize, values: &[f64]) -> Result<Self> {
        if scope.is_empty() {
            return Err(Error::InvalidInput("factor scope must be nonempty".into()));
        }
        let set: BTreeSet<u64> = scope.iter().copied().collect();
        if set.len() != scope.len() {
            return Err(Error::InvalidInput("factor scope has duplicate nodes".into()));
        }
        let expect = q
            .checked_pow(scope.len() as u32)
            .ok_or_else(|| Error::InvalidInput("factor table too large".into()))?;
        if values.len() != expect {
            return Err(Error::InvalidInput(format!(
                "factor table has {} entries, expected q^|S| = {expect}",
                values.len()
            )));
        }
        let table = values
            .iter()
            .map(|&x| Weight::from_f64(x))
            .collect::<Result<Vec<_>>>()?;
        Ok(Factor { scope, q, table })
    }

    pub fn scope(&self) -> &[u64] {
        &self.scope
    }

    pub fn table(&self) -> &[Weight] {
        &self.table
    }

    /// Mixed-radix index of a scope assignment.
    fn index(&self, syms: &[Symbol]) -> usize {
        debug_assert_eq!(syms.len(), self.scope.len());
        let mut idx = 0;
        for &s in syms {
            debug_assert!(s < self.q);
            idx = idx * self.q + s;
        }
        idx
    }

    pub fn eval(&self, syms: &[Symbol]) -> Weight {
        self.table[self.index(syms)]
    }
}

/// An assignment on a subset of nodes; the conditioning object of every
/// instance. Keys are node ids.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PartialConfig {
    assignment: BTreeMap<u64, Symbol>,
}

impl PartialConfig {
    pub fn empty() -> Self {
        PartialConfig::default()
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (u64, Symbol)>) -> Result<Self> {
        let mut assignment = BTreeMap::new();
        for (v, s) in pairs {
            if let Some(&old) = assignment.get(&v) {
                if old != s {
                    return Err(Error::ConflictingAssignment { node: v, a: old, b: s });
                }
            }
            assignment.insert(v, s);
        }
        Ok(PartialConfig { assignment })
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn get(&self, v: u64) -> Option<Symbol> {
        self.assignment.get(&v).copied()
    }

    pub fn contains(&self, v: u64) -> bool {
        self.assignment.contains_key(&v)
    }

    /// The domain Lambda.
    pub fn domain(&self) -> impl Iterator<Item = u64> + '_ {
        self.assignment.keys().copied()
    }

    pub fn domain_set(&self) -> BTreeSet<u64> {
        self.assignment.keys().copied().collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, Symbol)> + '_ {
        self.assignment.iter().map(|(&v, &s)| (v, s))
    }

    pub fn insert(&mut self, v: u64, s: Symbol) {
        self.assignment.insert(v, s);
    }

    /// Union of two partial configurations; a disagreement on a shared node
    /// is an input error.
    pub fn union(&self, other: &PartialConfig) -> Result<PartialConfig> {
        let mut merged = self.assignment.clone();
        for (v, s) in other.iter() {
            if let Some(&old) = merged.get(&v) {
                if old != s {
                    return Err(Error::ConflictingAssignment { node: v, a: old, b: s });
                }
            }
            merged.insert(v, s);
        }
        Ok(PartialConfig { assignment: merged })
    }

    pub fn restrict(&self, nodes: &BTreeSet<u64>) -> PartialConfig {
        PartialConfig {
            assignment: self
                .assignment
                .iter()
                .filter(|(v, _)| nodes.contains(v))
                .map(|(&v, &s)| (v, s))
                .collect(),
        }
    }

    /// Nodes on which the two configurations are both defined and disagree.
    pub fn disagreement(&self, other: &PartialConfig) -> BTreeSet<u64> {
        self.assignment
            .iter()
            .filter_map(|(&v, &s)| match other.get(v) {
                Some(t) if t != s => Some(v),
                _ => None,
            })
            .collect()
    }
}

/// A full configuration, dense over the spec's node order (ascending id).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FullConfig {
    values: Vec<Symbol>,
}

impl FullConfig {
    pub fn new(spec: &GibbsSpec, values: Vec<Symbol>) -> Result<Self> {
        if values.len() != spec.graph.n() {
            return Err(Error::InvalidInput(format!(
                "configuration has {} values for {} nodes",
                values.len(),
                spec.graph.n()
            )));
        }
        if let Some(&bad) = values.iter().find(|&&s| !spec.alphabet.contains(s)) {
            return Err(Error::InvalidInput(format!("symbol {bad} outside alphabet")));
        }
        Ok(FullConfig { values })
    }

    pub(crate) fn from_values_unchecked(values: Vec<Symbol>) -> Self {
        FullConfig { values }
    }

    pub fn values(&self) -> &[Symbol] {
        &self.values
    }

    pub fn get_idx(&self, idx: usize) -> Symbol {
        self.values[idx]
    }

    pub fn get(&self, spec: &GibbsSpec, v: u64) -> Result<Symbol> {
        Ok(self.values[spec.graph.index_of(v)?])
    }

    pub fn set_idx(&mut self, idx: usize, s: Symbol) {
        self.values[idx] = s;
    }

    /// View as an id-keyed map.
    pub fn to_map(&self, spec: &GibbsSpec) -> BTreeMap<u64, Symbol> {
        spec.graph
            .node_ids()
            .iter()
            .copied()
            .zip(self.values.iter().copied())
            .collect()
    }

    pub fn to_partial(&self, spec: &GibbsSpec) -> PartialConfig {
        PartialConfig {
            assignment: self.to_map(spec),
        }
    }
}

/// A factor-graph specification of an unnormalized joint distribution.
#[derive(Debug, Clone)]
pub struct GibbsSpec {
    graph: Graph,
    alphabet: Alphabet,
    factors: Vec<Factor>,
    /// Max scope diameter over all factors.
    locality: u32,
    /// factor index -> scope as dense node indices.
    scopes_idx: Vec<Vec<usize>>,
    /// node index -> indices of factors whose scope contains it.
    touching: Vec<Vec<usize>>,
}

impl GibbsSpec {
    pub fn new(graph: Graph, q: usize, factors: Vec<Factor>) -> Result<Self> {
        let cap = default_alphabet_cap(graph.n());
        Self::with_alphabet_cap(graph, q, factors, cap)
    }

    pub fn with_alphabet_cap(
        graph: Graph,
        q: usize,
        factors: Vec<Factor>,
        cap: usize,
    ) -> Result<Self> {
        let alphabet = Alphabet::new(q)?;
        if q > cap {
            return Err(Error::InvalidInput(format!(
                "alphabet size {q} exceeds the configured cap {cap}"
            )));
        }
        let mut locality = 0u32;
        let mut scopes_idx = Vec::with_capacity(factors.len());
        let mut touching = vec![Vec::new(); graph.n()];
        for (fi, f) in factors.iter().enumerate() {
            if f.q != q {
                return Err(Error::InvalidInput(format!(
                    "factor over alphabet {} in a spec with q = {q}",
                    f.q
                )));
            }
            let mut idxs = Vec::with_capacity(f.scope.len());
            for &v in &f.scope {
                idxs.push(graph.index_of(v)?);
            }
            // Scope diameter must be finite: all scope nodes in one component.
            for &u in &f.scope {
                let d = graph.bfs(u)?;
                for &iv in &idxs {
                    match d[iv] {
                        Dist::Finite(x) => locality = locality.max(x),
                        Dist::Infinity => {
                            return Err(Error::InvalidInput(format!(
                                "factor scope {:?} spans disconnected nodes",
                                f.scope
                            )))
                        }
                    }
                }
            }
            for &iv in &idxs {
                touching[iv].push(fi);
            }
            scopes_idx.push(idxs);
        }
        Ok(GibbsSpec {
            graph,
            alphabet,
            factors,
            locality,
            scopes_idx,
            touching,
        })
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    pub fn q(&self) -> usize {
        self.alphabet.size
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    /// Max scope diameter, the locality parameter of the spec.
    pub fn locality(&self) -> u32 {
        self.locality
    }

    pub fn scope_idx(&self, factor: usize) -> &[usize] {
        &self.scopes_idx[factor]
    }

    pub fn factors_touching_idx(&self, node_idx: usize) -> &[usize] {
        &self.touching[node_idx]
    }

    pub(crate) fn eval_factor_on(&self, fi: usize, dense: &[Symbol]) -> Weight {
        let idxs = &self.scopes_idx[fi];
        let mut key = 0usize;
        let q = self.alphabet.size;
        for &i in idxs {
            key = key * q + dense[i];
        }
        self.factors[fi].table[key]
    }

    /// Factor value on a partially assigned dense vector; `None` when some
    /// scope node is unassigned.
    pub(crate) fn try_eval_factor_on(&self, fi: usize, dense: &[Option<Symbol>]) -> Option<Weight> {
        let idxs = &self.scopes_idx[fi];
        let mut key = 0usize;
        let q = self.alphabet.size;
        for &i in idxs {
            key = key * q + dense[i]?;
        }
        Some(self.factors[fi].table[key])
    }

    /// Product of all factor evaluations. Exactly zero iff some factor is
    /// exactly zero.
    pub fn weight(&self, sigma: &FullConfig) -> Weight {
        let mut w = Weight::Pos(1.0);
        for fi in 0..self.factors.len() {
            w = w * self.eval_factor_on(fi, &sigma.values);
            if w.is_zero() {
                return Weight::Zero;
            }
        }
        w
    }

    /// Weight of an id-keyed configuration; incomplete input is an error.
    pub fn weight_of_map(&self, sigma: &BTreeMap<u64, Symbol>) -> Result<Weight> {
        let mut values = Vec::with_capacity(self.graph.n());
        for &v in self.graph.node_ids() {
            match sigma.get(&v) {
                Some(&s) => values.push(s),
                None => return Err(Error::IncompleteConfig(v)),
            }
        }
        let full = FullConfig::new(self, values)?;
        Ok(self.weight(&full))
    }

    /// True iff the product of all factors whose scope is fully contained in
    /// the domain of `tau` is positive. The empty configuration is always
    /// locally feasible.
    pub fn is_locally_feasible(&self, tau: &PartialConfig) -> bool {
        let mut dense: Vec<Option<Symbol>> = vec![None; self.graph.n()];
        for (v, s) in tau.iter() {
            if let Ok(i) = self.graph.index_of(v) {
                dense[i] = Some(s);
            }
        }
        for fi in 0..self.factors.len() {
            if let Some(w) = self.try_eval_factor_on(fi, &dense) {
                if w.is_zero() {
                    return false;
                }
            }
        }
        true
    }

    /// Searches for a full feasible extension of `tau` by depth-first search
    /// with pruning on exactly-zero factors. Nodes are filled in ascending id
    /// order, symbols in ascending order, so the result is deterministic.
    ///
    /// `budget` counts node expansions; exceeding it is an error, never a
    /// silent "infeasible".
    pub fn find_feasible_extension(
        &self,
        tau: &PartialConfig,
        budget: u64,
    ) -> Result<Option<FullConfig>> {
        for (v, s) in tau.iter() {
            self.graph.index_of(v)?;
            if !self.alphabet.contains(s) {
                return Err(Error::InvalidInput(format!("symbol {s} outside alphabet")));
            }
        }
        let n = self.graph.n();
        let mut dense: Vec<Option<Symbol>> = vec![None; n];
        for (v, s) in tau.iter() {
            dense[self.graph.index_of(v)?] = Some(s);
        }
        // Pinned-only factors must already be positive.
        for fi in 0..self.factors.len() {
            if let Some(w) = self.try_eval_factor_on(fi, &dense) {
                if w.is_zero() {
                    return Ok(None);
                }
            }
        }
        let free: Vec<usize> = (0..n).filter(|&i| dense[i].is_none()).collect();
        let mut spent = 0u64;
        if self.extend_rec(&mut dense, &free, 0, budget, &mut spent)? {
            let values = dense.into_iter().map(Option::unwrap).collect();
            Ok(Some(FullConfig { values }))
        } else {
            Ok(None)
        }
    }

    fn extend_rec(
        &self,
        dense: &mut Vec<Option<Symbol>>,
        free: &[usize],
        depth: usize,
        budget: u64,
        spent: &mut u64,
    ) -> Result<bool> {
        if depth == free.len() {
            return Ok(true);
        }
        let node = free[depth];
        for s in 0..self.alphabet.size {
            *spent += 1;
            if *spent > budget {
                return Err(Error::BudgetExceeded {
                    needed: (self.alphabet.size as f64).powi(free.len() as i32),
                    budget: budget as f64,
                });
            }
            dense[node] = Some(s);
            let ok = self.touching[node].iter().all(|&fi| {
                self.try_eval_factor_on(fi, dense)
                    .map_or(true, |w| !w.is_zero())
            });
            if ok && self.extend_rec(dense, free, depth + 1, budget, spent)? {
                return Ok(true);
            }
        }
        dense[node] = None;
        Ok(false)
    }
}

/// Default node-expansion budget for feasibility searches.
pub const FEASIBILITY_BUDGET: u64 = 10_000_000;

/// A spec together with a feasible pinning; the unit every algorithm runs on.
#[derive(Debug, Clone)]
pub struct Instance {
    spec: Arc<GibbsSpec>,
    pinning: PartialConfig,
}

impl Instance {
    /// Builds an instance, verifying pinning feasibility by exhaustive
    /// search (desk scale).
    pub fn new(spec: Arc<GibbsSpec>, pinning: PartialConfig) -> Result<Self> {
        match spec.find_feasible_extension(&pinning, FEASIBILITY_BUDGET)? {
            Some(_) => Ok(Instance { spec, pinning }),
            None => Err(Error::Infeasible(Some("pinning admits no feasible extension".into()))),
        }
    }

    /// Builds an instance checking only local feasibility. Sound when the
    /// spec is certified locally admissible.
    pub fn new_locally_checked(spec: Arc<GibbsSpec>, pinning: PartialConfig) -> Result<Self> {
        if !spec.is_locally_feasible(&pinning) {
            return Err(Error::Infeasible(Some("pinning is not locally feasible".into())));
        }
        Ok(Instance { spec, pinning })
    }

    pub fn unpinned(spec: Arc<GibbsSpec>) -> Result<Self> {
        Instance::new(spec, PartialConfig::empty())
    }

    pub fn spec(&self) -> &GibbsSpec {
        &self.spec
    }

    pub fn spec_arc(&self) -> Arc<GibbsSpec> {
        Arc::clone(&self.spec)
    }

    pub fn graph(&self) -> &Graph {
        self.spec.graph()
    }

    pub fn pinning(&self) -> &PartialConfig {
        &self.pinning
    }

    pub fn is_pinned(&self, v: u64) -> bool {
        self.pinning.contains(v)
    }

    pub fn free_nodes(&self) -> Vec<u64> {
        self.spec
            .graph()
            .node_ids()
            .iter()
            .copied()
            .filter(|&v| !self.pinning.contains(v))
            .collect()
    }

    /// Conditions the instance on additional pins. Conflicts with the
    /// existing pinning are input errors; an infeasible combination is an
    /// infeasibility error.
    pub fn condition(&self, extra: &PartialConfig) -> Result<Instance> {
        let merged = self.pinning.union(extra)?;
        Instance::new(Arc::clone(&self.spec), merged)
    }

    /// Conditioning for callers that already know the combined pinning is
    /// feasible (every pin drawn from a positive reported marginal, every
    /// bridge verified). Debug builds still verify.
    pub(crate) fn condition_trusted(&self, extra: &PartialConfig) -> Result<Instance> {
        let merged = self.pinning.union(extra)?;
        debug_assert!(
            self.spec
                .find_feasible_extension(&merged, FEASIBILITY_BUDGET)
                .map(|o| o.is_some())
                .unwrap_or(true),
            "trusted conditioning produced an infeasible pinning"
        );
        Ok(Instance {
            spec: Arc::clone(&self.spec),
            pinning: merged,
        })
    }

    /// Conditioning with no feasibility checks at all. Approximate samplers
    /// may legitimately walk outside the feasible set; queries on such an
    /// instance report infeasibility and the caller handles it.
    pub(crate) fn condition_unchecked(&self, extra: &PartialConfig) -> Result<Instance> {
        let merged = self.pinning.union(extra)?;
        Ok(Instance {
            spec: Arc::clone(&self.spec),
            pinning: merged,
        })
    }
}
