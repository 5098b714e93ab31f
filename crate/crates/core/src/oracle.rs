//! Ground-truth brute-force computations: partition functions, exact
//! conditional marginals, ball-restricted marginals, and the two error
//! metrics. Every other module is tested against this one.
//!
//! Enumeration walks free nodes in ascending id order with early pruning on
//! exactly-zero factors, accumulating in compensated (Kahan) summation. The
//! oracle is intentionally naive: no transfer matrices, no tree recursions.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::gibbs::{FullConfig, GibbsSpec, Instance, PartialConfig, Symbol, Weight};

/// Default budget on enumeration states (node expansions).
pub const DEFAULT_ORACLE_BUDGET: u64 = 10_000_000;

/// Accuracy guarantee attached to a reported marginal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Guarantee {
    Exact,
    /// Total variation error at most the given delta.
    Tv(f64),
    /// Multiplicative error at most the given epsilon.
    Mult(f64),
}

/// A probability vector over the alphabet at one vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginalDist {
    probs: Vec<f64>,
    guarantee: Guarantee,
    /// Set when the queried vertex was pinned and the result is the point
    /// mass at its pinned value.
    pinned: bool,
    note: Option<String>,
}

impl MarginalDist {
    /// Validates non-negativity and total mass within 1e-9 of one, then
    /// renormalizes. Exact zeros stay exact.
    pub fn new(probs: Vec<f64>, guarantee: Guarantee) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidInput("empty marginal".into()));
        }
        if probs.iter().any(|&p| !(p.is_finite() && p >= 0.0)) {
            return Err(Error::InvalidInput("marginal entries must be finite and >= 0".into()));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidInput(format!("marginal mass {sum} not within 1e-9 of 1")));
        }
        let probs = probs.into_iter().map(|p| p / sum).collect();
        Ok(MarginalDist {
            probs,
            guarantee,
            pinned: false,
            note: None,
        })
    }

    pub fn point_mass(q: usize, s: Symbol, guarantee: Guarantee) -> Self {
        let mut probs = vec![0.0; q];
        probs[s] = 1.0;
        MarginalDist {
            probs,
            guarantee,
            pinned: false,
            note: None,
        }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, s: Symbol) -> f64 {
        self.probs[s]
    }

    pub fn q(&self) -> usize {
        self.probs.len()
    }

    pub fn guarantee(&self) -> Guarantee {
        self.guarantee
    }

    pub fn is_pinned_result(&self) -> bool {
        self.pinned
    }

    pub fn note(&self) -> Option<&str> {
        self.note.as_deref()
    }

    pub fn with_guarantee(mut self, g: Guarantee) -> Self {
        self.guarantee = g;
        self
    }

    pub fn with_pinned_flag(mut self) -> Self {
        self.pinned = true;
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    /// Symbols carrying positive probability.
    pub fn support(&self) -> impl Iterator<Item = Symbol> + '_ {
        self.probs
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .map(|(s, _)| s)
    }

    /// Highest-probability symbol, ties broken toward the lowest index.
    pub fn argmax(&self) -> Symbol {
        let mut best = 0;
        for (s, &p) in self.probs.iter().enumerate() {
            if p > self.probs[best] {
                best = s;
            }
        }
        best
    }
}

/// Half L1 distance between two marginals on the same alphabet.
pub fn tv_distance(p: &MarginalDist, q: &MarginalDist) -> Result<f64> {
    if p.q() != q.q() {
        return Err(Error::DimensionMismatch(p.q(), q.q()));
    }
    Ok(0.5 * p.probs.iter().zip(&q.probs).map(|(a, b)| (a - b).abs()).sum::<f64>())
}

/// Multiplicative error: max over symbols of |ln p(x) - ln q(x)|, with the
/// convention that a symbol where both vanish contributes 0 and a one-sided
/// zero makes the error infinite (reported, never clamped).
pub fn mult_error(p: &MarginalDist, q: &MarginalDist) -> Result<f64> {
    if p.q() != q.q() {
        return Err(Error::DimensionMismatch(p.q(), q.q()));
    }
    let mut worst = 0.0f64;
    for (&a, &b) in p.probs.iter().zip(&q.probs) {
        let term = match (a == 0.0, b == 0.0) {
            (true, true) => 0.0,
            (false, false) => (a.ln() - b.ln()).abs(),
            _ => f64::INFINITY,
        };
        worst = worst.max(term);
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, Default)]
struct KahanSum {
    sum: f64,
    c: f64,
}

impl KahanSum {
    fn add(&mut self, x: f64) {
        let y = x - self.c;
        let t = self.sum + y;
        self.c = (t - self.sum) - y;
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum
    }
}

/// Pruned depth-first enumeration over a set of free nodes, with factors
/// evaluated as soon as their scope completes.
struct Enumerator<'a> {
    spec: &'a GibbsSpec,
    factor_set: Vec<usize>,
    dense: Vec<Option<Symbol>>,
    /// Free nodes in enumeration order (dense indices).
    free: Vec<usize>,
    /// Factors (positions into factor_set) that complete when the free node
    /// at each position is assigned.
    triggers: Vec<Vec<usize>>,
    budget: u64,
    spent: u64,
}

impl<'a> Enumerator<'a> {
    /// `factor_set`: the factors to include in the weight (all for global
    /// sums, the in-ball subset for ball marginals). Factors fully assigned
    /// by the pinning are folded into the base weight.
    fn new(
        spec: &'a GibbsSpec,
        pins: &PartialConfig,
        free: Vec<usize>,
        factor_set: Vec<usize>,
        budget: u64,
    ) -> Result<(Self, Weight)> {
        let n = spec.graph().n();
        let mut dense: Vec<Option<Symbol>> = vec![None; n];
        for (v, s) in pins.iter() {
            let i = spec.graph().index_of(v)?;
            if !spec.alphabet().contains(s) {
                return Err(Error::InvalidInput(format!("symbol {s} outside alphabet")));
            }
            dense[i] = Some(s);
        }
        let mut pos_of = vec![usize::MAX; n];
        for (p, &i) in free.iter().enumerate() {
            debug_assert!(dense[i].is_none(), "free node already pinned");
            pos_of[i] = p;
        }
        let mut base = Weight::Pos(1.0);
        let mut triggers = vec![Vec::new(); free.len()];
        for (k, &fi) in factor_set.iter().enumerate() {
            let mut last: Option<usize> = None;
            for &i in spec.scope_idx(fi) {
                if pos_of[i] != usize::MAX {
                    last = Some(last.map_or(pos_of[i], |l: usize| l.max(pos_of[i])));
                } else if dense[i].is_none() {
                    // Scope node neither free nor pinned: the caller built an
                    // inconsistent enumeration.
                    return Err(Error::ContractViolation(
                        "factor scope leaves the enumerated region unpinned".into(),
                    ));
                }
            }
            match last {
                Some(p) => triggers[p].push(k),
                None => {
                    // Fully pinned factor: folds into the base weight.
                    base = base
                        * spec
                            .try_eval_factor_on(fi, &dense)
                            .expect("fully pinned factor must evaluate");
                }
            }
        }
        Ok((
            Enumerator {
                spec,
                factor_set,
                dense,
                free,
                triggers,
                budget,
                spent: 0,
            },
            base,
        ))
    }

    /// Walks all assignments of the free nodes, calling `leaf` with the leaf
    /// weight for every configuration of positive weight.
    fn run(&mut self, base: Weight, mut leaf: impl FnMut(&[Option<Symbol>], f64)) -> Result<()> {
        if base.is_zero() {
            return Ok(());
        }
        if self.free.is_empty() {
            leaf(&self.dense, base.value());
            return Ok(());
        }
        self.recurse(0, base.value(), &mut leaf)
    }

    fn recurse(
        &mut self,
        depth: usize,
        weight: f64,
        leaf: &mut impl FnMut(&[Option<Symbol>], f64),
    ) -> Result<()> {
        let node = self.free[depth];
        for s in 0..self.spec.q() {
            self.spent += 1;
            if self.spent > self.budget {
                return Err(Error::BudgetExceeded {
                    needed: (self.spec.q() as f64).powi(self.free.len() as i32),
                    budget: self.budget as f64,
                });
            }
            self.dense[node] = Some(s);
            let mut w = Weight::Pos(weight);
            for t in 0..self.triggers[depth].len() {
                let fi = self.factor_set[self.triggers[depth][t]];
                match self.spec.try_eval_factor_on(fi, &self.dense) {
                    Some(fw) => w = w * fw,
                    None => unreachable!("trigger fired before scope completion"),
                }
                if w.is_zero() {
                    break;
                }
            }
            if !w.is_zero() {
                if depth + 1 == self.free.len() {
                    leaf(&self.dense, w.value());
                } else {
                    self.recurse(depth + 1, w.value(), leaf)?;
                }
            }
        }
        self.dense[node] = None;
        Ok(())
    }
}

fn free_indices(spec: &GibbsSpec, pins: &PartialConfig) -> Vec<usize> {
    (0..spec.graph().n())
        .filter(|&i| !pins.contains(spec.graph().id_of(i)))
        .collect()
}

/// Z(tau): total weight of full configurations extending the pinning.
/// Positive for every valid instance, since pinnings are feasible.
pub fn partition_function(inst: &Instance, budget: u64) -> Result<f64> {
    let spec = inst.spec();
    let free = free_indices(spec, inst.pinning());
    let all: Vec<usize> = (0..spec.factors().len()).collect();
    let (mut en, base) = Enumerator::new(spec, inst.pinning(), free, all, budget)?;
    let mut acc = KahanSum::default();
    en.run(base, |_, w| acc.add(w))?;
    if acc.value() <= 0.0 {
        return Err(Error::Infeasible(Some("partition function vanished".into())));
    }
    Ok(acc.value())
}

/// Exact conditional marginal of `v` under the instance's pinning.
/// A pinned vertex yields the point mass at its value, flagged.
pub fn marginal(inst: &Instance, v: u64, budget: u64) -> Result<MarginalDist> {
    let spec = inst.spec();
    spec.graph().index_of(v)?;
    if let Some(s) = inst.pinning().get(v) {
        return Ok(MarginalDist::point_mass(spec.q(), s, Guarantee::Exact).with_pinned_flag());
    }
    let vi = spec.graph().index_of(v)?;
    // Enumerate with v first so per-symbol sums come out of one pass with a
    // deterministic reduction order.
    let mut free = vec![vi];
    free.extend(free_indices(spec, inst.pinning()).into_iter().filter(|&i| i != vi));
    let all: Vec<usize> = (0..spec.factors().len()).collect();
    let (mut en, base) = Enumerator::new(spec, inst.pinning(), free, all, budget)?;
    let mut per_symbol = vec![KahanSum::default(); spec.q()];
    en.run(base, |dense, w| {
        per_symbol[dense[vi].unwrap()].add(w);
    })?;
    let z: f64 = per_symbol.iter().map(KahanSum::value).sum();
    if z <= 0.0 {
        return Err(Error::Infeasible(Some(format!("no feasible extension at node {v}"))));
    }
    MarginalDist::new(per_symbol.iter().map(|k| k.value() / z).collect(), Guarantee::Exact)
}

/// Conditional marginal computed from the factors inside `ball` only, with
/// the instance pinning and `boundary` fixing the ball's interface.
///
/// Contract: every factor crossing out of the ball must have all its in-ball
/// scope nodes pinned (by the instance or the boundary); otherwise the
/// boundary does not separate and the call fails.
pub fn ball_marginal(
    inst: &Instance,
    v: u64,
    ball: &BTreeSet<u64>,
    boundary: &PartialConfig,
    budget: u64,
) -> Result<MarginalDist> {
    let spec = inst.spec();
    let vi = spec.graph().index_of(v)?;
    if !ball.contains(&v) {
        return Err(Error::InvalidInput(format!("vertex {v} not inside the ball")));
    }
    let pins_in_ball = inst
        .pinning()
        .restrict(ball)
        .union(&boundary.restrict(ball))?;
    if pins_in_ball.contains(v) {
        return Err(Error::InvalidInput(format!("vertex {v} must be free inside the ball")));
    }

    let ball_idx: BTreeSet<usize> = ball
        .iter()
        .map(|&u| spec.graph().index_of(u))
        .collect::<Result<_>>()?;
    let mut in_ball_factors = Vec::new();
    for fi in 0..spec.factors().len() {
        let scope = spec.scope_idx(fi);
        let inside = scope.iter().filter(|i| ball_idx.contains(i)).count();
        if inside == scope.len() {
            in_ball_factors.push(fi);
        } else if inside > 0 {
            for &i in scope {
                let id = spec.graph().id_of(i);
                if ball_idx.contains(&i) && !pins_in_ball.contains(id) {
                    return Err(Error::ContractViolation(format!(
                        "boundary does not separate: factor {:?} crosses the ball and node {id} is unpinned",
                        spec.factors()[fi].scope()
                    )));
                }
            }
        }
    }

    let free: Vec<usize> = {
        let mut f = vec![vi];
        f.extend(
            ball_idx
                .iter()
                .copied()
                .filter(|&i| i != vi && !pins_in_ball.contains(spec.graph().id_of(i))),
        );
        f
    };
    let (mut en, base) = Enumerator::new(spec, &pins_in_ball, free, in_ball_factors, budget)?;
    let mut per_symbol = vec![KahanSum::default(); spec.q()];
    en.run(base, |dense, w| {
        per_symbol[dense[vi].unwrap()].add(w);
    })?;
    let z: f64 = per_symbol.iter().map(KahanSum::value).sum();
    if z <= 0.0 {
        return Err(Error::Infeasible(Some(
            "ball marginal: no locally feasible in-ball extension".into(),
        )));
    }
    MarginalDist::new(per_symbol.iter().map(|k| k.value() / z).collect(), Guarantee::Exact)
}

/// The exact target distribution over full configurations, normalized.
pub fn joint_distribution(inst: &Instance, budget: u64) -> Result<BTreeMap<FullConfig, f64>> {
    let spec = inst.spec();
    let free = free_indices(spec, inst.pinning());
    let all: Vec<usize> = (0..spec.factors().len()).collect();
    let (mut en, base) = Enumerator::new(spec, inst.pinning(), free, all, budget)?;
    let mut weights: Vec<(FullConfig, f64)> = Vec::new();
    let mut z = KahanSum::default();
    en.run(base, |dense, w| {
        let values: Vec<Symbol> = dense.iter().map(|o| o.unwrap()).collect();
        weights.push((FullConfig::from_values_unchecked(values), w));
        z.add(w);
    })?;
    if z.value() <= 0.0 {
        return Err(Error::Infeasible(Some("no feasible configuration".into())));
    }
    Ok(weights
        .into_iter()
        .map(|(cfg, w)| (cfg, w / z.value()))
        .collect())
}

/// Total variation distance between two distributions over configurations.
pub fn joint_tv(a: &BTreeMap<FullConfig, f64>, b: &BTreeMap<FullConfig, f64>) -> f64 {
    let keys: BTreeSet<&FullConfig> = a.keys().chain(b.keys()).collect();
    0.5 * keys
        .into_iter()
        .map(|k| (a.get(k).copied().unwrap_or(0.0) - b.get(k).copied().unwrap_or(0.0)).abs())
        .sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gibbs::{coloring_uniform, hardcore, two_spin};
    use crate::graph::families::*;
    use crate::graph::NodeOrdering;
    use proptest::prelude::*;
    use std::sync::Arc;

    fn inst(spec: GibbsSpec) -> Instance {
        Instance::unpinned(Arc::new(spec)).unwrap()
    }

    #[test]
    fn partition_function_examples() {
        // Independent sets of P3: {}, {0}, {1}, {2}, {0,2}.
        let i = inst(hardcore(path(3), 1.0).unwrap());
        assert!((partition_function(&i, 1_000).unwrap() - 5.0).abs() < 1e-12);

        // Proper 3-colorings of K3.
        let i = inst(coloring_uniform(complete(3), 3).unwrap());
        assert!((partition_function(&i, 1_000).unwrap() - 6.0).abs() < 1e-12);

        // Single vertex: 1 + lambda.
        let i = inst(hardcore(path(1), 0.7).unwrap());
        assert!((partition_function(&i, 1_000).unwrap() - 1.7).abs() < 1e-12);
    }

    #[test]
    fn marginal_examples() {
        let lam = 2.0;
        let i = inst(hardcore(path(1), lam).unwrap());
        let m = marginal(&i, 0, 1_000).unwrap();
        assert!((m.prob(0) - 1.0 / 3.0).abs() < 1e-12);
        assert!((m.prob(1) - lam / 3.0).abs() < 1e-12);

        // Hardcore P3, lambda 1: middle occupied in 1 of 5 independent sets.
        let i = inst(hardcore(path(3), 1.0).unwrap());
        let m = marginal(&i, 1, 1_000).unwrap();
        assert!((m.prob(1) - 0.2).abs() < 1e-12);

        // End pinned occupied: middle is forced empty, exactly.
        let spec = Arc::new(hardcore(path(3), 1.0).unwrap());
        let i = Instance::new(spec, PartialConfig::from_pairs([(0, 1)]).unwrap()).unwrap();
        let m = marginal(&i, 1, 1_000).unwrap();
        assert_eq!(m.prob(1), 0.0);

        // Pinned vertex: point mass, flagged.
        let m = marginal(&i, 0, 1_000).unwrap();
        assert!(m.is_pinned_result());
        assert_eq!(m.prob(1), 1.0);
    }

    #[test]
    fn budget_refusal() {
        let i = inst(hardcore(cycle(12), 1.0).unwrap());
        match partition_function(&i, 10) {
            Err(Error::BudgetExceeded { needed, budget }) => {
                assert_eq!(budget, 10.0);
                assert!(needed >= 4096.0);
            }
            other => panic!("expected budget refusal, got {other:?}"),
        }
    }

    #[test]
    fn ball_marginal_examples() {
        // Whole graph as ball: equals the plain marginal.
        let i = inst(hardcore(cycle(6), 1.2).unwrap());
        let all: BTreeSet<u64> = i.graph().node_ids().iter().copied().collect();
        let a = ball_marginal(&i, 0, &all, &PartialConfig::empty(), 100_000).unwrap();
        let b = marginal(&i, 0, 100_000).unwrap();
        assert!(tv_distance(&a, &b).unwrap() < 1e-12);

        // Hardcore C6, ball(v,2) with the two distance-2 nodes pinned empty:
        // matches the exact conditional of the conditioned instance.
        let boundary = PartialConfig::from_pairs([(2, 0), (4, 0)]).unwrap();
        let ball = i.graph().ball(0, 2).unwrap();
        let got = ball_marginal(&i, 0, &ball, &boundary, 100_000).unwrap();
        let conditioned = i.condition(&boundary).unwrap();
        let want = marginal(&conditioned, 0, 100_000).unwrap();
        assert!(tv_distance(&got, &want).unwrap() < 1e-12);

        // All neighbours pinned, ball(v,1): conditional independence makes it
        // exact for the larger graph too.
        let i = inst(hardcore(grid(3, 3), 0.9).unwrap());
        let center = 4u64;
        let pins = PartialConfig::from_pairs([(1, 0), (3, 0), (5, 1), (7, 0)]).unwrap();
        let ball = i.graph().ball(center, 1).unwrap();
        let got = ball_marginal(&i, center, &ball, &pins, 100_000).unwrap();
        let want = marginal(&i.condition(&pins).unwrap(), center, 100_000).unwrap();
        assert!(tv_distance(&got, &want).unwrap() < 1e-12);

        // A crossing factor with an unpinned in-ball endpoint is a contract
        // violation.
        let ball = i.graph().ball(center, 1).unwrap();
        let err = ball_marginal(&i, center, &ball, &PartialConfig::empty(), 100_000);
        assert!(matches!(err, Err(Error::ContractViolation(_))));
    }

    #[test]
    fn metric_examples() {
        let p = MarginalDist::new(vec![0.5, 0.5], Guarantee::Exact).unwrap();
        let q = MarginalDist::new(vec![0.25, 0.75], Guarantee::Exact).unwrap();
        assert_eq!(tv_distance(&p, &p).unwrap(), 0.0);
        assert!((tv_distance(&p, &q).unwrap() - 0.25).abs() < 1e-15);
        let a = MarginalDist::new(vec![1.0, 0.0], Guarantee::Exact).unwrap();
        let b = MarginalDist::new(vec![0.0, 1.0], Guarantee::Exact).unwrap();
        assert_eq!(tv_distance(&a, &b).unwrap(), 1.0);

        assert_eq!(mult_error(&p, &p).unwrap(), 0.0);
        assert_eq!(mult_error(&a, &a).unwrap(), 0.0); // shared zeros contribute 0
        assert!((mult_error(&p, &q).unwrap() - 2f64.ln()).abs() < 1e-12);
        assert_eq!(mult_error(&a, &p).unwrap(), f64::INFINITY); // one-sided zero

        let r = MarginalDist::new(vec![0.5, 0.25, 0.25], Guarantee::Exact).unwrap();
        assert!(matches!(tv_distance(&p, &r), Err(Error::DimensionMismatch(2, 3))));
    }

    #[test]
    fn chain_rule_reconstructs_weights() {
        // Z(tau) * prod_i mu_{v_i}(sigma_{v_i} | prefix) == weight(sigma).
        for (spec, seed) in [
            (hardcore(cycle(5), 1.5).unwrap(), 1u64),
            (coloring_uniform(path(4), 3).unwrap(), 2),
            (two_spin(path(4), 0.5, 1.5, 2.0).unwrap(), 3),
        ] {
            let i = inst(spec);
            let z = partition_function(&i, 1_000_000).unwrap();
            let joint = joint_distribution(&i, 1_000_000).unwrap();
            let order = NodeOrdering::random(i.graph(), seed);
            for (sigma, _) in joint.iter().take(12) {
                let map = sigma.to_map(i.spec());
                let mut prod = 1.0;
                let mut pins = PartialConfig::empty();
                for &v in order.nodes() {
                    let cur = Instance::new(i.spec_arc(), pins.clone()).unwrap();
                    let m = marginal(&cur, v, 1_000_000).unwrap();
                    prod *= m.prob(map[&v]);
                    pins.insert(v, map[&v]);
                }
                let w = i.spec().weight_of_map(&map).unwrap().value();
                assert!((z * prod - w).abs() <= 1e-9 * w.max(1.0));
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(128))]

        // tv is a metric; mult_error is symmetric and triangular on positive
        // distributions; the standard comparison bound holds.
        #[test]
        fn metric_properties(raw in proptest::collection::vec(1e-3..1.0f64, 9)) {
            let norm = |xs: &[f64]| {
                let s: f64 = xs.iter().sum();
                MarginalDist::new(xs.iter().map(|x| x / s).collect(), Guarantee::Exact).unwrap()
            };
            let p = norm(&raw[0..3]);
            let q = norm(&raw[3..6]);
            let r = norm(&raw[6..9]);
            let tpq = tv_distance(&p, &q).unwrap();
            prop_assert!((tv_distance(&q, &p).unwrap() - tpq).abs() < 1e-15);
            prop_assert!(tpq <= tv_distance(&p, &r).unwrap() + tv_distance(&r, &q).unwrap() + 1e-12);

            let epq = mult_error(&p, &q).unwrap();
            prop_assert!((mult_error(&q, &p).unwrap() - epq).abs() < 1e-12);
            prop_assert!(epq <= mult_error(&p, &r).unwrap() + mult_error(&r, &q).unwrap() + 1e-12);

            // err <= eps implies tv <= (e^eps - 1) / 2.
            prop_assert!(tpq <= (epq.exp() - 1.0) / 2.0 + 1e-12);
        }

        // Ball marginals agree with conditioning whenever the boundary
        // separates, on random hardcore instances.
        #[test]
        fn ball_matches_conditioning(seed in any::<u64>(), n in 4u64..12, r in 1u32..3) {
            let g = erdos_renyi(n, 0.3, seed);
            let spec = Arc::new(hardcore(g, 1.0).unwrap());
            let i = Instance::unpinned(Arc::clone(&spec)).unwrap();
            let v = *spec.graph().node_ids().first().unwrap();
            let ball = spec.graph().ball(v, r).unwrap();
            // Pin the whole sphere at distance r empty: separates and stays feasible.
            let sphere = spec.graph().sphere(v, r).unwrap();
            let boundary = PartialConfig::from_pairs(sphere.iter().map(|&u| (u, 0))).unwrap();
            let got = ball_marginal(&i, v, &ball, &boundary, 1_000_000).unwrap();
            let want = marginal(&i.condition(&boundary).unwrap(), v, 1_000_000).unwrap();
            prop_assert!(tv_distance(&got, &want).unwrap() < 1e-12);
        }
    }
}
