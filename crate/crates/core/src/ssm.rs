//! Empirical strong-spatial-mixing measurement, decay-rate fitting,
//! uniqueness thresholds, chain-rule counting, and the phase-transition
//! demonstration on regular trees.
//!
//! A mixing profile records, per distance t, the largest influence a
//! far-away boundary change has on a vertex's conditional marginal: the max
//! over enumerated feasible pinning pairs differing only on a set at
//! distance >= t, in both total variation and multiplicative error. The
//! enumerated scope is always recorded with the profile; restricted scopes
//! can only underestimate the true rate.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::error::{Error, Result};
use crate::gibbs::{FullConfig, Instance, PartialConfig, Symbol};
use crate::graph::{Dist, NodeOrdering};
use crate::inference::Inferencer;
use crate::oracle::{self, MarginalDist};
use crate::samplers::{ground_state, JvvConfig};

/// One measured profile point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SsmPoint {
    pub t: u32,
    pub delta_tv: f64,
    pub delta_mult: f64,
    /// Number of enumerated pairs whose disagreement lies at distance >= t.
    pub pairs: usize,
}

/// Measured mixing profile: per distance t, the max influence over all
/// enumerated pairs at distance >= t. By construction both sequences are
/// non-increasing in t, and distances with no qualifying pair report 0 (the
/// empty-max convention, called out in the scope note).
#[derive(Debug, Clone)]
pub struct SsmProfile {
    points: Vec<SsmPoint>,
    pub scope_note: String,
    pub pair_count: usize,
}

impl SsmProfile {
    pub fn points(&self) -> &[SsmPoint] {
        &self.points
    }

    pub fn t_max(&self) -> u32 {
        self.points.last().map_or(0, |p| p.t)
    }

    pub fn delta_tv(&self, t: u32) -> f64 {
        self.points
            .iter()
            .find(|p| p.t == t)
            .map_or(0.0, |p| p.delta_tv)
    }

    pub fn delta_mult(&self, t: u32) -> f64 {
        self.points
            .iter()
            .find(|p| p.t == t)
            .map_or(0.0, |p| p.delta_mult)
    }

    /// (t, delta_tv) pairs, the usual fitting input.
    pub fn tv_points(&self) -> Vec<(u32, f64)> {
        self.points.iter().map(|p| (p.t, p.delta_tv)).collect()
    }

    pub fn mult_points(&self) -> Vec<(u32, f64)> {
        self.points.iter().map(|p| (p.t, p.delta_mult)).collect()
    }
}

/// Incremental profile builder: feed it boundary pairs, read off the
/// suffix maxima.
pub struct SsmMeasurement<'a> {
    inst: &'a Instance,
    v: u64,
    t_max: u32,
    budget: u64,
    dist_from_v: Vec<Dist>,
    /// Max influence of pairs at distance exactly d.
    tv_at: Vec<f64>,
    mult_at: Vec<f64>,
    count_at: Vec<usize>,
    marginal_cache: HashMap<Vec<(u64, Symbol)>, MarginalDist>,
    pub pair_count: usize,
}

impl<'a> SsmMeasurement<'a> {
    pub fn new(inst: &'a Instance, v: u64, t_max: u32, budget: u64) -> Result<Self> {
        if inst.pinning().contains(v) {
            return Err(Error::InvalidInput(format!("vertex {v} is pinned")));
        }
        let dist_from_v = inst.graph().bfs(v)?;
        Ok(SsmMeasurement {
            inst,
            v,
            t_max,
            budget,
            dist_from_v,
            tv_at: vec![0.0; t_max as usize + 1],
            mult_at: vec![0.0; t_max as usize + 1],
            count_at: vec![0; t_max as usize + 1],
            marginal_cache: HashMap::new(),
            pair_count: 0,
        })
    }

    fn marginal_of(&mut self, pins: &PartialConfig) -> Result<MarginalDist> {
        let key: Vec<(u64, Symbol)> = pins.iter().collect();
        if let Some(m) = self.marginal_cache.get(&key) {
            return Ok(m.clone());
        }
        let inst = self.inst.condition_unchecked(pins)?;
        let m = oracle::marginal(&inst, self.v, self.budget)?;
        self.marginal_cache.insert(key, m.clone());
        Ok(m)
    }

    /// Record one feasible pair of pinnings on a common domain. Equal
    /// configurations contribute nothing.
    pub fn add_pair(&mut self, sigma: &PartialConfig, tau: &PartialConfig) -> Result<()> {
        if sigma.domain_set() != tau.domain_set() {
            return Err(Error::InvalidInput(
                "mixing pair must share one domain".into(),
            ));
        }
        let disagree = sigma.disagreement(tau);
        if disagree.is_empty() {
            return Ok(());
        }
        let d = disagree
            .iter()
            .map(|&u| self.dist_from_v[self.inst.graph().index_of(u).unwrap()])
            .min()
            .unwrap();
        let d = match d {
            Dist::Finite(x) => x.min(self.t_max) as usize,
            Dist::Infinity => self.t_max as usize,
        };
        let ma = self.marginal_of(sigma)?;
        let mb = self.marginal_of(tau)?;
        let tv = oracle::tv_distance(&ma, &mb)?;
        let mult = oracle::mult_error(&ma, &mb)?;
        self.tv_at[d] = self.tv_at[d].max(tv);
        self.mult_at[d] = self.mult_at[d].max(mult);
        self.count_at[d] += 1;
        self.pair_count += 1;
        Ok(())
    }

    pub fn finish(self, scope_note: impl Into<String>) -> SsmProfile {
        let mut points = Vec::with_capacity(self.t_max as usize + 1);
        let mut tv = 0.0f64;
        let mut mult = 0.0f64;
        let mut count = 0usize;
        let mut rev = Vec::new();
        for t in (0..=self.t_max).rev() {
            tv = tv.max(self.tv_at[t as usize]);
            mult = mult.max(self.mult_at[t as usize]);
            count += self.count_at[t as usize];
            rev.push(SsmPoint {
                t,
                delta_tv: tv,
                delta_mult: mult,
                pairs: count,
            });
        }
        rev.reverse();
        points.extend(rev);
        SsmProfile {
            points,
            scope_note: scope_note.into(),
            pair_count: self.pair_count,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct AllSubsetsOptions {
    /// Cap on examined states (configurations and pairs).
    pub state_budget: u64,
    /// Skip the per-configuration global feasibility search; sound only
    /// for specs certified locally admissible.
    pub assume_locally_admissible: bool,
}

impl Default for AllSubsetsOptions {
    fn default() -> Self {
        AllSubsetsOptions {
            state_budget: 50_000_000,
            assume_locally_admissible: false,
        }
    }
}

/// Exhaustive scope: every subset of the free vertices (excluding `v`),
/// every feasible configuration pair on it. This measures the true mixing
/// rate of the instance. Exponential; intended for desk-scale graphs. On
/// budget exhaustion the profile measured so far is returned, with the
/// stopping point recorded in the scope note.
pub fn measure_all_subsets(
    inst: &Instance,
    v: u64,
    t_max: u32,
    opts: AllSubsetsOptions,
) -> Result<SsmProfile> {
    let g = inst.graph();
    let n = g.n();
    if n >= 63 {
        return Err(Error::InvalidInput("all-subsets scope needs n < 63".into()));
    }
    let candidates: Vec<u64> = g
        .node_ids()
        .iter()
        .copied()
        .filter(|&u| u != v && !inst.pinning().contains(u))
        .collect();
    let mut meas = SsmMeasurement::new(inst, v, t_max, oracle::DEFAULT_ORACLE_BUDGET)?;
    let mut spent: u64 = 0;
    for mask in 0u64..(1 << candidates.len() as u32) {
        let nodes: Vec<u64> = (0..candidates.len())
            .filter(|&i| mask >> i & 1 == 1)
            .map(|i| candidates[i])
            .collect();
        if nodes.is_empty() {
            continue;
        }
        let configs = feasible_configs_on(inst, &nodes, opts.assume_locally_admissible, &mut spent, opts.state_budget)?;
        let configs = match configs {
            Some(c) => c,
            None => {
                return Ok(meas.finish(format!(
                    "all-subsets scope, budget exhausted at subset mask {mask} of {}",
                    1u64 << candidates.len()
                )))
            }
        };
        for i in 0..configs.len() {
            for j in (i + 1)..configs.len() {
                spent += 1;
                if spent > opts.state_budget {
                    return Ok(meas.finish(format!(
                        "all-subsets scope, budget exhausted at subset mask {mask} of {}",
                        1u64 << candidates.len()
                    )));
                }
                meas.add_pair(&configs[i], &configs[j])?;
            }
        }
    }
    Ok(meas.finish(format!(
        "all-subsets scope over {} free vertices, all feasible pairs",
        candidates.len()
    )))
}

/// All feasible configurations on `nodes`, or None when the budget runs
/// out.
fn feasible_configs_on(
    inst: &Instance,
    nodes: &[u64],
    assume_locally_admissible: bool,
    spent: &mut u64,
    budget: u64,
) -> Result<Option<Vec<PartialConfig>>> {
    let spec = inst.spec();
    let q = spec.q();
    let mut out = Vec::new();
    let mut syms = vec![0usize; nodes.len()];
    loop {
        *spent += 1;
        if *spent > budget {
            return Ok(None);
        }
        let pins = PartialConfig::from_pairs(nodes.iter().copied().zip(syms.iter().copied()))?;
        let merged = inst.pinning().union(&pins)?;
        let ok = if assume_locally_admissible {
            spec.is_locally_feasible(&merged)
        } else {
            spec.find_feasible_extension(&merged, budget.saturating_sub(*spent).max(1))?
                .is_some()
        };
        if ok {
            out.push(pins);
        }
        let mut pos = nodes.len();
        loop {
            if pos == 0 {
                return Ok(Some(out));
            }
            pos -= 1;
            syms[pos] += 1;
            if syms[pos] < q {
                break;
            }
            syms[pos] = 0;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairSelection {
    /// All feasible pairs on the boundary set.
    AllFeasible,
    /// The two constant boundary configurations (all zeros vs all q-1),
    /// the bracketing extremes for monotone models.
    Extremes,
}

/// Measures influence from a fixed boundary set.
pub fn measure_boundary(
    inst: &Instance,
    v: u64,
    boundary: &BTreeSet<u64>,
    selection: PairSelection,
    t_max: u32,
) -> Result<SsmProfile> {
    let nodes: Vec<u64> = boundary.iter().copied().collect();
    let mut meas = SsmMeasurement::new(inst, v, t_max, oracle::DEFAULT_ORACLE_BUDGET)?;
    match selection {
        PairSelection::AllFeasible => {
            let mut spent = 0;
            let configs = feasible_configs_on(inst, &nodes, false, &mut spent, u64::MAX)?
                .expect("unbounded budget");
            for i in 0..configs.len() {
                for j in (i + 1)..configs.len() {
                    meas.add_pair(&configs[i], &configs[j])?;
                }
            }
            Ok(meas.finish(format!(
                "fixed boundary of {} nodes, all {} feasible configurations",
                nodes.len(),
                configs.len()
            )))
        }
        PairSelection::Extremes => {
            let q = inst.spec().q();
            let lo = PartialConfig::from_pairs(nodes.iter().map(|&u| (u, 0)))?;
            let hi = PartialConfig::from_pairs(nodes.iter().map(|&u| (u, q - 1)))?;
            for pins in [&lo, &hi] {
                if inst
                    .spec()
                    .find_feasible_extension(&inst.pinning().union(pins)?, 10_000_000)?
                    .is_none()
                {
                    return Err(Error::Infeasible(Some(
                        "extreme boundary configuration is infeasible".into(),
                    )));
                }
            }
            meas.add_pair(&lo, &hi)?;
            Ok(meas.finish(format!(
                "fixed boundary of {} nodes, extreme pair only",
                nodes.len()
            )))
        }
    }
}

/// Least-squares fit of delta(t) ~ c * alpha^t in log space.
#[derive(Debug, Clone, Copy)]
pub struct DecayFit {
    pub alpha: f64,
    pub c: f64,
    /// Root-mean-square residual in log space over the fitted points.
    pub rms_residual: f64,
    pub points_used: usize,
}

/// Fits the positive finite profile entries. An all-zero profile yields
/// alpha = 0 by convention; fewer than 3 usable points (but not zero) is an
/// input error.
pub fn fit_decay_rate(points: &[(u32, f64)]) -> Result<DecayFit> {
    let usable: Vec<(f64, f64)> = points
        .iter()
        .filter(|(_, d)| *d > 0.0 && d.is_finite())
        .map(|&(t, d)| (t as f64, d.ln()))
        .collect();
    if usable.is_empty() {
        return Ok(DecayFit {
            alpha: 0.0,
            c: 0.0,
            rms_residual: 0.0,
            points_used: 0,
        });
    }
    if usable.len() < 3 {
        return Err(Error::InvalidInput(format!(
            "decay fit needs at least 3 nonzero points, got {}",
            usable.len()
        )));
    }
    let m = usable.len() as f64;
    let tbar = usable.iter().map(|(t, _)| t).sum::<f64>() / m;
    let ybar = usable.iter().map(|(_, y)| y).sum::<f64>() / m;
    let sxy: f64 = usable.iter().map(|(t, y)| (t - tbar) * (y - ybar)).sum();
    let sxx: f64 = usable.iter().map(|(t, _)| (t - tbar) * (t - tbar)).sum();
    let slope = if sxx == 0.0 { 0.0 } else { sxy / sxx };
    let intercept = ybar - slope * tbar;
    let ss: f64 = usable
        .iter()
        .map(|(t, y)| (y - (intercept + slope * t)).powi(2))
        .sum();
    Ok(DecayFit {
        alpha: slope.exp(),
        c: intercept.exp(),
        rms_residual: (ss / m).sqrt(),
        points_used: usable.len(),
    })
}

/// Hardcore uniqueness threshold lambda_c(D) = (D-1)^(D-1) / (D-2)^D.
/// Infinite for D <= 2 (the denominator vanishes).
pub fn hardcore_uniqueness_threshold(delta: u32) -> f64 {
    if delta <= 2 {
        return f64::INFINITY;
    }
    let d = delta as f64;
    (d - 1.0).powf(d - 1.0) / (d - 2.0).powf(d)
}

/// The coloring ratio alpha* solving x = e^(1/x), to 1e-12 by bisection.
pub fn coloring_uniqueness_ratio() -> f64 {
    let f = |x: f64| x - (1.0 / x).exp();
    let (mut lo, mut hi) = (1.0f64, 2.0f64);
    debug_assert!(f(lo) < 0.0 && f(hi) > 0.0);
    while hi - lo > 1e-13 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// A partition-function estimate decomposed into per-node contributions
/// (the distributed-counting shape: the product over nodes reconstructs Z).
#[derive(Debug, Clone)]
pub struct CountEstimate {
    pub z: f64,
    pub per_node: BTreeMap<u64, f64>,
    pub ground: FullConfig,
}

/// Chain-rule counting: pick a feasible ground state sigma, then
/// Z = w(sigma) / prod_i marginal(sigma_{v_i} | prefix). Each node's factor
/// combines its share of w (factors anchored at their lowest scope node)
/// with its inverse marginal; with an exact base the product is Z exactly.
pub fn chain_rule_count(
    base: &dyn Inferencer,
    inst: &Instance,
    ordering: &NodeOrdering,
    err_target: f64,
) -> Result<CountEstimate> {
    let spec = inst.spec();
    let cfg = JvvConfig {
        mult_target: Some(err_target),
        ..JvvConfig::default()
    };
    let sigma = ground_state(base, inst, ordering, &cfg)?;
    let mut per_node: BTreeMap<u64, f64> = spec.graph().node_ids().iter().map(|&v| (v, 1.0)).collect();
    // Anchor every factor's value at its lowest scope node.
    for fi in 0..spec.factors().len() {
        let anchor = *spec.factors()[fi].scope().iter().min().unwrap();
        let syms: Vec<Symbol> = spec.factors()[fi]
            .scope()
            .iter()
            .map(|&u| sigma.get(spec, u).unwrap())
            .collect();
        let w = spec.factors()[fi].eval(&syms).value();
        *per_node.get_mut(&anchor).unwrap() *= w;
    }
    let mut extra = PartialConfig::empty();
    for &v in ordering.nodes() {
        let s = sigma.get(spec, v)?;
        if !inst.pinning().contains(v) {
            let conditioned = inst.condition_trusted(&extra)?;
            let m = base.infer(&conditioned, v, err_target)?;
            let p = m.prob(s);
            if p == 0.0 {
                return Err(Error::InferencerBreach(format!(
                    "zero marginal reported at node {v} for the ground state"
                )));
            }
            *per_node.get_mut(&v).unwrap() /= p;
            extra.insert(v, s);
        }
    }
    let z = per_node.values().product();
    Ok(CountEstimate {
        z,
        per_node,
        ground: sigma,
    })
}

/// Exact computations on truncated regular hardcore trees. These are the
/// standard subtree recursions, linear in the depth, living here (not in
/// the oracle) as the dedicated engine for the phase-transition study; they
/// are cross-validated against the generic oracle at small depth.
pub mod tree {
    /// Root occupation probability of the depth-`boundary_depth` truncation
    /// of the Delta-regular tree, with every node at distance
    /// `boundary_depth` from the root pinned to `boundary_value`. By
    /// conditional independence the tree below the pinned ring is
    /// irrelevant. Subtree weights are renormalized per level, so any depth
    /// is numerically safe.
    pub fn hardcore_root_marginal(
        delta: u32,
        boundary_depth: u32,
        lambda: f64,
        boundary_value: usize,
    ) -> f64 {
        assert!(delta >= 2 && boundary_depth >= 1);
        // (z0, z1) of a boundary node.
        let mut z = if boundary_value == 0 {
            (1.0f64, 0.0f64)
        } else {
            (0.0f64, lambda)
        };
        // Internal levels below the root: delta - 1 children each.
        let b = (delta - 1) as i32;
        for _ in 1..boundary_depth {
            let z1 = lambda * z.0.powi(b);
            let z0 = (z.0 + z.1).powi(b);
            let scale = z0.max(z1);
            z = (z0 / scale, z1 / scale);
        }
        // Root: delta children.
        let z1 = lambda * z.0.powi(delta as i32);
        let z0 = (z.0 + z.1).powi(delta as i32);
        z1 / (z0 + z1)
    }

    /// Mixing profile of the root against extreme ring boundaries at depths
    /// 1..=depth. For hardcore trees the subtree recursion is monotone
    /// decreasing in each child ratio, so the all-empty and all-occupied
    /// rings bracket every boundary configuration and their gap is the
    /// exact max-over-pairs influence at that depth.
    pub fn hardcore_ring_influence(delta: u32, depth: u32, lambda: f64) -> Vec<(u32, f64, f64)> {
        (1..=depth)
            .map(|d| {
                let p0 = hardcore_root_marginal(delta, d, lambda, 0);
                let p1 = hardcore_root_marginal(delta, d, lambda, 1);
                let tv = (p0 - p1).abs();
                let mult = {
                    let a = mult_term(p0, p1);
                    let b = mult_term(1.0 - p0, 1.0 - p1);
                    a.max(b)
                };
                (d, tv, mult)
            })
            .collect()
    }

    fn mult_term(a: f64, b: f64) -> f64 {
        match (a == 0.0, b == 0.0) {
            (true, true) => 0.0,
            (false, false) => (a.ln() - b.ln()).abs(),
            _ => f64::INFINITY,
        }
    }

    /// Ring influences folded into the standard suffix-max profile shape.
    pub fn hardcore_tree_profile(delta: u32, depth: u32, lambda: f64) -> super::SsmProfile {
        let rings = hardcore_ring_influence(delta, depth, lambda);
        let mut tv_acc = 0.0f64;
        let mut mult_acc = 0.0f64;
        let mut pts = Vec::new();
        for &(t, tv, mult) in rings.iter().rev() {
            tv_acc = tv_acc.max(tv);
            mult_acc = mult_acc.max(mult);
            pts.push(super::SsmPoint {
                t,
                delta_tv: tv_acc,
                delta_mult: mult_acc,
                pairs: (depth - t + 1) as usize,
            });
        }
        pts.reverse();
        super::SsmProfile {
            points: pts,
            scope_note: format!(
                "extreme ring boundaries at depths 1..={depth} on the {delta}-regular tree \
                 (bracketing maxima for hardcore)"
            ),
            pair_count: depth as usize,
        }
    }
}

/// Reporting floor for the non-decay flag: a threshold, not a proof.
pub const NON_DECAY_FLOOR: f64 = 0.01;
/// A profile that lost less than half its value over the two deepest steps
/// counts as non-shrinking.
pub const NON_DECAY_SHRINK_RATIO: f64 = 0.5;

#[derive(Debug, Clone)]
pub struct PhaseRow {
    pub lambda: f64,
    pub profile: SsmProfile,
    pub fit: Option<DecayFit>,
    /// delta_tv at the two deepest measured distances.
    pub deepest: (f64, f64),
    /// Set when the influence stays above the floor at the two deepest
    /// distances and is not shrinking. Never set exactly at the critical
    /// activity (boundary case, no claim).
    pub non_decay: bool,
    pub at_criticality: bool,
}

/// Measures root-marginal sensitivity to ring boundaries on the
/// Delta-regular tree across a list of activities straddling the
/// uniqueness threshold.
pub fn phase_transition_report(delta: u32, lambdas: &[f64], depth: u32) -> Result<Vec<PhaseRow>> {
    if depth < 3 {
        return Err(Error::InvalidInput("phase report needs depth >= 3".into()));
    }
    let lambda_c = hardcore_uniqueness_threshold(delta);
    let mut rows = Vec::new();
    for &lambda in lambdas {
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(Error::InvalidInput(format!("activity {lambda} must be >= 0")));
        }
        let profile = tree::hardcore_tree_profile(delta, depth, lambda);
        let fit = fit_decay_rate(&profile.tv_points()).ok();
        let d_last = profile.delta_tv(depth);
        let d_prev = profile.delta_tv(depth - 1);
        let d_back2 = profile.delta_tv(depth - 2);
        let at_criticality =
            lambda_c.is_finite() && (lambda - lambda_c).abs() <= 1e-9 * lambda_c.max(1.0);
        let floor_hit = d_last >= NON_DECAY_FLOOR && d_prev >= NON_DECAY_FLOOR;
        let shrinking = d_last <= NON_DECAY_SHRINK_RATIO * d_back2;
        rows.push(PhaseRow {
            lambda,
            profile,
            fit,
            deepest: (d_prev, d_last),
            non_decay: floor_hit && !shrinking && !at_criticality,
            at_criticality,
        });
    }
    Ok(rows)
}
