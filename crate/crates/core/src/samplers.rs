//! Samplers: the sequential inference-driven sampler and the three-pass
//! local rejection sampler with locally certifiable failures, plus their
//! compilation into the LOCAL model.
//!
//! The rejection sampler runs three passes over one node ordering: pass one
//! builds a feasible ground state from reported marginals, pass two draws a
//! proposal by the chain rule, pass three interpolates bridge
//! configurations from the ground state to the proposal and computes each
//! node's acceptance probability
//!
//!   q_v = (density(sigma_prev) / density(sigma_cur))
//!       * (w(sigma_cur) / w(sigma_prev)) * exp(-3/n^2),
//!
//! whose telescoping product depends only on the ground state and the
//! proposal. Conditioned on every node accepting, the proposal follows the
//! target distribution exactly.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::gibbs::{FullConfig, Instance, PartialConfig, Symbol};
use crate::graph::NodeOrdering;
use crate::inference::{ConfigSampler, Inferencer};
use crate::oracle;
use crate::runtime::{
    compile_schedule, draw_bernoulli, execute_schedule, CompiledSchedule, DecompositionParams,
    DrawLabel, LocalityReport, NodeResult, SampleOutcome, SlocalAlgorithm, SlocalPass,
    StepContext, Tape, TransformReport,
};

/// Draws a full configuration vertex by vertex from the base inferencer's
/// marginals, each conditioned on the pins so far; pinned nodes copy the
/// instance pinning. With a base within TV error `delta / n` per call the
/// output distribution is within TV `delta` of the target; with an exact
/// base it is the target exactly.
pub fn sequential_sample(
    base: &dyn Inferencer,
    inst: &Instance,
    delta: f64,
    ordering: &NodeOrdering,
    tape: &mut dyn Tape,
) -> Result<FullConfig> {
    let spec = inst.spec();
    let per_call = delta / spec.n().max(1) as f64;
    let mut extra = PartialConfig::empty();
    for &v in ordering.nodes() {
        if inst.pinning().contains(v) {
            continue;
        }
        let conditioned = inst.condition_unchecked(&extra)?;
        let m = match base.infer(&conditioned, v, per_call) {
            Ok(m) => m,
            // An approximate base may have sampled the prefix out of the
            // feasible set; past that point its guarantee is vacuous and any
            // fixed convention works. Uniform keeps the run total.
            Err(Error::Infeasible(_)) => oracle::MarginalDist::new(
                vec![1.0 / spec.q() as f64; spec.q()],
                oracle::Guarantee::Tv(1.0),
            )?,
            Err(e) => return Err(e),
        };
        if m.support().next().is_none() {
            return Err(Error::InferencerBreach(format!(
                "base reported an all-zero marginal at node {v}"
            )));
        }
        let s = tape.draw_index(DrawLabel::new(v, 1, "sequential"), m.probs());
        extra.insert(v, s);
    }
    let full = inst.pinning().union(&extra)?;
    let values = spec
        .graph()
        .node_ids()
        .iter()
        .map(|&v| full.get(v).ok_or(Error::IncompleteConfig(v)))
        .collect::<Result<Vec<_>>>()?;
    FullConfig::new(spec, values)
}

/// The sequential sampler as a tape-driven sampler with declared error.
pub struct SequentialSampler<'a> {
    pub base: &'a dyn Inferencer,
    pub inst: &'a Instance,
    pub delta: f64,
    pub ordering: NodeOrdering,
}

impl ConfigSampler for SequentialSampler<'_> {
    fn sample(&self, tape: &mut dyn Tape) -> Result<SampleOutcome> {
        let cfg = sequential_sample(self.base, self.inst, self.delta, &self.ordering, tape)?;
        Ok(outcome_from_config(self.inst, &cfg, |_| false))
    }

    fn declared_tv_error(&self) -> f64 {
        self.delta
    }
}

fn outcome_from_config(
    inst: &Instance,
    cfg: &FullConfig,
    failed: impl Fn(u64) -> bool,
) -> SampleOutcome {
    inst.spec()
        .graph()
        .node_ids()
        .iter()
        .map(|&v| {
            (
                v,
                NodeResult {
                    value: Some(cfg.get(inst.spec(), v).unwrap()),
                    failed: failed(v),
                },
            )
        })
        .collect()
}

/// Draws full configurations directly from the exact target distribution;
/// the reference sampler for statistical verification.
pub struct OracleSampler {
    inst: Instance,
    support: Vec<FullConfig>,
    probs: Vec<f64>,
}

impl OracleSampler {
    pub fn new(inst: &Instance, budget: u64) -> Result<Self> {
        let joint = oracle::joint_distribution(inst, budget)?;
        let (support, probs) = joint.into_iter().unzip();
        Ok(OracleSampler {
            inst: inst.clone(),
            support,
            probs,
        })
    }
}

impl ConfigSampler for OracleSampler {
    fn sample(&self, tape: &mut dyn Tape) -> Result<SampleOutcome> {
        let k = tape.draw_index(DrawLabel::new(0, 0, "oracle-joint"), &self.probs);
        Ok(outcome_from_config(&self.inst, &self.support[k], |_| false))
    }

    fn declared_tv_error(&self) -> f64 {
        0.0
    }
}

/// Rejection-sampler parameters.
#[derive(Debug, Clone, Copy, Default)]
pub struct JvvConfig {
    /// Base locality radius t for bridges and accounting; defaults to the
    /// base's declared locality at the multiplicative target.
    pub t: Option<u32>,
    /// Error target passed to the base on every call; defaults to 1/n^3.
    pub mult_target: Option<f64>,
    /// Audit flag preserving the alternative reading of the failure draw
    /// (fail with probability q instead of accepting with probability q).
    pub prose_polarity: bool,
}

impl JvvConfig {
    pub fn resolve(&self, base: &dyn Inferencer, inst: &Instance) -> (u32, f64) {
        let n = inst.spec().n() as f64;
        let target = self.mult_target.unwrap_or(1.0 / (n * n * n));
        let t = self.t.unwrap_or_else(|| base.locality(inst, target));
        (t, target)
    }
}

/// Trace of one rejection-sampler run: the ground state, the proposal and
/// its chain-rule density, the bridge path, per-node acceptance
/// probabilities and failure flags (in ordering order), plus any recorded
/// contract-breach diagnostics.
#[derive(Debug, Clone)]
pub struct JvvTrace {
    pub ground: FullConfig,
    pub proposal: FullConfig,
    pub proposal_density: f64,
    pub bridges: Vec<FullConfig>,
    pub accept_probs: Vec<f64>,
    pub flags: Vec<bool>,
    pub breaches: Vec<String>,
}

/// Pass one: extends the pinning node by node, always picking the lowest
/// symbol of positive reported marginal. The result is feasible whenever
/// the base honors a multiplicative guarantee.
pub fn ground_state(
    base: &dyn Inferencer,
    inst: &Instance,
    ordering: &NodeOrdering,
    cfg: &JvvConfig,
) -> Result<FullConfig> {
    let (_, target) = cfg.resolve(base, inst);
    let spec = inst.spec();
    let mut extra = PartialConfig::empty();
    for &v in ordering.nodes() {
        if inst.pinning().contains(v) {
            continue;
        }
        let conditioned = inst.condition_trusted(&extra)?;
        let m = base.infer(&conditioned, v, target)?;
        let s = m.support().next().ok_or_else(|| {
            Error::InferencerBreach(format!("no positive symbol reported at node {v}"))
        })?;
        extra.insert(v, s);
    }
    let full = inst.pinning().union(&extra)?;
    let values = spec
        .graph()
        .node_ids()
        .iter()
        .map(|&v| full.get(v).unwrap())
        .collect();
    FullConfig::new(spec, values)
}

/// Pass two: chain-rule proposal. Returns the configuration together with
/// its density, the product of the reported marginals used to draw it.
pub fn propose(
    base: &dyn Inferencer,
    inst: &Instance,
    ordering: &NodeOrdering,
    cfg: &JvvConfig,
    tape: &mut dyn Tape,
) -> Result<(FullConfig, f64)> {
    let (_, target) = cfg.resolve(base, inst);
    let spec = inst.spec();
    let mut extra = PartialConfig::empty();
    let mut density = 1.0;
    for &v in ordering.nodes() {
        if inst.pinning().contains(v) {
            continue;
        }
        let conditioned = inst.condition_trusted(&extra)?;
        let m = base.infer(&conditioned, v, target)?;
        let s = tape.draw_index(DrawLabel::new(v, 2, "proposal"), m.probs());
        density *= m.prob(s);
        extra.insert(v, s);
    }
    let full = inst.pinning().union(&extra)?;
    let values = spec
        .graph()
        .node_ids()
        .iter()
        .map(|&v| full.get(v).unwrap())
        .collect();
    Ok((FullConfig::new(spec, values)?, density))
}

/// Chain-rule density of an arbitrary full configuration under the base's
/// reported marginals, in ordering order. Exactly zero when some step
/// reports zero.
pub fn chain_density(
    base: &dyn Inferencer,
    inst: &Instance,
    ordering: &NodeOrdering,
    cfg: &JvvConfig,
    sigma: &FullConfig,
) -> Result<f64> {
    let (_, target) = cfg.resolve(base, inst);
    let spec = inst.spec();
    let mut extra = PartialConfig::empty();
    let mut density = 1.0;
    for &v in ordering.nodes() {
        let s = sigma.get(spec, v)?;
        if inst.pinning().contains(v) {
            continue;
        }
        let conditioned = inst.condition_unchecked(&extra)?;
        let m = match base.infer(&conditioned, v, target) {
            Ok(m) => m,
            Err(Error::Infeasible(_)) => return Ok(0.0),
            Err(e) => return Err(e),
        };
        density *= m.prob(s);
        if density == 0.0 {
            return Ok(0.0);
        }
        extra.insert(v, s);
    }
    Ok(density)
}

/// Shared bridge search: finds replacement values on `ball_t` such that the
/// updated configuration satisfies `forced`, keeps all factors touching the
/// ball positive, and differs from `sigma_prev` only inside the ball.
///
/// `sigma_prev` must cover every node within distance locality() of the
/// ball (it is consulted for factor evaluation and for nodes outside the
/// ball). The zero-change candidate is tried first; after that candidates
/// are enumerated in mixed-radix order over the ball's unforced nodes
/// (ascending id, ascending symbol), first valid wins, so the result is
/// deterministic.
fn bridge_core(
    inst: &Instance,
    sigma_prev: &BTreeMap<u64, Symbol>,
    ball_t: &BTreeSet<u64>,
    forced: &BTreeMap<u64, Symbol>,
    v_i: u64,
    y_vi: Symbol,
) -> Result<BTreeMap<u64, Symbol>> {
    let spec = inst.spec();
    debug_assert!(forced.get(&v_i) == Some(&y_vi));
    // Zero-change bridge: valid whenever the previous configuration already
    // agrees with the proposal at v_i.
    if sigma_prev.get(&v_i) == Some(&y_vi)
        && forced.iter().all(|(u, s)| sigma_prev.get(u) == Some(s))
    {
        return Ok(ball_t
            .iter()
            .map(|&u| (u, sigma_prev[&u]))
            .collect());
    }

    // Factors whose value can change: those touching the ball.
    let ball_idx: BTreeSet<usize> = ball_t
        .iter()
        .map(|&u| spec.graph().index_of(u))
        .collect::<Result<_>>()?;
    let mut touching = Vec::new();
    for fi in 0..spec.factors().len() {
        if spec.scope_idx(fi).iter().any(|i| ball_idx.contains(i)) {
            touching.push(fi);
        }
    }

    let mut dense: Vec<Option<Symbol>> = vec![None; spec.graph().n()];
    for (&u, &s) in sigma_prev {
        dense[spec.graph().index_of(u)?] = Some(s);
    }
    for (&u, &s) in forced {
        dense[spec.graph().index_of(u)?] = Some(s);
    }
    let open: Vec<usize> = ball_t
        .iter()
        .filter(|u| !forced.contains_key(u))
        .map(|&u| spec.graph().index_of(u))
        .collect::<Result<_>>()?;

    // Trigger factors at their last open node; factors with no open node
    // are fixed by forced values and must already be positive.
    let mut triggers: Vec<Vec<usize>> = vec![Vec::new(); open.len()];
    for &fi in &touching {
        let mut last: Option<usize> = None;
        for &si in spec.scope_idx(fi) {
            if let Some(p) = open.iter().position(|&oi| oi == si) {
                last = Some(last.map_or(p, |l: usize| l.max(p)));
            }
        }
        match last {
            Some(p) => triggers[p].push(fi),
            None => {
                let w = spec.try_eval_factor_on(fi, &dense).ok_or_else(|| {
                    Error::ContractViolation(
                        "bridge evaluation reads outside the provided configuration".into(),
                    )
                })?;
                if w.is_zero() {
                    return Err(Error::ContractViolation(format!(
                        "no bridge exists at node {v_i}: a forced factor is violated (base contract breach)"
                    )));
                }
            }
        }
    }

    for i in &open {
        dense[*i] = None;
    }
    fn rec(
        spec: &crate::gibbs::GibbsSpec,
        dense: &mut Vec<Option<Symbol>>,
        open: &[usize],
        triggers: &[Vec<usize>],
        depth: usize,
    ) -> bool {
        if depth == open.len() {
            return true;
        }
        for s in 0..spec.q() {
            dense[open[depth]] = Some(s);
            let ok = triggers[depth].iter().all(|&fi| {
                spec.try_eval_factor_on(fi, dense)
                    .map_or(true, |w| !w.is_zero())
            });
            if ok && rec(spec, dense, open, triggers, depth + 1) {
                return true;
            }
        }
        dense[open[depth]] = None;
        false
    }
    if open.is_empty() || rec(spec, &mut dense, &open, &triggers, 0) {
        Ok(ball_t
            .iter()
            .map(|&u| (u, dense[spec.graph().index_of(u).unwrap()].unwrap()))
            .collect())
    } else {
        Err(Error::ContractViolation(format!(
            "no bridge exists at node {v_i} (base contract breach)"
        )))
    }
}

/// Pass-three bridge step: given `sigma_prev` satisfying the invariants for
/// index i-1, produces sigma_i agreeing with the proposal on the first i
/// nodes, feasible, and differing from sigma_prev only inside ball(v_i, t).
pub fn bridge_step(
    inst: &Instance,
    ordering: &NodeOrdering,
    sigma_prev: &FullConfig,
    proposal: &FullConfig,
    i: usize,
    t: u32,
) -> Result<FullConfig> {
    let spec = inst.spec();
    let v_i = ordering.nodes()[i - 1];
    let ball_t = spec.graph().ball(v_i, t)?;
    let ranks = ordering.ranks();
    let mut forced: BTreeMap<u64, Symbol> = BTreeMap::new();
    for &u in &ball_t {
        if let Some(s) = inst.pinning().get(u) {
            forced.insert(u, s);
        } else if ranks[&u] < i {
            forced.insert(u, proposal.get(spec, u)?);
        }
    }
    let sigma_prev_map = sigma_prev.to_map(spec);
    let new_ball = bridge_core(inst, &sigma_prev_map, &ball_t, &forced, v_i, proposal.get(spec, v_i)?)?;
    let mut out = sigma_prev.clone();
    for (&u, &s) in &new_ball {
        out.set_idx(spec.graph().index_of(u)?, s);
    }
    debug_assert_jvv_invariants(inst, ordering, sigma_prev, &out, proposal, i, t);
    Ok(out)
}

#[allow(unused_variables)]
fn debug_assert_jvv_invariants(
    inst: &Instance,
    ordering: &NodeOrdering,
    sigma_prev: &FullConfig,
    sigma_cur: &FullConfig,
    proposal: &FullConfig,
    i: usize,
    t: u32,
) {
    #[cfg(debug_assertions)]
    {
        let spec = inst.spec();
        assert!(!spec.weight(sigma_cur).is_zero(), "bridge lost feasibility");
        for (j, &u) in ordering.nodes().iter().enumerate() {
            if j < i {
                assert_eq!(
                    sigma_cur.get(spec, u).unwrap(),
                    proposal.get(spec, u).unwrap(),
                    "bridge disagrees with the proposal at processed node {u}"
                );
            }
        }
        let v_i = ordering.nodes()[i - 1];
        let ball = spec.graph().ball(v_i, t).unwrap();
        for &u in spec.graph().node_ids() {
            if !ball.contains(&u) {
                assert_eq!(
                    sigma_cur.get(spec, u).unwrap(),
                    sigma_prev.get(spec, u).unwrap(),
                    "bridge changed node {u} outside the ball"
                );
            }
        }
    }
}

/// Acceptance probability at step i, computed locally: the density ratio
/// telescopes over nodes within distance 2t of v_i (the base cannot
/// distinguish the two configurations further out) and the weight ratio
/// over factors touching ball(v_i, t). Returns the probability together
/// with any bound-breach diagnostic; the value is clamped into [0, 1] for
/// the subsequent draw only when it breaches.
pub fn accept_prob(
    base: &dyn Inferencer,
    inst: &Instance,
    ordering: &NodeOrdering,
    sigma_prev: &FullConfig,
    sigma_cur: &FullConfig,
    i: usize,
    cfg: &JvvConfig,
) -> Result<(f64, Option<String>)> {
    let spec = inst.spec();
    let v_i = ordering.nodes()[i - 1];
    let (t, _) = cfg.resolve(base, inst);
    let ball2t = spec.graph().ball(v_i, 2 * t)?;
    let ranks = ordering.ranks();
    let walk: Vec<u64> = {
        let mut w: Vec<u64> = spec.graph().node_ids().to_vec();
        w.sort_by_key(|v| ranks[v]);
        w
    };
    accept_prob_core(
        base,
        inst,
        cfg,
        &walk,
        v_i,
        &sigma_prev.to_map(spec),
        &sigma_cur.to_map(spec),
        &ball2t,
        t,
    )
}

/// Core of the acceptance computation, shared between the sequential run
/// (full maps) and the compiled run (view-restricted maps; identical result
/// for a t-local base).
#[allow(clippy::too_many_arguments)]
fn accept_prob_core(
    base: &dyn Inferencer,
    inst: &Instance,
    cfg: &JvvConfig,
    walk: &[u64],
    v_i: u64,
    sigma_prev: &BTreeMap<u64, Symbol>,
    sigma_cur: &BTreeMap<u64, Symbol>,
    ball2t: &BTreeSet<u64>,
    t: u32,
) -> Result<(f64, Option<String>)> {
    let spec = inst.spec();
    let n = spec.n() as f64;
    let (_, target) = cfg.resolve(base, inst);

    let mut density_ratio = 1.0f64;
    let mut extra_prev = PartialConfig::empty();
    let mut extra_cur = PartialConfig::empty();
    for &v_j in walk {
        let pinned = inst.pinning().contains(v_j);
        if !pinned && ball2t.contains(&v_j) {
            let s_prev = sigma_prev[&v_j];
            let s_cur = sigma_cur[&v_j];
            if extra_prev == extra_cur && s_prev == s_cur {
                // Identical instances and symbols: the term is exactly 1.
            } else {
                let m_prev = base.infer(&inst.condition_unchecked(&extra_prev)?, v_j, target)?;
                let m_cur = base.infer(&inst.condition_unchecked(&extra_cur)?, v_j, target)?;
                let denom = m_cur.prob(s_cur);
                if denom == 0.0 {
                    return Err(Error::InferencerBreach(format!(
                        "zero reported density at node {v_j} for a feasible bridge configuration"
                    )));
                }
                density_ratio *= m_prev.prob(s_prev) / denom;
            }
        }
        if !pinned {
            extra_prev.insert(v_j, sigma_prev[&v_j]);
            extra_cur.insert(v_j, sigma_cur[&v_j]);
        }
    }

    // Weight ratio over factors touching ball(v_i, t); all other factors
    // see identical assignments.
    let ball_t = spec.graph().ball(v_i, t)?;
    let ball_idx: BTreeSet<usize> = ball_t
        .iter()
        .map(|&u| spec.graph().index_of(u))
        .collect::<Result<_>>()?;
    let mut weight_ratio = 1.0f64;
    let dense_of = |m: &BTreeMap<u64, Symbol>| -> Vec<Option<Symbol>> {
        let mut d = vec![None; spec.graph().n()];
        for (&u, &s) in m {
            d[spec.graph().index_of(u).unwrap()] = Some(s);
        }
        d
    };
    let dense_prev = dense_of(sigma_prev);
    let dense_cur = dense_of(sigma_cur);
    for fi in 0..spec.factors().len() {
        if spec.scope_idx(fi).iter().any(|i| ball_idx.contains(i)) {
            let wp = spec.try_eval_factor_on(fi, &dense_prev).ok_or_else(|| {
                Error::ContractViolation("acceptance reads outside the provided configuration".into())
            })?;
            let wc = spec.try_eval_factor_on(fi, &dense_cur).ok_or_else(|| {
                Error::ContractViolation("acceptance reads outside the provided configuration".into())
            })?;
            if wp.is_zero() {
                return Err(Error::ContractViolation(
                    "previous bridge configuration is infeasible".into(),
                ));
            }
            weight_ratio *= wc.value() / wp.value();
        }
    }

    let q = density_ratio * weight_ratio * (-3.0 / (n * n)).exp();
    let lo = (-5.0 / (n * n)).exp();
    let breach = if !(q >= lo * (1.0 - 1e-9) && q <= 1.0 + 1e-9) {
        Some(format!(
            "acceptance probability {q} outside [e^(-5/n^2), 1] = [{lo}, 1] at node {v_i}"
        ))
    } else {
        None
    };
    Ok((q, breach))
}

/// Acceptance probability recomputed globally, from full chain-rule
/// densities and full weights; the telescoping oracle the local computation
/// is tested against.
pub fn accept_prob_global(
    base: &dyn Inferencer,
    inst: &Instance,
    ordering: &NodeOrdering,
    sigma_prev: &FullConfig,
    sigma_cur: &FullConfig,
    cfg: &JvvConfig,
) -> Result<f64> {
    let spec = inst.spec();
    let n = spec.n() as f64;
    let d_prev = chain_density(base, inst, ordering, cfg, sigma_prev)?;
    let d_cur = chain_density(base, inst, ordering, cfg, sigma_cur)?;
    if d_cur == 0.0 {
        return Err(Error::InferencerBreach("zero chain density for a feasible configuration".into()));
    }
    let w_prev = spec.weight(sigma_prev).value();
    let w_cur = spec.weight(sigma_cur).value();
    Ok((d_prev / d_cur) * (w_cur / w_prev) * (-3.0 / (n * n)).exp())
}

/// Runs the three passes sequentially on one ordering. Node v_i accepts
/// with probability q_i (failure flag raised otherwise); conditioned on all
/// flags clear, the proposal follows the target distribution exactly.
pub fn jvv_sample(
    base: &dyn Inferencer,
    inst: &Instance,
    ordering: &NodeOrdering,
    cfg: &JvvConfig,
    tape: &mut dyn Tape,
) -> Result<(SampleOutcome, JvvTrace)> {
    let (t, _) = cfg.resolve(base, inst);
    let ground = ground_state(base, inst, ordering, cfg)?;
    let (proposal, density) = propose(base, inst, ordering, cfg, tape)?;

    let mut bridges = vec![ground.clone()];
    let mut accept_probs = Vec::with_capacity(ordering.len());
    let mut flags = Vec::with_capacity(ordering.len());
    let mut breaches = Vec::new();
    let mut sigma_prev = ground.clone();
    for i in 1..=ordering.len() {
        let v_i = ordering.nodes()[i - 1];
        let sigma_cur = bridge_step(inst, ordering, &sigma_prev, &proposal, i, t)?;
        let (q, breach) = accept_prob(base, inst, ordering, &sigma_prev, &sigma_cur, i, cfg)?;
        if let Some(b) = breach {
            breaches.push(b);
        }
        let q_draw = q.clamp(0.0, 1.0);
        let failed = if cfg.prose_polarity {
            draw_bernoulli(tape, DrawLabel::new(v_i, 3, "accept"), q_draw)
        } else {
            draw_bernoulli(tape, DrawLabel::new(v_i, 3, "accept"), 1.0 - q_draw)
        };
        accept_probs.push(q);
        flags.push(failed);
        bridges.push(sigma_cur.clone());
        sigma_prev = sigma_cur;
    }
    debug_assert_eq!(sigma_prev, proposal, "final bridge must equal the proposal");

    let ranks = ordering.ranks();
    let outcome = outcome_from_config(inst, &proposal, |v| flags[ranks[&v]]);
    Ok((
        outcome,
        JvvTrace {
            ground,
            proposal,
            proposal_density: density,
            bridges,
            accept_probs,
            flags,
            breaches,
        },
    ))
}

/// The sequential rejection sampler as a tape-driven sampler.
pub struct JvvSampler<'a> {
    pub base: &'a dyn Inferencer,
    pub inst: &'a Instance,
    pub ordering: NodeOrdering,
    pub cfg: JvvConfig,
}

impl ConfigSampler for JvvSampler<'_> {
    fn sample(&self, tape: &mut dyn Tape) -> Result<SampleOutcome> {
        Ok(jvv_sample(self.base, self.inst, &self.ordering, &self.cfg, tape)?.0)
    }

    fn declared_tv_error(&self) -> f64 {
        0.0
    }
}

/// Per-node state of the three-pass SLOCAL rejection sampler.
#[derive(Debug, Clone, Default)]
pub struct JvvNodeState {
    ground: Option<Symbol>,
    proposal: Option<Symbol>,
    /// Value in the current bridge configuration.
    current: Option<Symbol>,
    q: Option<f64>,
    failed: Option<bool>,
}

/// The three-pass rejection sampler expressed natively in the SLOCAL
/// contract: pass radii (t, t, 3t + l), the third pass writing bridge
/// updates within radius t.
pub struct JvvSlocal<'a> {
    pub base: &'a dyn Inferencer,
    pub inst: &'a Instance,
    pub cfg: JvvConfig,
    t: u32,
    breaches: std::sync::Mutex<Vec<String>>,
}

impl<'a> JvvSlocal<'a> {
    pub fn new(base: &'a dyn Inferencer, inst: &'a Instance, cfg: JvvConfig) -> Self {
        let (t, _) = cfg.resolve(base, inst);
        JvvSlocal {
            base,
            inst,
            cfg,
            t,
            breaches: std::sync::Mutex::new(Vec::new()),
        }
    }

    pub fn t(&self) -> u32 {
        self.t
    }

    pub fn take_breaches(&self) -> Vec<String> {
        std::mem::take(&mut self.breaches.lock().unwrap())
    }

    /// Pins visible in the view that were decided in earlier steps of the
    /// given pass, read off the per-node states.
    fn visible_prefix(
        &self,
        ctx: &StepContext<'_, JvvNodeState>,
        my_rank: usize,
        value: impl Fn(&JvvNodeState) -> Option<Symbol>,
    ) -> Result<PartialConfig> {
        let mut extra = PartialConfig::empty();
        for u in ctx.readable_nodes() {
            if self.inst.pinning().contains(u) || ctx.rank_of(u)? >= my_rank {
                continue;
            }
            if let Some(s) = value(ctx.state(u)?) {
                extra.insert(u, s);
            }
        }
        Ok(extra)
    }
}

impl SlocalAlgorithm for JvvSlocal<'_> {
    type State = JvvNodeState;

    fn passes(&self) -> Vec<SlocalPass> {
        let ell = self.inst.spec().locality();
        vec![
            SlocalPass::read_only(self.t),
            SlocalPass::read_only(self.t),
            SlocalPass {
                read_radius: 3 * self.t + ell,
                write_radius: self.t,
            },
        ]
    }

    fn init_state(&self, _node: u64) -> JvvNodeState {
        JvvNodeState::default()
    }

    fn process(&self, ctx: &mut StepContext<'_, JvvNodeState>) -> Result<()> {
        let v = ctx.center();
        let spec = self.inst.spec();
        let (_, target) = self.cfg.resolve(self.base, self.inst);
        let my_rank = ctx.rank_of(v)?;
        match ctx.pass() {
            0 => {
                let s = match self.inst.pinning().get(v) {
                    Some(s) => s,
                    None => {
                        let extra = self.visible_prefix(ctx, my_rank, |st| st.ground)?;
                        let conditioned = self.inst.condition_trusted(&extra)?;
                        let m = self.base.infer(&conditioned, v, target)?;
                        let lowest = m.support().next();
                        lowest.ok_or_else(|| {
                            Error::InferencerBreach(format!(
                                "no positive symbol reported at node {v}"
                            ))
                        })?
                    }
                };
                ctx.state_mut(v)?.ground = Some(s);
                Ok(())
            }
            1 => {
                let s = match self.inst.pinning().get(v) {
                    Some(s) => s,
                    None => {
                        let extra = self.visible_prefix(ctx, my_rank, |st| st.proposal)?;
                        let conditioned = self.inst.condition_trusted(&extra)?;
                        let m = self.base.infer(&conditioned, v, target)?;
                        ctx.draw("proposal", m.probs())
                    }
                };
                let st = ctx.state_mut(v)?;
                st.proposal = Some(s);
                st.current = st.ground;
                Ok(())
            }
            2 => {
                let i = my_rank + 1;
                let t = self.t;
                // View-restricted current and proposal configurations.
                let mut sigma_prev: BTreeMap<u64, Symbol> = BTreeMap::new();
                let mut proposal: BTreeMap<u64, Symbol> = BTreeMap::new();
                let mut ranks: BTreeMap<u64, usize> = BTreeMap::new();
                for u in ctx.readable_nodes() {
                    let st = ctx.state(u)?;
                    sigma_prev.insert(u, st.current.ok_or_else(|| {
                        Error::ContractViolation(format!("node {u} has no bridge value yet"))
                    })?);
                    proposal.insert(u, st.proposal.unwrap());
                    ranks.insert(u, ctx.rank_of(u)?);
                }

                let ball_t = spec.graph().ball(v, t)?;
                let mut forced: BTreeMap<u64, Symbol> = BTreeMap::new();
                for &u in &ball_t {
                    if let Some(s) = self.inst.pinning().get(u) {
                        forced.insert(u, s);
                    } else if ranks[&u] < i {
                        forced.insert(u, proposal[&u]);
                    }
                }
                let y_v = proposal[&v];
                let new_ball = bridge_core(self.inst, &sigma_prev, &ball_t, &forced, v, y_v)?;
                let mut sigma_cur = sigma_prev.clone();
                for (&u, &s) in &new_ball {
                    sigma_cur.insert(u, s);
                }

                let mut walk: Vec<u64> = sigma_prev.keys().copied().collect();
                walk.sort_by_key(|u| ranks[u]);
                let ball2t: BTreeSet<u64> = spec.graph().ball(v, 2 * t)?;
                let (q, breach) = accept_prob_core(
                    self.base,
                    self.inst,
                    &self.cfg,
                    &walk,
                    v,
                    &sigma_prev,
                    &sigma_cur,
                    &ball2t,
                    t,
                )?;
                if let Some(b) = breach {
                    self.breaches.lock().unwrap().push(b);
                }
                let q_draw = q.clamp(0.0, 1.0);
                let failed = if self.cfg.prose_polarity {
                    ctx.draw("accept", &[1.0 - q_draw, q_draw]) == 1
                } else {
                    ctx.draw("accept", &[q_draw, 1.0 - q_draw]) == 1
                };
                // Publish the new bridge values within the write radius.
                for (&u, &s) in &new_ball {
                    ctx.state_mut(u)?.current = Some(s);
                }
                let st = ctx.state_mut(v)?;
                st.q = Some(q);
                st.failed = Some(failed);
                Ok(())
            }
            p => Err(Error::ContractViolation(format!("unexpected pass {p}"))),
        }
    }

    fn finalize(&self, _node: u64, state: &JvvNodeState) -> NodeResult {
        NodeResult {
            value: state.proposal,
            failed: state.failed.unwrap_or(false),
        }
    }
}

/// The compiled rejection sampler: the three-pass SLOCAL algorithm run
/// through the network-decomposition transform under a fixed schedule.
/// Sampling with a fresh tape replays the same schedule, which keeps the
/// algorithm's randomness enumerable.
pub struct JvvLocalSampler<'a> {
    pub alg: JvvSlocal<'a>,
    pub schedule: CompiledSchedule,
}

impl<'a> JvvLocalSampler<'a> {
    pub fn new(
        base: &'a dyn Inferencer,
        inst: &'a Instance,
        cfg: JvvConfig,
        seed: u64,
        params: &DecompositionParams,
    ) -> Result<Self> {
        let alg = JvvSlocal::new(base, inst, cfg);
        let r = crate::runtime::effective_locality(&alg.passes());
        let schedule = compile_schedule(inst.spec().graph(), r, seed, params)?;
        Ok(JvvLocalSampler { alg, schedule })
    }

    pub fn run(&self, tape: &mut dyn Tape) -> Result<(SampleOutcome, LocalityReport)> {
        execute_schedule(self.alg.inst.spec().graph(), &self.alg, &self.schedule, tape)
    }
}

impl ConfigSampler for JvvLocalSampler<'_> {
    fn sample(&self, tape: &mut dyn Tape) -> Result<SampleOutcome> {
        Ok(self.run(tape)?.0)
    }

    fn declared_tv_error(&self) -> f64 {
        0.0
    }
}

/// One-shot compiled run: decomposition, induced ordering, three passes.
/// Failure flags combine rejection (F') with decomposition failures (F'');
/// the two are independent, so conditioning on no failure preserves the
/// target distribution.
pub fn jvv_local(
    base: &dyn Inferencer,
    inst: &Instance,
    cfg: JvvConfig,
    seed: u64,
    params: &DecompositionParams,
) -> Result<(SampleOutcome, TransformReport)> {
    let alg = JvvSlocal::new(base, inst, cfg);
    crate::runtime::slocal_to_local(inst.spec().graph(), &alg, seed, params)
}
