//! Approximate inference: the abstract `Inferencer` contract, oracle-backed
//! reference inferencers (exact and adversarially noisy), ball inference
//! for locally admissible specs, the boosting procedure that turns total
//! variation guarantees into multiplicative ones, and inference
//! reconstructed from a sampler by tape enumeration.

use std::collections::BTreeSet;
use std::sync::Mutex;

use crate::error::{Error, Result};
use crate::gibbs::{GibbsSpec, Instance, PartialConfig, Symbol};
use crate::oracle::{self, Guarantee, MarginalDist};
use crate::runtime::{derive_seed, enumerate_outcomes, SampleOutcome, SeededTape, Tape};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GuaranteeKind {
    Tv,
    Mult,
}

/// A marginal-estimation algorithm with a declared guarantee and locality.
///
/// `infer(inst, v, err)` returns a marginal for `v` under the instance's
/// pinning within the declared error kind at level `err`; the output must be
/// a deterministic function of (instance, v, err) and of the radius
/// `locality(inst, err)` view around v.
pub trait Inferencer {
    fn guarantee_kind(&self) -> GuaranteeKind;

    /// Radius around the queried node that fully determines the output at
    /// error target `err`.
    fn locality(&self, inst: &Instance, err: f64) -> u32;

    fn infer(&self, inst: &Instance, v: u64, err: f64) -> Result<MarginalDist>;
}

/// The brute-force oracle as an inferencer: exact marginals, zero error,
/// whole-graph locality.
#[derive(Debug, Clone)]
pub struct ExactOracle {
    pub budget: u64,
}

impl Default for ExactOracle {
    fn default() -> Self {
        ExactOracle {
            budget: oracle::DEFAULT_ORACLE_BUDGET,
        }
    }
}

impl Inferencer for ExactOracle {
    fn guarantee_kind(&self) -> GuaranteeKind {
        GuaranteeKind::Tv
    }

    fn locality(&self, inst: &Instance, _err: f64) -> u32 {
        inst.spec().n() as u32
    }

    fn infer(&self, inst: &Instance, v: u64, _err: f64) -> Result<MarginalDist> {
        Ok(oracle::marginal(inst, v, self.budget)?.with_guarantee(Guarantee::Tv(0.0)))
    }
}

/// How the noisy oracle picks the donor/recipient pair for its perturbation.
#[derive(Debug, Clone, Copy)]
pub enum NoiseStyle {
    /// Move mass from the largest entry to the smallest other entry
    /// (ties toward the lowest index). Deterministic.
    MaxToMin,
    /// Seeded pseudo-random pair per (pinning, vertex); still a
    /// deterministic function of the instance and vertex.
    SeededPairs(u64),
}

/// The exact oracle with total-variation noise injected at exactly the
/// requested error target: the worst base inferencer its contract allows.
/// The recipient may be an infeasible symbol, which is legal under a TV
/// guarantee and stresses downstream consumers.
///
/// With `ball_radius` set, the underlying marginal is ball inference at
/// that radius instead of the global oracle, making the inferencer honestly
/// local (its output depends on the radius ball_radius + 2l view only) --
/// the shape a genuinely distributed noisy base has.
#[derive(Debug, Clone)]
pub struct NoisyOracle {
    pub style: NoiseStyle,
    pub budget: u64,
    pub ball_radius: Option<u32>,
}

impl NoisyOracle {
    pub fn new(style: NoiseStyle) -> Self {
        NoisyOracle {
            style,
            budget: oracle::DEFAULT_ORACLE_BUDGET,
            ball_radius: None,
        }
    }

    pub fn with_ball_radius(style: NoiseStyle, t: u32) -> Self {
        NoisyOracle {
            style,
            budget: oracle::DEFAULT_ORACLE_BUDGET,
            ball_radius: Some(t),
        }
    }
}

fn pinning_hash(pins: &PartialConfig, v: u64) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325 ^ v;
    for (node, sym) in pins.iter() {
        h ^= node.wrapping_mul(0x100000001b3).wrapping_add(sym as u64);
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

impl Inferencer for NoisyOracle {
    fn guarantee_kind(&self) -> GuaranteeKind {
        GuaranteeKind::Tv
    }

    fn locality(&self, inst: &Instance, _err: f64) -> u32 {
        match self.ball_radius {
            Some(t) => t + 2 * inst.spec().locality(),
            None => inst.spec().n() as u32,
        }
    }

    fn infer(&self, inst: &Instance, v: u64, err: f64) -> Result<MarginalDist> {
        let exact = match self.ball_radius {
            Some(t) => ball_inference(inst, v, t, self.budget)?,
            None => oracle::marginal(inst, v, self.budget)?,
        };
        if err == 0.0 || exact.q() < 2 || exact.is_pinned_result() {
            return Ok(exact.with_guarantee(Guarantee::Tv(err)));
        }
        let mut probs = exact.probs().to_vec();
        let (donor, recipient) = match self.style {
            NoiseStyle::MaxToMin => {
                let donor = exact.argmax();
                let recipient = (0..probs.len())
                    .filter(|&i| i != donor)
                    .min_by(|&a, &b| probs[a].partial_cmp(&probs[b]).unwrap())
                    .unwrap();
                (donor, recipient)
            }
            NoiseStyle::SeededPairs(seed) => {
                use rand::{Rng, SeedableRng};
                let h = pinning_hash(inst.pinning(), v) ^ seed;
                let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(h);
                // Donor needs at least `err` mass to give away.
                let donors: Vec<usize> =
                    (0..probs.len()).filter(|&i| probs[i] >= err).collect();
                let donor = donors[rng.gen_range(0..donors.len())];
                let mut recipient = rng.gen_range(0..probs.len() - 1);
                if recipient >= donor {
                    recipient += 1;
                }
                (donor, recipient)
            }
        };
        // Exactly `err` of mass moves; capped only in degenerate corners.
        let moved = err.min(probs[donor]).min(1.0 - probs[recipient]);
        probs[donor] -= moved;
        probs[recipient] += moved;
        let mut out = MarginalDist::new(probs, Guarantee::Tv(err))?;
        if moved < err {
            out = out.with_note(format!("injected noise capped at {moved:e}"));
        }
        Ok(out)
    }
}

/// Memoizing wrapper: caches results per (pinning, vertex, err). Sound
/// because inferencers are pure functions of (instance, v, err); the cache
/// must only ever see instances sharing one spec.
pub struct CachedInferencer<B> {
    base: B,
    #[allow(clippy::type_complexity)]
    cache: Mutex<std::collections::HashMap<(u64, u64, Vec<(u64, Symbol)>), MarginalDist>>,
    spec_tag: Mutex<Option<usize>>,
}

impl<B: Inferencer> CachedInferencer<B> {
    pub fn new(base: B) -> Self {
        CachedInferencer {
            base,
            cache: Mutex::new(std::collections::HashMap::new()),
            spec_tag: Mutex::new(None),
        }
    }

    pub fn base(&self) -> &B {
        &self.base
    }
}

impl<B: Inferencer> Inferencer for CachedInferencer<B> {
    fn guarantee_kind(&self) -> GuaranteeKind {
        self.base.guarantee_kind()
    }

    fn locality(&self, inst: &Instance, err: f64) -> u32 {
        self.base.locality(inst, err)
    }

    fn infer(&self, inst: &Instance, v: u64, err: f64) -> Result<MarginalDist> {
        {
            let mut tag = self.spec_tag.lock().unwrap();
            let ptr = inst.spec() as *const GibbsSpec as usize;
            match *tag {
                None => *tag = Some(ptr),
                Some(t) => debug_assert_eq!(t, ptr, "cached inferencer used across specs"),
            }
        }
        let key = (v, err.to_bits(), inst.pinning().iter().collect::<Vec<_>>());
        if let Some(hit) = self.cache.lock().unwrap().get(&key) {
            return Ok(hit.clone());
        }
        let out = self.base.infer(inst, v, err)?;
        self.cache.lock().unwrap().insert(key, out.clone());
        Ok(out)
    }
}

/// Finds the lowest (in id-major, symbol-minor mixed-radix order) locally
/// feasible extension of the instance pinning onto `gamma`, checking
/// exactly the factors contained in the pinned region.
fn locally_feasible_extension(
    spec: &GibbsSpec,
    pinning: &PartialConfig,
    gamma: &[u64],
) -> Result<Option<PartialConfig>> {
    let n = spec.graph().n();
    let mut dense: Vec<Option<Symbol>> = vec![None; n];
    for (v, s) in pinning.iter() {
        dense[spec.graph().index_of(v)?] = Some(s);
    }
    let gamma_idx: Vec<usize> = gamma
        .iter()
        .map(|&v| spec.graph().index_of(v))
        .collect::<Result<_>>()?;
    // Factors touching gamma, triggered at the position of their last
    // gamma node; factors inside Lambda are positive since tau is feasible.
    let mut triggers: Vec<Vec<usize>> = vec![Vec::new(); gamma_idx.len()];
    for fi in 0..spec.factors().len() {
        let mut last: Option<usize> = None;
        let mut pinned_or_gamma = true;
        for &i in spec.scope_idx(fi) {
            if let Some(p) = gamma_idx.iter().position(|&gi| gi == i) {
                last = Some(last.map_or(p, |l: usize| l.max(p)));
            } else if dense[i].is_none() {
                pinned_or_gamma = false;
                break;
            }
        }
        if pinned_or_gamma {
            if let Some(p) = last {
                triggers[p].push(fi);
            }
        }
    }
    fn rec(
        spec: &GibbsSpec,
        dense: &mut Vec<Option<Symbol>>,
        gamma_idx: &[usize],
        triggers: &[Vec<usize>],
        depth: usize,
    ) -> bool {
        if depth == gamma_idx.len() {
            return true;
        }
        for s in 0..spec.q() {
            dense[gamma_idx[depth]] = Some(s);
            let ok = triggers[depth].iter().all(|&fi| {
                spec.try_eval_factor_on(fi, dense)
                    .map_or(true, |w| !w.is_zero())
            });
            if ok && rec(spec, dense, gamma_idx, triggers, depth + 1) {
                return true;
            }
        }
        dense[gamma_idx[depth]] = None;
        false
    }
    if rec(spec, &mut dense, &gamma_idx, &triggers, 0) {
        Ok(Some(PartialConfig::from_pairs(gamma_idx.iter().map(|&i| {
            (spec.graph().id_of(i), dense[i].unwrap())
        }))?))
    } else {
        Ok(None)
    }
}

/// SSM-based ball inference at radius `t`.
///
/// Extends the pinning to a locally feasible configuration on the annulus
/// between ball(v, t) and ball(v, t + l), then returns the exact marginal of
/// the ball under that boundary. For locally admissible specs the extension
/// always exists and the output's TV error is bounded by the model's mixing
/// rate at distance t. The output depends only on the radius t + 2l view.
pub fn ball_inference(inst: &Instance, v: u64, t: u32, budget: u64) -> Result<MarginalDist> {
    let spec = inst.spec();
    spec.graph().index_of(v)?;
    if let Some(s) = inst.pinning().get(v) {
        return Ok(MarginalDist::point_mass(spec.q(), s, Guarantee::Exact).with_pinned_flag());
    }
    let ell = spec.locality();
    let ball_t: BTreeSet<u64> = spec.graph().ball(v, t)?;
    let ball_outer = spec.graph().ball(v, t + ell)?;
    let gamma: Vec<u64> = ball_outer
        .iter()
        .copied()
        .filter(|u| !ball_t.contains(u) && !inst.pinning().contains(*u))
        .collect();
    let boundary = match locally_feasible_extension(spec, inst.pinning(), &gamma)? {
        Some(b) => b,
        None => {
            return Err(Error::Infeasible(Some(
                "no locally feasible boundary extension; spec is not locally admissible for this pinning"
                    .into(),
            )))
        }
    };
    oracle::ball_marginal(inst, v, &ball_outer, &boundary, budget)
}

/// Ball inference packaged as an `Inferencer`. The TV guarantee it reports
/// is never assumed: it must be certified empirically per model family (the
/// mixing-profile measurements) and passed in.
#[derive(Debug, Clone)]
pub struct BallInferencer {
    pub t: u32,
    /// Empirically certified TV error at radius `t` for the model family.
    pub certified_tv: f64,
    pub budget: u64,
}

impl BallInferencer {
    pub fn new(t: u32, certified_tv: f64) -> Self {
        BallInferencer {
            t,
            certified_tv,
            budget: oracle::DEFAULT_ORACLE_BUDGET,
        }
    }
}

impl Inferencer for BallInferencer {
    fn guarantee_kind(&self) -> GuaranteeKind {
        GuaranteeKind::Tv
    }

    fn locality(&self, inst: &Instance, _err: f64) -> u32 {
        self.t + 2 * inst.spec().locality()
    }

    fn infer(&self, inst: &Instance, v: u64, _err: f64) -> Result<MarginalDist> {
        Ok(ball_inference(inst, v, self.t, self.budget)?
            .with_guarantee(Guarantee::Tv(self.certified_tv)))
    }
}

/// The pins chosen while boosting, in the order they were placed.
pub type BoostTrace = Vec<(u64, Symbol)>;

/// Boosts a TV-guaranteed base inferencer into a multiplicative guarantee.
///
/// Enumerates the annulus nodes in increasing id order, greedily pinning
/// each to the symbol maximizing the base's reported marginal under the
/// pins placed so far (ties toward the lowest symbol), then returns the
/// ball marginal under the final pinning. With a base within TV error
/// eps/(5qn) per call, the output is within multiplicative error eps of the
/// true conditional marginal and preserves its zero set exactly.
pub fn boost_inference(
    base: &dyn Inferencer,
    inst: &Instance,
    v: u64,
    eps: f64,
    budget: u64,
) -> Result<MarginalDist> {
    Ok(boost_inference_traced(base, inst, v, eps, budget)?.0)
}

pub fn boost_inference_traced(
    base: &dyn Inferencer,
    inst: &Instance,
    v: u64,
    eps: f64,
    budget: u64,
) -> Result<(MarginalDist, BoostTrace)> {
    if !(0.0 < eps && eps < 1.0) {
        return Err(Error::InvalidInput(format!("boost needs 0 < eps < 1, got {eps}")));
    }
    let spec = inst.spec();
    spec.graph().index_of(v)?;
    if let Some(s) = inst.pinning().get(v) {
        return Ok((
            MarginalDist::point_mass(spec.q(), s, Guarantee::Exact).with_pinned_flag(),
            Vec::new(),
        ));
    }
    let q = spec.q() as f64;
    let n = spec.n() as f64;
    let delta = eps / (5.0 * q * n);
    let t = base.locality(inst, delta);
    let ell = spec.locality();
    let ball_t = spec.graph().ball(v, t)?;
    let ball_outer = spec.graph().ball(v, t + ell)?;
    let gamma: Vec<u64> = ball_outer
        .iter()
        .copied()
        .filter(|u| !ball_t.contains(u) && !inst.pinning().contains(*u))
        .collect();

    let mut extra = PartialConfig::empty();
    let mut trace = Vec::with_capacity(gamma.len());
    for &u in &gamma {
        let conditioned = inst.condition_trusted(&extra)?;
        let reported = base.infer(&conditioned, u, delta)?;
        let c = reported.argmax();
        if reported.prob(c) <= 0.0 {
            return Err(Error::InferencerBreach(format!(
                "base reported an all-zero marginal at node {u} while boosting"
            )));
        }
        extra.insert(u, c);
        trace.push((u, c));
    }
    let out = oracle::ball_marginal(inst, v, &ball_outer, &extra, budget)?
        .with_guarantee(Guarantee::Mult(eps));
    Ok((out, trace))
}

/// A boosted inferencer: multiplicative guarantee on top of a TV base.
pub struct BoostedInferencer<B> {
    pub base: B,
    pub budget: u64,
}

impl<B: Inferencer> BoostedInferencer<B> {
    pub fn new(base: B) -> Self {
        BoostedInferencer {
            base,
            budget: oracle::DEFAULT_ORACLE_BUDGET,
        }
    }
}

impl<B: Inferencer> Inferencer for BoostedInferencer<B> {
    fn guarantee_kind(&self) -> GuaranteeKind {
        GuaranteeKind::Mult
    }

    fn locality(&self, inst: &Instance, eps: f64) -> u32 {
        let q = inst.spec().q() as f64;
        let n = inst.spec().n() as f64;
        let delta = eps / (5.0 * q * n);
        // Collects everything up to 2t + l: the boosting walk reads
        // radius-t views of annulus nodes at distance t + l.
        2 * self.base.locality(inst, delta) + inst.spec().locality()
    }

    fn infer(&self, inst: &Instance, v: u64, eps: f64) -> Result<MarginalDist> {
        boost_inference(&self.base, inst, v, eps, self.budget)
    }
}

/// A sampler driven entirely by a labeled tape, with a declared TV error
/// for its conditional-on-success output distribution.
pub trait ConfigSampler {
    fn sample(&self, tape: &mut dyn Tape) -> Result<SampleOutcome>;

    /// Declared TV distance between the conditioned-on-success output
    /// distribution and the target.
    fn declared_tv_error(&self) -> f64;
}

#[derive(Debug, Clone, Copy)]
pub enum SamplerInferenceMode {
    /// Exact output law by enumerating every tape path (bounded by
    /// `max_paths`); falls back to Monte Carlo with the given runs when the
    /// bound is exceeded, which the result's note reports.
    Enumerate {
        max_paths: usize,
        fallback_runs: usize,
        seed: u64,
    },
    MonteCarlo {
        runs: usize,
        seed: u64,
    },
}

/// Reconstructs the marginal of `v` from a sampler: the distribution of the
/// sampler's output at `v`, unconditioned on failures. With declared error
/// delta and failure mass eps0, the result carries a TV guarantee of
/// delta + eps0 (widened by the binomial confidence radius when estimated).
pub fn inference_from_sampler(
    sampler: &dyn ConfigSampler,
    inst: &Instance,
    v: u64,
    mode: SamplerInferenceMode,
) -> Result<MarginalDist> {
    let q = inst.spec().q();
    inst.spec().graph().index_of(v)?;
    match mode {
        SamplerInferenceMode::Enumerate {
            max_paths,
            fallback_runs,
            seed,
        } => match enumerate_outcomes(max_paths, |tape| sampler.sample(tape)) {
            Ok(paths) => {
                let mut probs = vec![0.0f64; q];
                let mut failure_mass = 0.0;
                let mut total = 0.0;
                for (outcome, p) in &paths {
                    let y = outcome.value(v).ok_or_else(|| {
                        Error::ContractViolation(format!("sampler produced no output at node {v}"))
                    })?;
                    probs[y] += p;
                    total += p;
                    if outcome.any_failed() {
                        failure_mass += p;
                    }
                }
                if (total - 1.0).abs() > 1e-9 {
                    return Err(Error::ContractViolation(format!(
                        "enumerated path probabilities sum to {total}, not 1"
                    )));
                }
                let probs = probs.iter().map(|p| p / total).collect();
                Ok(MarginalDist::new(
                    probs,
                    Guarantee::Tv(sampler.declared_tv_error() + failure_mass),
                )?)
            }
            Err(Error::TapeBudgetExceeded { .. }) => {
                let out = inference_from_sampler(
                    sampler,
                    inst,
                    v,
                    SamplerInferenceMode::MonteCarlo {
                        runs: fallback_runs,
                        seed,
                    },
                )?;
                Ok(out.with_note(format!(
                    "tape budget of {max_paths} paths exceeded; estimated from {fallback_runs} runs"
                )))
            }
            Err(e) => Err(e),
        },
        SamplerInferenceMode::MonteCarlo { runs, seed } => {
            if runs == 0 {
                return Err(Error::InvalidInput("monte carlo needs at least one run".into()));
            }
            let mut counts = vec![0u64; q];
            let mut failures = 0u64;
            for i in 0..runs {
                let mut tape = SeededTape::new(derive_seed(seed, &format!("run-{i}")));
                let outcome = sampler.sample(&mut tape)?;
                let y = outcome.value(v).ok_or_else(|| {
                    Error::ContractViolation(format!("sampler produced no output at node {v}"))
                })?;
                counts[y] += 1;
                if outcome.any_failed() {
                    failures += 1;
                }
            }
            let probs = counts.iter().map(|&c| c as f64 / runs as f64).collect();
            let failure_mass = failures as f64 / runs as f64;
            let radius = (q as f64 / (2.0 * runs as f64)).sqrt();
            MarginalDist::new(
                probs,
                Guarantee::Tv(sampler.declared_tv_error() + failure_mass + radius),
            )
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gibbs::{coloring_uniform, hardcore};
    use crate::graph::families::*;
    use crate::oracle::{marginal, mult_error, tv_distance, DEFAULT_ORACLE_BUDGET};
    use std::sync::Arc;

    fn unpinned(spec: crate::gibbs::GibbsSpec) -> Instance {
        Instance::unpinned(Arc::new(spec)).unwrap()
    }

    /// All feasible pinnings of an instance not covering `keep_free`.
    fn all_feasible_pinnings(inst: &Instance, keep_free: u64) -> Vec<PartialConfig> {
        let spec = inst.spec();
        let ids: Vec<u64> = spec
            .graph()
            .node_ids()
            .iter()
            .copied()
            .filter(|&v| v != keep_free)
            .collect();
        let mut out = vec![];
        // Each node: unpinned or one of q symbols -> (q+1val)-ary counter.
        let base = spec.q() + 1;
        let mut counter = vec![0usize; ids.len()];
        loop {
            let pins = PartialConfig::from_pairs(
                ids.iter()
                    .zip(&counter)
                    .filter(|(_, &c)| c > 0)
                    .map(|(&v, &c)| (v, c - 1)),
            )
            .unwrap();
            if spec
                .find_feasible_extension(&pins, 1_000_000)
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

    #[test]
    fn noisy_oracle_injects_exact_noise() {
        let inst = unpinned(hardcore(cycle(5), 1.0).unwrap());
        let noisy = NoisyOracle::new(NoiseStyle::MaxToMin);
        let err = 0.01;
        for &v in inst.graph().node_ids() {
            let p = noisy.infer(&inst, v, err).unwrap();
            let exact = marginal(&inst, v, DEFAULT_ORACLE_BUDGET).unwrap();
            assert!((tv_distance(&p, &exact).unwrap() - err).abs() < 1e-12);
        }
    }

    #[test]
    fn ball_inference_with_full_ball_is_exact() {
        let inst = unpinned(hardcore(cycle(6), 0.8).unwrap());
        // t >= diameter: annulus empty or fully pinned, output exact.
        let got = ball_inference(&inst, 0, 6, DEFAULT_ORACLE_BUDGET).unwrap();
        let want = marginal(&inst, 0, DEFAULT_ORACLE_BUDGET).unwrap();
        assert!(tv_distance(&got, &want).unwrap() < 1e-12);
    }

    #[test]
    fn ball_inference_exact_when_neighbors_pinned() {
        // All neighbours of v pinned: conditional independence makes any
        // t >= 1 exact.
        let spec = Arc::new(hardcore(cycle(8), 1.3).unwrap());
        let pins = PartialConfig::from_pairs([(1, 0), (7, 1)]).unwrap();
        let inst = Instance::new(spec, pins).unwrap();
        for t in 1..4 {
            let got = ball_inference(&inst, 0, t, DEFAULT_ORACLE_BUDGET).unwrap();
            let want = marginal(&inst, 0, DEFAULT_ORACLE_BUDGET).unwrap();
            assert!(tv_distance(&got, &want).unwrap() < 1e-12, "t = {t}");
        }
    }

    #[test]
    fn boost_with_exact_base_is_tight() {
        // Exact base (delta = 0): zero sets match exactly and the
        // multiplicative error stays within eps on every pinning.
        let eps = 0.3;
        for spec in [
            hardcore(path(4), 2.0).unwrap(),
            coloring_uniform(complete(3), 3).unwrap(),
        ] {
            let inst = unpinned(spec);
            let base = ExactOracle::default();
            for pins in all_feasible_pinnings(&inst, 0) {
                let sub = inst.condition(&pins).unwrap();
                let got = boost_inference(&base, &sub, 0, eps, DEFAULT_ORACLE_BUDGET).unwrap();
                let want = marginal(&sub, 0, DEFAULT_ORACLE_BUDGET).unwrap();
                for s in 0..got.q() {
                    assert_eq!(got.prob(s) == 0.0, want.prob(s) == 0.0, "zero preservation");
                }
                assert!(mult_error(&got, &want).unwrap() <= eps + 1e-12);
            }
        }
    }

    #[test]
    fn boost_intermediate_pins_stay_feasible() {
        let inst = unpinned(hardcore(cycle(6), 1.0).unwrap());
        let base = NoisyOracle::new(NoiseStyle::MaxToMin);
        let (_, trace) =
            boost_inference_traced(&base, &inst, 0, 0.5, DEFAULT_ORACLE_BUDGET).unwrap();
        let mut pins = PartialConfig::empty();
        for (u, c) in trace {
            pins.insert(u, c);
            assert!(inst
                .spec()
                .find_feasible_extension(&pins, 100_000)
                .unwrap()
                .is_some());
        }
    }

    #[test]
    fn boost_with_noisy_base_meets_mult_guarantee() {
        let eps = 0.5;
        let inst = unpinned(hardcore(cycle(5), 1.0).unwrap());
        let base = NoisyOracle::new(NoiseStyle::MaxToMin);
        for v in [0u64, 2] {
            let got = boost_inference(&base, &inst, v, eps, DEFAULT_ORACLE_BUDGET).unwrap();
            let want = marginal(&inst, v, DEFAULT_ORACLE_BUDGET).unwrap();
            assert!(mult_error(&got, &want).unwrap() <= eps + 1e-12);
        }
    }

    struct FixedSampler {
        values: Vec<(u64, Symbol)>,
    }

    impl ConfigSampler for FixedSampler {
        fn sample(&self, _tape: &mut dyn Tape) -> Result<SampleOutcome> {
            Ok(self
                .values
                .iter()
                .map(|&(v, s)| {
                    (
                        v,
                        crate::runtime::NodeResult {
                            value: Some(s),
                            failed: false,
                        },
                    )
                })
                .collect())
        }

        fn declared_tv_error(&self) -> f64 {
            0.0
        }
    }

    #[test]
    fn deterministic_sampler_gives_point_mass() {
        let inst = unpinned(hardcore(path(3), 1.0).unwrap());
        let sampler = FixedSampler {
            values: vec![(0, 1), (1, 0), (2, 1)],
        };
        let m = inference_from_sampler(
            &sampler,
            &inst,
            0,
            SamplerInferenceMode::Enumerate {
                max_paths: 16,
                fallback_runs: 10,
                seed: 0,
            },
        )
        .unwrap();
        assert_eq!(m.prob(1), 1.0);
    }
}
