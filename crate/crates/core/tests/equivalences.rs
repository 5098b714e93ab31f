//! Cross-module invariants: the sampling <-> inference reductions, the
//! rejection sampler's distributional identities, transform preservation,
//! mixing-rate consistency, and brute-force cross-checks.

use std::collections::BTreeMap;
use std::sync::Arc;

use local_gibbs::corpus;
use local_gibbs::gibbs::{hardcore, matching, FullConfig, Instance, PartialConfig};
use local_gibbs::graph::{families::*, NodeOrdering};
use local_gibbs::inference::{
    ball_inference, boost_inference, inference_from_sampler, CachedInferencer, ConfigSampler,
    ExactOracle, Inferencer, NoiseStyle, NoisyOracle, SamplerInferenceMode,
};
use local_gibbs::oracle::{
    self, joint_distribution, joint_tv, marginal, mult_error, tv_distance, DEFAULT_ORACLE_BUDGET,
};
use local_gibbs::runtime::{enumerate_outcomes, DecompositionParams, SeededTape};
use local_gibbs::samplers::{
    accept_prob, accept_prob_global, bridge_step, chain_density, ground_state,
    sequential_sample, JvvConfig, JvvLocalSampler, JvvSampler, SequentialSampler,
};
use local_gibbs::ssm::{self, fit_decay_rate, measure_all_subsets, AllSubsetsOptions};

fn unpinned(spec: local_gibbs::gibbs::GibbsSpec) -> Instance {
    Instance::unpinned(Arc::new(spec)).unwrap()
}

/// Analytic Pr[Y = sigma and all nodes accept] / w(sigma) for every feasible
/// sigma: the rejection sampler's exactness identity says this is constant.
fn success_ratios(
    base: &dyn Inferencer,
    inst: &Instance,
    ordering: &NodeOrdering,
    cfg: &JvvConfig,
) -> Vec<f64> {
    let (t, _) = cfg.resolve(base, inst);
    let sigma0 = ground_state(base, inst, ordering, cfg).unwrap();
    let joint = joint_distribution(inst, DEFAULT_ORACLE_BUDGET).unwrap();
    let mut ratios = Vec::new();
    for sigma in joint.keys() {
        let density = chain_density(base, inst, ordering, cfg, sigma).unwrap();
        let mut q_product = 1.0;
        let mut prev = sigma0.clone();
        for i in 1..=ordering.len() {
            let cur = bridge_step(inst, ordering, &prev, sigma, i, t).unwrap();
            let (q, _) = accept_prob(base, inst, ordering, &prev, &cur, i, cfg).unwrap();
            q_product *= q;
            prev = cur;
        }
        assert_eq!(&prev, sigma);
        let w = inst.spec().weight(sigma).value();
        ratios.push(density * q_product / w);
    }
    ratios
}

#[test]
fn rejection_sampler_is_ordering_robust() {
    // All 24 orderings of a 4-node instance: the success identity holds and
    // therefore the conditioned law is the target under every ordering.
    let inst = unpinned(hardcore(path(4), 1.0).unwrap());
    let base = CachedInferencer::new(ExactOracle::default());
    let cfg = JvvConfig::default();
    let ids: Vec<u64> = inst.graph().node_ids().to_vec();
    let mut perms = vec![ids.clone()];
    // Heap's algorithm, iterative.
    {
        let mut c = vec![0usize; ids.len()];
        let mut a = ids.clone();
        let mut i = 0;
        while i < a.len() {
            if c[i] < i {
                if i % 2 == 0 {
                    a.swap(0, i);
                } else {
                    a.swap(c[i], i);
                }
                perms.push(a.clone());
                c[i] += 1;
                i = 0;
            } else {
                c[i] = 0;
                i += 1;
            }
        }
    }
    assert_eq!(perms.len(), 24);
    for perm in perms {
        let ordering = NodeOrdering::new(inst.graph(), perm).unwrap();
        let ratios = success_ratios(&base, &inst, &ordering, &cfg);
        let first = ratios[0];
        for r in &ratios {
            assert!((r - first).abs() <= 1e-9 * first.abs(), "{ratios:?}");
        }
    }
}

#[test]
fn telescoping_is_bridge_independent() {
    // The product of acceptance probabilities depends only on the ground
    // state and the proposal: recomputing along bridges built at a larger
    // radius (hence through different intermediate configurations) gives
    // the same product.
    let inst = unpinned(hardcore(cycle(5), 1.4).unwrap());
    let base = CachedInferencer::new(ExactOracle::default());
    let ordering = NodeOrdering::by_id(inst.graph());
    let joint = joint_distribution(&inst, DEFAULT_ORACLE_BUDGET).unwrap();
    let sigma = joint.keys().nth(3).unwrap();
    let mut products = Vec::new();
    for t in [2u32, 5] {
        let cfg = JvvConfig {
            t: Some(t),
            ..JvvConfig::default()
        };
        let sigma0 = ground_state(&base, &inst, &ordering, &cfg).unwrap();
        let mut prev = sigma0;
        let mut product = 1.0;
        let mut bridge_paths_differ = false;
        for i in 1..=ordering.len() {
            let cur = bridge_step(&inst, &ordering, &prev, sigma, i, t).unwrap();
            let (q, _) = accept_prob(&base, &inst, &ordering, &prev, &cur, i, &cfg).unwrap();
            let qg = accept_prob_global(&base, &inst, &ordering, &prev, &cur, &cfg).unwrap();
            assert!((q - qg).abs() <= 1e-12, "local vs global acceptance");
            product *= q;
            if cur != prev {
                bridge_paths_differ = true;
            }
            prev = cur;
        }
        assert!(bridge_paths_differ);
        products.push(product);
    }
    assert!((products[0] - products[1]).abs() <= 1e-12 * products[0].abs());
}

#[test]
fn sequential_and_rejection_sampler_laws_agree() {
    // Tape enumeration at n <= 4: the sequential sampler's law equals the
    // rejection sampler's conditioned-on-success law, both equal the target.
    let inst = unpinned(hardcore(path(4), 0.7).unwrap());
    let base = CachedInferencer::new(ExactOracle::default());
    let ordering = NodeOrdering::by_id(inst.graph());

    let seq_paths = enumerate_outcomes(1 << 18, |tape| {
        sequential_sample(&base, &inst, 0.0, &ordering, tape)
    })
    .unwrap();
    let mut seq_law: BTreeMap<FullConfig, f64> = BTreeMap::new();
    for (cfg, p) in seq_paths {
        *seq_law.entry(cfg).or_insert(0.0) += p;
    }

    let sampler = JvvSampler {
        base: &base,
        inst: &inst,
        ordering: ordering.clone(),
        cfg: JvvConfig::default(),
    };
    let jvv_paths = enumerate_outcomes(1 << 20, |tape| sampler.sample(tape)).unwrap();
    let mut jvv_law: BTreeMap<FullConfig, f64> = BTreeMap::new();
    let mut success = 0.0;
    for (outcome, p) in jvv_paths {
        if outcome.any_failed() {
            continue;
        }
        let values: Vec<usize> = inst
            .graph()
            .node_ids()
            .iter()
            .map(|&v| outcome.value(v).unwrap())
            .collect();
        *jvv_law
            .entry(FullConfig::new(inst.spec(), values).unwrap())
            .or_insert(0.0) += p;
        success += p;
    }
    for p in jvv_law.values_mut() {
        *p /= success;
    }

    let target = joint_distribution(&inst, DEFAULT_ORACLE_BUDGET).unwrap();
    assert!(joint_tv(&seq_law, &target) < 1e-12);
    assert!(joint_tv(&jvv_law, &target) < 1e-9);
}

#[test]
fn compiled_rejection_sampler_preserves_conditional_law() {
    // Fixed schedule, full tape enumeration on n = 4: conditioned on no
    // failure, the compiled run's law equals the sequential law under the
    // induced ordering, exactly.
    let inst = unpinned(hardcore(cycle(4), 1.2).unwrap());
    let base = CachedInferencer::new(ExactOracle::default());
    let cfg = JvvConfig::default();
    let compiled =
        JvvLocalSampler::new(&base, &inst, cfg, 11, &DecompositionParams::default()).unwrap();

    let law_of = |paths: Vec<(local_gibbs::runtime::SampleOutcome, f64)>| {
        let mut law: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
        let mut mass = 0.0;
        for (outcome, p) in paths {
            if outcome.any_failed() {
                continue;
            }
            let key: Vec<usize> = inst
                .graph()
                .node_ids()
                .iter()
                .map(|&v| outcome.value(v).unwrap())
                .collect();
            *law.entry(key).or_insert(0.0) += p;
            mass += p;
        }
        law.into_iter()
            .map(|(k, p)| (k, p / mass))
            .collect::<BTreeMap<_, _>>()
    };

    let compiled_law = law_of(enumerate_outcomes(1 << 20, |tape| compiled.sample(tape)).unwrap());
    let sequential = JvvSampler {
        base: &base,
        inst: &inst,
        ordering: compiled.schedule.ordering.clone(),
        cfg,
    };
    let sequential_law =
        law_of(enumerate_outcomes(1 << 20, |tape| sequential.sample(tape)).unwrap());
    for (k, p) in &compiled_law {
        let q = sequential_law[k];
        assert!((p - q).abs() < 1e-12, "law mismatch at {k:?}: {p} vs {q}");
    }
}

#[test]
fn inference_from_rejection_sampler_enumerate() {
    // Enumerated output law of the sampler at a vertex, unconditioned on
    // failure, is within the measured failure mass of the true marginal.
    let inst = unpinned(hardcore(path(3), 1.0).unwrap());
    let base = CachedInferencer::new(ExactOracle::default());
    let sampler = JvvSampler {
        base: &base,
        inst: &inst,
        ordering: NodeOrdering::by_id(inst.graph()),
        cfg: JvvConfig::default(),
    };
    let n = inst.spec().n() as f64;
    let failure_mass = 1.0 - (-3.0 / n).exp();
    for &v in inst.graph().node_ids() {
        let m = inference_from_sampler(
            &sampler,
            &inst,
            v,
            SamplerInferenceMode::Enumerate {
                max_paths: 1 << 20,
                fallback_runs: 0,
                seed: 0,
            },
        )
        .unwrap();
        let exact = marginal(&inst, v, DEFAULT_ORACLE_BUDGET).unwrap();
        let tv = tv_distance(&m, &exact).unwrap();
        assert!(tv <= failure_mass + 1e-9, "tv {tv} vs failure mass {failure_mass}");
        match m.guarantee() {
            oracle::Guarantee::Tv(d) => assert!((d - failure_mass).abs() < 1e-9),
            g => panic!("unexpected guarantee {g:?}"),
        }
    }
}

#[test]
fn inference_from_sampler_monte_carlo() {
    // 10^5 runs of the sequential sampler on hardcore C8: empirical
    // marginal within 0.01 of the oracle.
    let inst = unpinned(hardcore(cycle(8), 1.0).unwrap());
    let base = CachedInferencer::new(ExactOracle::default());
    let sampler = SequentialSampler {
        base: &base,
        inst: &inst,
        delta: 0.0,
        ordering: NodeOrdering::by_id(inst.graph()),
    };
    let m = inference_from_sampler(
        &sampler,
        &inst,
        0,
        SamplerInferenceMode::MonteCarlo {
            runs: 100_000,
            seed: 424242,
        },
    )
    .unwrap();
    let exact = marginal(&inst, 0, DEFAULT_ORACLE_BUDGET).unwrap();
    assert!(tv_distance(&m, &exact).unwrap() < 0.01);
}

#[test]
fn boost_meets_guarantee_under_randomized_noise() {
    // Adversarial TV noise of exactly eps/(5qn) injected on seeded random
    // donor/recipient pairs. The premise-satisfying global base must stay
    // within eps; the honestly local variant drives real annulus walks and
    // stays within eps = 0.5, where the model's mixing leaves margin.
    let inst = unpinned(hardcore(cycle(6), 1.0).unwrap());
    let mut walks = 0usize;
    for seed in 0..20 {
        for &v in &[0u64, 3] {
            let want = marginal(&inst, v, DEFAULT_ORACLE_BUDGET).unwrap();

            let global = NoisyOracle::new(NoiseStyle::SeededPairs(seed));
            let eps = 0.4;
            let got = boost_inference(&global, &inst, v, eps, DEFAULT_ORACLE_BUDGET).unwrap();
            assert!(mult_error(&got, &want).unwrap() <= eps + 1e-12);

            let local = NoisyOracle::with_ball_radius(NoiseStyle::SeededPairs(seed), 0);
            let eps = 0.5;
            let (got, trace) = local_gibbs::inference::boost_inference_traced(
                &local,
                &inst,
                v,
                eps,
                DEFAULT_ORACLE_BUDGET,
            )
            .unwrap();
            walks += usize::from(!trace.is_empty());
            assert!(mult_error(&got, &want).unwrap() <= eps + 1e-12);
        }
    }
    assert!(walks > 0);
}

#[test]
fn inference_implies_mixing_bound() {
    // The forward direction of the mixing equivalence: a deterministic
    // radius-R inference procedure with certified error delta forces the
    // measured mixing rate at distance R + 1 to be at most 2 * delta.
    let inst = unpinned(hardcore(cycle(8), 1.0).unwrap());
    let v = 0u64;
    let ell = inst.spec().locality();
    let profile = measure_all_subsets(
        &inst,
        v,
        8,
        AllSubsetsOptions {
            assume_locally_admissible: true,
            ..AllSubsetsOptions::default()
        },
    )
    .unwrap();
    for t in [1u32, 2] {
        let radius = t + 2 * ell;
        let mut certified = 0.0f64;
        for pins in corpus::all_feasible_pinnings(&inst, v) {
            let sub = inst.condition(&pins).unwrap();
            let got = ball_inference(&sub, v, t, DEFAULT_ORACLE_BUDGET).unwrap();
            let want = marginal(&sub, v, DEFAULT_ORACLE_BUDGET).unwrap();
            certified = certified.max(tv_distance(&got, &want).unwrap());
        }
        let measured = profile.delta_tv(radius + 1);
        assert!(
            measured <= 2.0 * certified + 1e-12,
            "t = {t}: mixing {measured} vs 2 * certified {certified}"
        );
    }
}

#[test]
fn tv_and_mult_decay_rates_agree() {
    // On the uniqueness-side tree profile both error notions decay
    // exponentially at matching rates (within the fit residuals).
    let profile = ssm::tree::hardcore_tree_profile(3, 7, 1.0);
    let fit_tv = fit_decay_rate(&profile.tv_points()).unwrap();
    let fit_mult = fit_decay_rate(&profile.mult_points()).unwrap();
    assert!(fit_tv.alpha < 1.0 && fit_mult.alpha < 1.0);
    let gap = (fit_tv.alpha.ln() - fit_mult.alpha.ln()).abs();
    assert!(
        gap <= 2.0 * (fit_tv.rms_residual + fit_mult.rms_residual) + 0.02,
        "rates {} vs {} (residuals {} / {})",
        fit_tv.alpha,
        fit_mult.alpha,
        fit_tv.rms_residual,
        fit_mult.rms_residual
    );
}

#[test]
fn matching_partition_function_is_matching_polynomial() {
    // Brute force over edge subsets (|E| <= 14): sum over matchings of
    // lambda^|M| equals the line-graph hardcore partition function.
    for (g, lambda) in [
        (grid(3, 3), 1.0f64),
        (cycle(12), 0.7),
        (complete(4), 2.0),
        (star(5), 1.5),
    ] {
        let edges = g.edges();
        assert!(edges.len() <= 14);
        let mut poly = 0.0f64;
        for mask in 0u32..(1 << edges.len()) {
            let chosen: Vec<(u64, u64)> = (0..edges.len())
                .filter(|&i| mask >> i & 1 == 1)
                .map(|i| edges[i])
                .collect();
            let disjoint = chosen.iter().enumerate().all(|(i, &(a, b))| {
                chosen[..i]
                    .iter()
                    .all(|&(c, d)| a != c && a != d && b != c && b != d)
            });
            if disjoint {
                poly += lambda.powi(chosen.len() as i32);
            }
        }
        let (spec, _) = matching(&g, lambda).unwrap();
        let inst = Instance::unpinned(Arc::new(spec)).unwrap();
        let z = oracle::partition_function(&inst, 100_000_000).unwrap();
        assert!(
            (z - poly).abs() <= 1e-9 * poly,
            "matching polynomial {poly} vs line-graph Z {z}"
        );
    }
}

#[test]
fn condition_commutes_with_union() {
    // Conditioning in two steps and in one step give the same target
    // distribution.
    for e in corpus::tier_n5() {
        let inst = &e.instance;
        let a_pins = corpus::all_feasible_pinnings(inst, u64::MAX);
        // A couple of two-part splits per instance.
        for pins in a_pins.iter().filter(|p| p.len() >= 2).take(4) {
            let nodes: Vec<u64> = pins.domain().collect();
            let (left, right) = nodes.split_at(nodes.len() / 2);
            let a = PartialConfig::from_pairs(left.iter().map(|&v| (v, pins.get(v).unwrap())))
                .unwrap();
            let b = PartialConfig::from_pairs(right.iter().map(|&v| (v, pins.get(v).unwrap())))
                .unwrap();
            let two_step = inst.condition(&a).unwrap().condition(&b).unwrap();
            let one_step = inst.condition(pins).unwrap();
            let ja = joint_distribution(&two_step, DEFAULT_ORACLE_BUDGET).unwrap();
            let jb = joint_distribution(&one_step, DEFAULT_ORACLE_BUDGET).unwrap();
            assert!(joint_tv(&ja, &jb) < 1e-12, "{}", e.name);
        }
    }
}

#[test]
fn chain_rule_reconstructs_weight_up_to_n10() {
    // Z(tau) * prod marginal = w(sigma) on corpus instances up to 10 nodes.
    for e in corpus::tier_n12() {
        let inst = &e.instance;
        if inst.spec().n() > 10 {
            continue;
        }
        let z = oracle::partition_function(inst, DEFAULT_ORACLE_BUDGET).unwrap();
        let joint = joint_distribution(inst, DEFAULT_ORACLE_BUDGET).unwrap();
        let ordering = NodeOrdering::random(inst.graph(), 7);
        for (sigma, _) in joint.iter().take(6) {
            let map = sigma.to_map(inst.spec());
            let mut prod = 1.0;
            let mut pins = PartialConfig::empty();
            for &v in ordering.nodes() {
                let cur = inst.condition(&pins).unwrap();
                let m = marginal(&cur, v, DEFAULT_ORACLE_BUDGET).unwrap();
                prod *= m.prob(map[&v]);
                pins.insert(v, map[&v]);
            }
            let w = inst.spec().weight(sigma).value();
            assert!(
                (z * prod - w).abs() <= 1e-9 * w.max(1.0),
                "{}: {} vs {}",
                e.name,
                z * prod,
                w
            );
        }
    }
}

#[test]
fn sequential_sampler_with_seeded_tape_verifies_statistically() {
    // Smoke path used by the CLI: sample repeatedly with seeded tapes and
    // compare empirical frequencies to the target.
    let inst = unpinned(hardcore(cycle(6), 1.0).unwrap());
    let base = CachedInferencer::new(ExactOracle::default());
    let ordering = NodeOrdering::by_id(inst.graph());
    let runs = 40_000usize;
    let mut counts: BTreeMap<FullConfig, f64> = BTreeMap::new();
    for i in 0..runs {
        let mut tape = SeededTape::new(i as u64);
        let cfg = sequential_sample(&base, &inst, 0.0, &ordering, &mut tape).unwrap();
        *counts.entry(cfg).or_insert(0.0) += 1.0;
    }
    for p in counts.values_mut() {
        *p /= runs as f64;
    }
    let target = joint_distribution(&inst, DEFAULT_ORACLE_BUDGET).unwrap();
    let support = target.len() as f64;
    let radius = (support / (2.0 * runs as f64)).sqrt();
    assert!(joint_tv(&counts, &target) <= radius + 0.01);
}
