//! Command-line harness: instance I/O, experiment orchestration and result
//! export for the sampling/inference lab. All randomness flows from the
//! single `--seed` through labeled tapes; reports are byte-stable for a
//! fixed build, with wall time on stderr only. The exit code is 0 only when
//! every asserted tolerance passes.

use std::path::PathBuf;
use std::time::Instant;

use anyhow::{anyhow, bail, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use local_gibbs::gibbs::{FullConfig, Instance};
use local_gibbs::graph::NodeOrdering;
use local_gibbs::inference::{
    ball_inference, boost_inference, BallInferencer, CachedInferencer, ExactOracle,
};
use local_gibbs::oracle::{self, Guarantee, MarginalDist};
use local_gibbs::runtime::{
    derive_seed, network_decomposition, DecompositionParams, SeededTape,
};
use local_gibbs::samplers::{
    jvv_local, jvv_sample, sequential_sample, JvvConfig, OracleSampler,
};
use local_gibbs::ssm::{
    chain_rule_count, fit_decay_rate, measure_all_subsets, measure_boundary,
    phase_transition_report, AllSubsetsOptions, PairSelection, SsmProfile,
};

use local_gibbs_cli::instance_file::{parse_instance, LoadedInstance};
use local_gibbs_cli::report::{verify_distribution, Report};

#[derive(Parser)]
#[command(name = "local-gibbs", about = "Sampling, inference and counting over local Gibbs distributions", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Instance file (TOML, schema gibbs-instance/1).
    #[arg(long)]
    instance: PathBuf,
    /// Overrides the instance file's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum InferMethod {
    Oracle,
    Ball,
    Boost,
}

#[derive(Clone, Copy, ValueEnum)]
enum SamplerKind {
    Oracle,
    Sequential,
    Jvv,
}

#[derive(Subcommand)]
enum Command {
    /// Marginal of one vertex: exact, ball-local, or boosted.
    Infer {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        vertex: u64,
        #[arg(long, value_enum, default_value = "oracle")]
        method: InferMethod,
        /// Ball radius for the ball method or the boost base.
        #[arg(long)]
        radius: Option<u32>,
        /// Multiplicative error target for the boost method.
        #[arg(long)]
        eps: Option<f64>,
        /// Total-variation target, echoed into the report.
        #[arg(long)]
        delta: Option<f64>,
    },
    /// Sequential sampler runs, with statistical verification.
    Sample {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1)]
        runs: usize,
        /// Total-variation budget passed to the sampler.
        #[arg(long, default_value_t = 0.0)]
        delta: f64,
        /// Verification tolerance on the empirical TV (default: the
        /// confidence radius).
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Compiled rejection-sampler runs: success rates plus verification of
    /// the successful outputs.
    Jvv {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1)]
        runs: usize,
        #[arg(long)]
        tol: Option<f64>,
        /// Dump the trace of one sequential run (ground state, proposal,
        /// acceptance probabilities, flags) to this file.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Mixing profile of one vertex, as CSV (t, delta_tv, delta_mult).
    Ssm {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        vertex: u64,
        #[arg(long)]
        tmax: Option<u32>,
        /// all = every subset pair (exponential; n <= 16), rings = all
        /// feasible pairs on each sphere around the vertex.
        #[arg(long, default_value = "rings")]
        scope: String,
    },
    /// Chain-rule counting against the exact partition function.
    Count {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 5)]
        orderings: u64,
    },
    /// Network decomposition dump: node, cluster, color, failed.
    Decomp {
        #[command(flatten)]
        common: Common,
        /// Decompose the k-th power of the instance graph.
        #[arg(long, default_value_t = 1)]
        power: u32,
    },
    /// Phase-transition table over activities on the regular tree.
    Phase {
        /// Tree degree.
        #[arg(long, default_value_t = 3)]
        degree: u32,
        #[arg(long, value_delimiter = ',', default_value = "1,6")]
        lambdas: Vec<f64>,
        #[arg(long, default_value_t = 7)]
        depth: u32,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Draw samples from a chosen sampler and verify against the target.
    Verify {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "oracle")]
        sampler: SamplerKind,
        #[arg(long, default_value_t = 10_000)]
        runs: usize,
        #[arg(long)]
        tol: Option<f64>,
    },
}

fn main() -> Result<()> {
    let start = Instant::now();
    let cli = Cli::parse();
    let code = run(cli)?;
    eprintln!("wall_time_ms = {}", start.elapsed().as_millis());
    if code != 0 {
        std::process::exit(code);
    }
    Ok(())
}

fn marginal_into(report: &mut Report, m: &MarginalDist) {
    for (s, p) in m.probs().iter().enumerate() {
        report.push_f64(&format!("marginal.p{s}"), *p);
    }
    let tag = match m.guarantee() {
        Guarantee::Exact => "exact".to_string(),
        Guarantee::Tv(d) => format!("tv({d:.6e})"),
        Guarantee::Mult(e) => format!("mult({e:.6e})"),
    };
    report.push("marginal.guarantee", tag);
    if m.is_pinned_result() {
        report.push("marginal.pinned", true);
    }
    if let Some(note) = m.note() {
        report.push("marginal.note", note);
    }
}

fn collect_config(inst: &Instance, outcome: &local_gibbs::runtime::SampleOutcome) -> FullConfig {
    let values: Vec<usize> = inst
        .graph()
        .node_ids()
        .iter()
        .map(|&v| outcome.value(v).expect("sampler outputs every node"))
        .collect();
    FullConfig::new(inst.spec(), values).expect("sampler output within the alphabet")
}

fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Infer {
            common,
            vertex,
            method,
            radius,
            eps,
            delta,
        } => {
            let loaded = parse_instance(&common.instance)?;
            let inst = &loaded.instance;
            let budget = loaded.oracle_budget;
            let mut rep = Report::new("infer");
            rep.push("instance", common.instance.display());
            rep.push("vertex", vertex);
            if let Some(d) = delta {
                rep.push_f64("delta", d);
            }
            let m = match method {
                InferMethod::Oracle => oracle::marginal(inst, vertex, budget)?,
                InferMethod::Ball => {
                    let t = radius.ok_or_else(|| anyhow!("--method ball needs --radius"))?;
                    rep.push("radius", t);
                    ball_inference(inst, vertex, t, budget)?
                }
                InferMethod::Boost => {
                    let eps = eps.ok_or_else(|| anyhow!("--method boost needs --eps"))?;
                    rep.push_f64("eps", eps);
                    match radius {
                        Some(t) => {
                            rep.push("radius", t);
                            let base = BallInferencer::new(t, 1.0);
                            boost_inference(&base, inst, vertex, eps, budget)?
                        }
                        None => {
                            let base = ExactOracle { budget };
                            boost_inference(&base, inst, vertex, eps, budget)?
                        }
                    }
                }
            };
            marginal_into(&mut rep, &m);
            rep.deliver(common.out.as_deref())?;
            Ok(0)
        }

        Command::Sample {
            common,
            runs,
            delta,
            tol,
        } => {
            let loaded = parse_instance(&common.instance)?;
            let seed = common.seed.unwrap_or(loaded.seed);
            let inst = &loaded.instance;
            let base = CachedInferencer::new(ExactOracle {
                budget: loaded.oracle_budget,
            });
            let ordering = NodeOrdering::by_id(inst.graph());
            let samples: Vec<FullConfig> = (0..runs)
                .into_par_iter()
                .map(|i| {
                    let mut tape = SeededTape::new(derive_seed(seed, &format!("run-{i}")));
                    sequential_sample(&base, inst, delta, &ordering, &mut tape)
                        .map_err(|e| anyhow!("run {i}: {e}"))
                })
                .collect::<Result<_>>()?;
            let mut rep = Report::new("sample");
            rep.push("instance", common.instance.display());
            rep.push("seed", seed);
            rep.push("runs", runs);
            rep.push_f64("delta", delta);
            let mut code = 0;
            if runs == 1 {
                rep.push("sample", format!("{:?}", samples[0].values()));
            } else {
                let vr = verify_distribution(&samples, inst, loaded.oracle_budget, tol)?;
                vr.write_into(&mut rep);
                if !vr.pass {
                    code = 1;
                }
            }
            rep.deliver(common.out.as_deref())?;
            Ok(code)
        }

        Command::Jvv {
            common,
            runs,
            tol,
            trace,
        } => {
            let loaded = parse_instance(&common.instance)?;
            let seed = common.seed.unwrap_or(loaded.seed);
            let inst = &loaded.instance;
            let base = CachedInferencer::new(ExactOracle {
                budget: loaded.oracle_budget,
            });
            let cfg = JvvConfig::default();
            let params = DecompositionParams::default();

            if let Some(path) = &trace {
                let ordering = NodeOrdering::by_id(inst.graph());
                let mut tape = SeededTape::new(derive_seed(seed, "trace"));
                let (_, tr) = jvv_sample(&base, inst, &ordering, &cfg, &mut tape)?;
                let mut text = String::new();
                use std::fmt::Write as _;
                writeln!(text, "ground = {:?}", tr.ground.values())?;
                writeln!(text, "proposal = {:?}", tr.proposal.values())?;
                writeln!(text, "proposal_density = {:.12e}", tr.proposal_density)?;
                for (i, b) in tr.bridges.iter().enumerate() {
                    writeln!(text, "bridge_{i} = {:?}", b.values())?;
                }
                let qs: Vec<String> = tr.accept_probs.iter().map(|q| format!("{q:.12e}")).collect();
                writeln!(text, "accept_probs = [{}]", qs.join(", "))?;
                writeln!(text, "flags = {:?}", tr.flags)?;
                for b in &tr.breaches {
                    writeln!(text, "breach = {b}")?;
                }
                std::fs::write(path, text)?;
            }

            let results: Vec<(FullConfig, bool, bool)> = (0..runs)
                .into_par_iter()
                .map(|i| {
                    let (outcome, report) =
                        jvv_local(&base, inst, cfg, derive_seed(seed, &format!("run-{i}")), &params)
                            .map_err(|e| anyhow!("run {i}: {e}"))?;
                    let rejection_failed = outcome
                        .iter()
                        .any(|(v, r)| r.failed && !report.transform_failed.contains(&v));
                    Ok((collect_config(inst, &outcome), outcome.any_failed(), rejection_failed))
                })
                .collect::<Result<_>>()?;

            let successes: Vec<FullConfig> = results
                .iter()
                .filter(|(_, any_failed, _)| !any_failed)
                .map(|(c, _, _)| c.clone())
                .collect();
            let rejection_rate = results.iter().filter(|(_, _, r)| *r).count() as f64 / runs as f64;
            let overall_rate = successes.len() as f64 / runs as f64;

            let mut rep = Report::new("jvv");
            rep.push("instance", common.instance.display());
            rep.push("seed", seed);
            rep.push("runs", runs);
            rep.push_f64("success_rate", overall_rate);
            rep.push_f64("rejection_failure_rate", rejection_rate);
            let n = inst.spec().n() as f64;
            rep.push_f64("expected_success_rate_exact_base", (-3.0 / n).exp());
            let mut code = 0;
            if runs > 1 {
                let vr = verify_distribution(&successes, inst, loaded.oracle_budget, tol)?;
                vr.write_into(&mut rep);
                if !vr.pass {
                    code = 1;
                }
            }
            rep.deliver(common.out.as_deref())?;
            Ok(code)
        }

        Command::Ssm {
            common,
            vertex,
            tmax,
            scope,
        } => {
            let loaded = parse_instance(&common.instance)?;
            let inst = &loaded.instance;
            let g = inst.graph();
            let tmax = tmax.unwrap_or_else(|| g.eccentricity(vertex).unwrap_or(0));
            let profile: SsmProfile = match scope.as_str() {
                "all" => {
                    if inst.spec().n() > 16 {
                        bail!("--scope all enumerates every subset; n <= 16 required");
                    }
                    measure_all_subsets(inst, vertex, tmax, AllSubsetsOptions::default())?
                }
                "rings" => {
                    // One profile over all sphere boundaries; suffix maxima
                    // merge across distances.
                    let mut best: Vec<(u32, f64, f64)> = Vec::new();
                    for d in 1..=tmax {
                        let sphere = g.sphere(vertex, d)?;
                        if sphere.is_empty() {
                            continue;
                        }
                        let p = measure_boundary(
                            inst,
                            vertex,
                            &sphere,
                            PairSelection::AllFeasible,
                            tmax,
                        )?;
                        best.push((d, p.delta_tv(d), p.delta_mult(d)));
                    }
                    let mut meas_tv = vec![0.0; tmax as usize + 1];
                    let mut meas_mult = vec![0.0; tmax as usize + 1];
                    for (d, tv, mult) in best {
                        meas_tv[d as usize] = tv;
                        meas_mult[d as usize] = mult;
                    }
                    // render as CSV below from the folded arrays
                    let mut rows = Vec::new();
                    let mut tv_acc = 0.0f64;
                    let mut mult_acc = 0.0f64;
                    for t in (0..=tmax).rev() {
                        tv_acc = tv_acc.max(meas_tv[t as usize]);
                        mult_acc = mult_acc.max(meas_mult[t as usize]);
                        rows.push((t, tv_acc, mult_acc));
                    }
                    rows.reverse();
                    let mut csv = String::from("t,delta_tv,delta_mult\n");
                    for (t, tv, mult) in &rows {
                        csv.push_str(&format!("{t},{tv:.12e},{mult:.12e}\n"));
                    }
                    return finish_ssm(&common, csv, rows);
                }
                other => bail!("unknown --scope {other:?} (expected all or rings)"),
            };
            let mut csv = String::from("t,delta_tv,delta_mult\n");
            let rows: Vec<(u32, f64, f64)> = profile
                .points()
                .iter()
                .map(|p| (p.t, p.delta_tv, p.delta_mult))
                .collect();
            for (t, tv, mult) in &rows {
                csv.push_str(&format!("{t},{tv:.12e},{mult:.12e}\n"));
            }
            eprintln!("scope: {}", profile.scope_note);
            finish_ssm(&common, csv, rows)
        }

        Command::Count { common, orderings } => {
            let loaded = parse_instance(&common.instance)?;
            let seed = common.seed.unwrap_or(loaded.seed);
            let inst = &loaded.instance;
            let base = CachedInferencer::new(ExactOracle {
                budget: loaded.oracle_budget,
            });
            let z = oracle::partition_function(inst, loaded.oracle_budget)?;
            let mut rep = Report::new("count");
            rep.push("instance", common.instance.display());
            rep.push("seed", seed);
            rep.push_f64("partition_function", z);
            let mut worst = 0.0f64;
            for k in 0..orderings {
                let ordering = NodeOrdering::random(inst.graph(), derive_seed(seed, &format!("ordering-{k}")));
                let est = chain_rule_count(&base, inst, &ordering, 0.0)?;
                let rel = (est.z - z).abs() / z;
                worst = worst.max(rel);
                rep.push_f64(&format!("ordering_{k}.z"), est.z);
                if k == 0 {
                    for (v, f) in &est.per_node {
                        rep.push_f64(&format!("ordering_0.node_{v}"), *f);
                    }
                }
            }
            rep.push_f64("worst_rel_error", worst);
            rep.deliver(common.out.as_deref())?;
            Ok(if worst <= 1e-9 { 0 } else { 1 })
        }

        Command::Decomp { common, power } => {
            let loaded = parse_instance(&common.instance)?;
            let seed = common.seed.unwrap_or(loaded.seed);
            let g = loaded.instance.graph();
            let decomposed = if power > 1 { g.power_graph(power)? } else { g.clone() };
            let d = network_decomposition(&decomposed, seed, &DecompositionParams::default());
            let mut csv = String::from("node,cluster,color,failed\n");
            for &v in g.node_ids() {
                csv.push_str(&format!(
                    "{v},{},{},{}\n",
                    d.cluster_of[&v],
                    d.color_of_node(v),
                    d.failed.contains(&v)
                ));
            }
            match common.out {
                Some(path) => std::fs::write(path, csv)?,
                None => print!("{csv}"),
            }
            eprintln!(
                "colors_used = {} (bound {}), max_radius = {} (cap {}), failed = {}",
                d.colors_used,
                d.color_bound,
                d.max_cluster_radius(),
                d.radius_cap,
                d.failed.len()
            );
            Ok(0)
        }

        Command::Phase {
            degree,
            lambdas,
            depth,
            out,
        } => {
            let rows = phase_transition_report(degree, &lambdas, depth)?;
            let mut csv = String::from("lambda,t,delta_tv,delta_mult\n");
            for row in &rows {
                for p in row.profile.points() {
                    csv.push_str(&format!(
                        "{},{},{:.12e},{:.12e}\n",
                        row.lambda, p.t, p.delta_tv, p.delta_mult
                    ));
                }
            }
            match out {
                Some(path) => std::fs::write(path, csv)?,
                None => print!("{csv}"),
            }
            for row in &rows {
                let fit = row
                    .fit
                    .map(|f| format!("alpha = {:.4}, residual = {:.4}", f.alpha, f.rms_residual))
                    .unwrap_or_else(|| "no fit".into());
                eprintln!(
                    "lambda = {}: {fit}, deepest delta_tv = ({:.4}, {:.4}), non_decay = {}{}",
                    row.lambda,
                    row.deepest.0,
                    row.deepest.1,
                    row.non_decay,
                    if row.at_criticality { " (critical activity, no claim)" } else { "" }
                );
            }
            Ok(0)
        }

        Command::Verify {
            common,
            sampler,
            runs,
            tol,
        } => {
            let loaded = parse_instance(&common.instance)?;
            let seed = common.seed.unwrap_or(loaded.seed);
            let inst = &loaded.instance;
            let samples = draw_samples(&loaded, sampler, runs, seed)?;
            let vr = verify_distribution(&samples, inst, loaded.oracle_budget, tol)?;
            let mut rep = Report::new("verify");
            rep.push("instance", common.instance.display());
            rep.push("seed", seed);
            rep.push("runs", runs);
            rep.push(
                "sampler",
                match sampler {
                    SamplerKind::Oracle => "oracle",
                    SamplerKind::Sequential => "sequential",
                    SamplerKind::Jvv => "jvv",
                },
            );
            vr.write_into(&mut rep);
            let pass = vr.pass;
            rep.deliver(common.out.as_deref())?;
            Ok(if pass { 0 } else { 1 })
        }
    }
}

fn finish_ssm(common: &Common, csv: String, rows: Vec<(u32, f64, f64)>) -> Result<i32> {
    match &common.out {
        Some(path) => std::fs::write(path, csv)?,
        None => print!("{csv}"),
    }
    let pts: Vec<(u32, f64)> = rows.iter().map(|&(t, tv, _)| (t, tv)).collect();
    match fit_decay_rate(&pts) {
        Ok(fit) => eprintln!(
            "fit: alpha = {:.6}, c = {:.6}, rms_residual = {:.6} over {} points",
            fit.alpha, fit.c, fit.rms_residual, fit.points_used
        ),
        Err(e) => eprintln!("fit unavailable: {e}"),
    }
    Ok(0)
}

fn draw_samples(
    loaded: &LoadedInstance,
    kind: SamplerKind,
    runs: usize,
    seed: u64,
) -> Result<Vec<FullConfig>> {
    let inst = &loaded.instance;
    match kind {
        SamplerKind::Oracle => {
            use local_gibbs::inference::ConfigSampler;
            let sampler = OracleSampler::new(inst, loaded.oracle_budget)?;
            (0..runs)
                .map(|i| {
                    let mut tape = SeededTape::new(derive_seed(seed, &format!("run-{i}")));
                    Ok(collect_config(inst, &sampler.sample(&mut tape)?))
                })
                .collect()
        }
        SamplerKind::Sequential => {
            let base = CachedInferencer::new(ExactOracle {
                budget: loaded.oracle_budget,
            });
            let ordering = NodeOrdering::by_id(inst.graph());
            (0..runs)
                .into_par_iter()
                .map(|i| {
                    let mut tape = SeededTape::new(derive_seed(seed, &format!("run-{i}")));
                    Ok(sequential_sample(&base, inst, 0.0, &ordering, &mut tape)?)
                })
                .collect()
        }
        SamplerKind::Jvv => {
            let base = CachedInferencer::new(ExactOracle {
                budget: loaded.oracle_budget,
            });
            let cfg = JvvConfig::default();
            let params = DecompositionParams::default();
            let outs: Vec<Option<FullConfig>> = (0..runs)
                .into_par_iter()
                .map(|i| {
                    let (outcome, _) = jvv_local(
                        &base,
                        inst,
                        cfg,
                        derive_seed(seed, &format!("run-{i}")),
                        &params,
                    )?;
                    Ok::<_, anyhow::Error>(if outcome.any_failed() {
                        None
                    } else {
                        Some(collect_config(inst, &outcome))
                    })
                })
                .collect::<Result<_>>()?;
            Ok(outs.into_iter().flatten().collect())
        }
    }
}
