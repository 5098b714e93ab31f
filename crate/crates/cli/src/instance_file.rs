//! The instance file format: a single self-describing TOML document with
//! sections for the graph, the model, the pinning, the seed and budgets.
//! Schema `gibbs-instance/1`; parse(emit(x)) round-trips exactly.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};

use local_gibbs::gibbs::{
    coloring, coloring_uniform, hardcore, matching, two_spin, Factor, GibbsSpec, Instance,
    PartialConfig,
};
use local_gibbs::graph::{Graph, LineGraphMap};

pub const SCHEMA: &str = "gibbs-instance/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceFile {
    pub schema: String,
    #[serde(default)]
    pub seed: u64,
    pub graph: GraphSection,
    pub model: ModelSection,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub pinning: Vec<PinEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budgets: Option<BudgetSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphSection {
    pub nodes: Vec<u64>,
    pub edges: Vec<(u64, u64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSection {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<usize>,
    /// Per-node colour lists for list colorings, keyed by node id.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lists: Option<BTreeMap<String, Vec<usize>>>,
    /// Explicit factors for custom models.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub factors: Option<Vec<FactorEntry>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorEntry {
    pub scope: Vec<u64>,
    pub table: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PinEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub node: Option<u64>,
    /// For matching models: the pinned edge of the original graph.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edge: Option<(u64, u64)>,
    pub value: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BudgetSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle_states: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tape_paths: Option<usize>,
}

/// A parsed instance: the validated library object plus the file-level
/// settings around it.
pub struct LoadedInstance {
    pub instance: Instance,
    pub seed: u64,
    pub oracle_budget: u64,
    pub tape_budget: usize,
    /// Present for matching models: translates line-graph nodes back to
    /// edges of the original graph.
    pub edge_map: Option<LineGraphMap>,
    pub file: InstanceFile,
}

pub fn parse_instance(path: &Path) -> Result<LoadedInstance> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read instance file {}", path.display()))?;
    let file: InstanceFile = toml::from_str(&text)
        .map_err(|e| anyhow!("{}: {e}", path.display()))?;
    load(file).with_context(|| format!("in instance file {}", path.display()))
}

pub fn emit_instance(file: &InstanceFile) -> Result<String> {
    Ok(toml::to_string_pretty(file)?)
}

pub fn load(file: InstanceFile) -> Result<LoadedInstance> {
    if file.schema != SCHEMA {
        bail!("field `schema`: expected {SCHEMA:?}, found {:?}", file.schema);
    }
    let graph = Graph::new(file.graph.nodes.iter().copied(), &file.graph.edges)
        .map_err(|e| anyhow!("section [graph]: {e}"))?;

    let m = &file.model;
    let need = |name: &str, v: Option<f64>| {
        v.ok_or_else(|| anyhow!("section [model]: kind {:?} needs field `{name}`", m.kind))
    };
    let mut edge_map = None;
    let spec: GibbsSpec = match m.kind.as_str() {
        "hardcore" => hardcore(graph, need("lambda", m.lambda)?)
            .map_err(|e| anyhow!("section [model]: {e}"))?,
        "two_spin" => two_spin(
            graph,
            need("beta", m.beta)?,
            need("gamma", m.gamma)?,
            need("lambda", m.lambda)?,
        )
        .map_err(|e| anyhow!("section [model]: {e}"))?,
        "coloring" => match (&m.lists, m.q) {
            (Some(lists), _) => {
                let mut by_id = BTreeMap::new();
                for (k, v) in lists {
                    let id: u64 = k
                        .parse()
                        .map_err(|_| anyhow!("section [model.lists]: key {k:?} is not a node id"))?;
                    by_id.insert(id, v.clone());
                }
                coloring(graph, &by_id).map_err(|e| anyhow!("section [model]: {e}"))?
            }
            (None, Some(q)) => {
                coloring_uniform(graph, q).map_err(|e| anyhow!("section [model]: {e}"))?
            }
            (None, None) => bail!("section [model]: coloring needs `q` or `lists`"),
        },
        "matching" => {
            let (spec, map) = matching(&graph, need("lambda", m.lambda)?)
                .map_err(|e| anyhow!("section [model]: {e}"))?;
            edge_map = Some(map);
            spec
        }
        "custom" => {
            let q = m
                .q
                .ok_or_else(|| anyhow!("section [model]: custom models need `q`"))?;
            let entries = m
                .factors
                .as_ref()
                .ok_or_else(|| anyhow!("section [model]: custom models need `factors`"))?;
            let factors = entries
                .iter()
                .enumerate()
                .map(|(i, f)| {
                    Factor::new(f.scope.clone(), q, &f.table)
                        .map_err(|e| anyhow!("section [model.factors], entry {i}: {e}"))
                })
                .collect::<Result<Vec<_>>>()?;
            GibbsSpec::new(graph, q, factors).map_err(|e| anyhow!("section [model]: {e}"))?
        }
        other => bail!(
            "section [model]: unknown kind {other:?} (expected hardcore, two_spin, coloring, matching or custom)"
        ),
    };

    let mut pins = PartialConfig::empty();
    for (i, p) in file.pinning.iter().enumerate() {
        let node = match (p.node, p.edge, &edge_map) {
            (Some(v), None, _) => v,
            (None, Some((a, b)), Some(map)) => map.node_for_edge(a, b).ok_or_else(|| {
                anyhow!("pinning entry {i}: edge ({a}, {b}) is not an edge of the graph")
            })?,
            (None, Some(_), None) => {
                bail!("pinning entry {i}: `edge` pins are only valid for matching models")
            }
            _ => bail!("pinning entry {i}: exactly one of `node` or `edge` is required"),
        };
        if !spec.graph().contains(node) {
            bail!("pinning entry {i}: unknown node {node}");
        }
        if !spec.alphabet().contains(p.value) {
            bail!(
                "pinning entry {i}: value {} outside the alphabet 0..{}",
                p.value,
                spec.q()
            );
        }
        if let Some(old) = pins.get(node) {
            if old != p.value {
                bail!("pinning entry {i}: node {node} pinned twice with different values");
            }
        }
        pins.insert(node, p.value);
    }

    let instance = Instance::new(Arc::new(spec), pins)
        .map_err(|e| anyhow!("section [pinning]: {e}"))?;
    let budgets = file.budgets.clone().unwrap_or(BudgetSection {
        oracle_states: None,
        tape_paths: None,
    });
    Ok(LoadedInstance {
        instance,
        seed: file.seed,
        oracle_budget: budgets
            .oracle_states
            .unwrap_or(local_gibbs::oracle::DEFAULT_ORACLE_BUDGET),
        tape_budget: budgets
            .tape_paths
            .unwrap_or(local_gibbs::runtime::DEFAULT_TAPE_BUDGET),
        edge_map,
        file,
    })
}
