//! JSON schemas for models, processes, and distributions.
//!
//! A model document carries the tree, the filtration, and optionally a
//! random time `Z`, a raw increasing process `A`, or adapted increments `U`:
//!
//! ```json
//! {
//!   "depth": 2,
//!   "horizon": 2,
//!   "levels": [0, 1, 2],
//!   "nodes": [
//!     {"id": "r", "parent": null},
//!     {"id": "a", "parent": "r", "p": "1/2"},
//!     {"id": "b", "parent": "r", "p": "1/2"}, ...
//!   ],
//!   "Z": {"leaf-id": 1, "other-leaf": "inf"},
//!   "A": {"leaf-id": [0, "1/2", 1], ...},
//!   "U": {"leaf-id": ["1/4", 0], ...}
//! }
//! ```
//!
//! Probabilities and values are `"a/b"` strings or integers in exact mode,
//! numbers in float mode. Distributions use
//! `{"support": [[value, prob], ...], "exact": bool}`.

use std::collections::BTreeMap;

use serde_json::Value;
use thiserror::Error;

use crate::distribution::Distribution;
use crate::process::AdaptedProcess;
use crate::scalar::Scalar;
use crate::tree::{FiltrationSpec, NodeSpec, ProbTree, RandomTime, TimeValue, TreeError};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("schema error: {0}")]
    Schema(String),
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Distribution(#[from] crate::distribution::DistError),
}

fn schema(msg: impl Into<String>) -> IoError {
    IoError::Schema(msg.into())
}

/// A parsed model document.
pub struct ModelDoc<K: Scalar> {
    pub tree: ProbTree<K>,
    pub filtration: FiltrationSpec,
    pub z: Option<RandomTime>,
    /// Raw per-leaf paths of `A`, length `horizon + 1` each (not yet
    /// validated against a terminal rule).
    pub a_paths: Option<Vec<Vec<K>>>,
    /// Per-leaf increment rows of `U`, length `horizon` each.
    pub u_rows: Option<Vec<Vec<K>>>,
}

/// True if the document uses exact-mode value encodings anywhere
/// (string probabilities/values or an `"exact": true` marker).
pub fn detect_exact(v: &Value) -> bool {
    match v {
        Value::String(s) => s.contains('/') || s.parse::<i64>().is_ok(),
        Value::Array(a) => a.iter().any(detect_exact),
        Value::Object(m) => {
            if let Some(Value::Bool(b)) = m.get("exact") {
                return *b;
            }
            m.iter()
                .filter(|(k, _)| *k != "id" && *k != "parent" && *k != "rule" && *k != "name")
                .any(|(_, v)| detect_exact(v))
        }
        _ => false,
    }
}

fn get<'v>(v: &'v Value, key: &str) -> Result<&'v Value, IoError> {
    v.get(key)
        .ok_or_else(|| schema(format!("missing field {key:?}")))
}

fn as_usize(v: &Value, what: &str) -> Result<usize, IoError> {
    v.as_u64()
        .map(|u| u as usize)
        .ok_or_else(|| schema(format!("{what} must be a nonnegative integer, got {v}")))
}

fn parse_scalar<K: Scalar>(v: &Value, what: &str) -> Result<K, IoError> {
    K::parse_json(v).map_err(|e| schema(format!("{what}: {e}")))
}

/// Parse just the `"nodes"` array of a model document.
pub fn parse_node_specs<K: Scalar>(doc: &Value) -> Result<Vec<NodeSpec<K>>, IoError> {
    let nodes_v = get(doc, "nodes")?
        .as_array()
        .ok_or_else(|| schema("\"nodes\" must be an array"))?;
    let mut specs: Vec<NodeSpec<K>> = Vec::with_capacity(nodes_v.len());
    for nv in nodes_v {
        let id = match get(nv, "id")? {
            Value::String(s) => s.clone(),
            Value::Number(n) => n.to_string(),
            other => return Err(schema(format!("node id must be a string, got {other}"))),
        };
        let parent = match nv.get("parent") {
            None | Some(Value::Null) => None,
            Some(Value::String(s)) => Some(s.clone()),
            Some(Value::Number(n)) => Some(n.to_string()),
            Some(other) => {
                return Err(schema(format!("parent of {id} must be a string, got {other}")))
            }
        };
        let prob = match nv.get("p") {
            None if parent.is_none() => K::one(),
            None => return Err(schema(format!("node {id} is missing \"p\""))),
            Some(pv) => parse_scalar(pv, &format!("probability of node {id}"))?,
        };
        specs.push(NodeSpec { id, parent, prob });
    }
    Ok(specs)
}

/// Parse a model document.
pub fn parse_model<K: Scalar>(doc: &Value) -> Result<ModelDoc<K>, IoError> {
    let obj = doc
        .as_object()
        .ok_or_else(|| schema("model document must be a JSON object"))?;
    let tree = ProbTree::from_nodes(parse_node_specs(doc)?)?;

    let declared_depth = as_usize(get(doc, "depth")?, "depth")?;
    if declared_depth != tree.depth() {
        return Err(schema(format!(
            "declared depth {declared_depth} does not match the tree depth {}",
            tree.depth()
        )));
    }
    let levels_v = get(doc, "levels")?
        .as_array()
        .ok_or_else(|| schema("\"levels\" must be an array"))?;
    let levels = levels_v
        .iter()
        .map(|v| as_usize(v, "level"))
        .collect::<Result<Vec<_>, _>>()?;
    let filtration = FiltrationSpec::new(levels)?;
    filtration.check_against(&tree)?;
    let declared_horizon = as_usize(get(doc, "horizon")?, "horizon")?;
    if declared_horizon != filtration.horizon() {
        return Err(schema(format!(
            "declared horizon {declared_horizon} does not match levels length {}",
            filtration.horizon() + 1
        )));
    }

    let z = match obj.get("Z") {
        None => None,
        Some(zv) => Some(parse_random_time(&tree, zv)?),
    };
    let a_paths = match obj.get("A") {
        None => None,
        Some(av) => Some(parse_leaf_rows(
            &tree,
            av,
            filtration.horizon() + 1,
            "A",
        )?),
    };
    let u_rows = match obj.get("U") {
        None => None,
        Some(uv) => Some(parse_leaf_rows(&tree, uv, filtration.horizon(), "U")?),
    };

    Ok(ModelDoc {
        tree,
        filtration,
        z,
        a_paths,
        u_rows,
    })
}

fn parse_random_time<K: Scalar>(tree: &ProbTree<K>, zv: &Value) -> Result<RandomTime, IoError> {
    let map = zv
        .as_object()
        .ok_or_else(|| schema("\"Z\" must map leaf ids to times"))?;
    let mut values = Vec::with_capacity(tree.leaf_count());
    for &leaf in tree.leaves() {
        let label = tree.label(leaf);
        let tv = map
            .get(label)
            .ok_or_else(|| schema(format!("\"Z\" is missing leaf {label:?}")))?;
        let t = match tv {
            Value::Number(n) => TimeValue::Finite(
                n.as_u64()
                    .ok_or_else(|| schema(format!("Z[{label}] must be a positive integer")))?,
            ),
            Value::String(s) if s == "inf" || s == "infinity" => TimeValue::Infinity,
            Value::String(s) => TimeValue::Finite(
                s.parse::<u64>()
                    .map_err(|_| schema(format!("Z[{label}] must be an integer or \"inf\"")))?,
            ),
            other => return Err(schema(format!("Z[{label}] has unsupported value {other}"))),
        };
        values.push(t);
    }
    Ok(RandomTime::new(tree, values)?)
}

fn parse_leaf_rows<K: Scalar>(
    tree: &ProbTree<K>,
    v: &Value,
    row_len: usize,
    what: &str,
) -> Result<Vec<Vec<K>>, IoError> {
    let map = v
        .as_object()
        .ok_or_else(|| schema(format!("\"{what}\" must map leaf ids to value arrays")))?;
    let mut rows = Vec::with_capacity(tree.leaf_count());
    for &leaf in tree.leaves() {
        let label = tree.label(leaf);
        let row_v = map
            .get(label)
            .ok_or_else(|| schema(format!("\"{what}\" is missing leaf {label:?}")))?
            .as_array()
            .ok_or_else(|| schema(format!("{what}[{label}] must be an array")))?;
        if row_v.len() != row_len {
            return Err(schema(format!(
                "{what}[{label}] must have {row_len} entries, got {}",
                row_v.len()
            )));
        }
        let row = row_v
            .iter()
            .map(|x| parse_scalar(x, &format!("{what}[{label}]")))
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    Ok(rows)
}

/// Parse `{"support": [[value, prob], ...]}`.
pub fn parse_distribution<K: Scalar>(doc: &Value) -> Result<Distribution<K>, IoError> {
    let support_v = get(doc, "support")?
        .as_array()
        .ok_or_else(|| schema("\"support\" must be an array of [value, prob] pairs"))?;
    let mut pairs = Vec::with_capacity(support_v.len());
    for (i, pv) in support_v.iter().enumerate() {
        let pair = pv
            .as_array()
            .filter(|a| a.len() == 2)
            .ok_or_else(|| schema(format!("support[{i}] must be a [value, prob] pair")))?;
        pairs.push((
            parse_scalar(&pair[0], &format!("support[{i}] value"))?,
            parse_scalar(&pair[1], &format!("support[{i}] probability"))?,
        ));
    }
    Ok(Distribution::from_pairs(pairs)?)
}

/// Emit a distribution as the schema JSON.
pub fn distribution_to_json<K: Scalar>(dist: &Distribution<K>) -> Value {
    let support: Vec<Value> = dist
        .support()
        .iter()
        .map(|(v, p)| Value::Array(vec![v.to_json(), p.to_json()]))
        .collect();
    serde_json::json!({ "support": support, "exact": K::EXACT })
}

/// Emit an adapted process as `{"steps": [{"step", "level", "atoms"}...]}`.
pub fn adapted_to_json<K: Scalar>(tree: &ProbTree<K>, process: &AdaptedProcess<K>) -> Value {
    let steps: Vec<Value> = (0..=process.horizon())
        .map(|n| {
            let level = process.level_at(n);
            let atoms: BTreeMap<String, Value> = tree
                .level_nodes(level)
                .iter()
                .enumerate()
                .map(|(i, &node)| (tree.label(node).to_string(), process.step(n)[i].to_json()))
                .collect();
            serde_json::json!({ "step": n, "level": level, "atoms": atoms })
        })
        .collect();
    serde_json::json!({ "steps": steps })
}

/// Emit a validation report.
pub fn validation_to_json(report: &crate::tree::ValidationReport) -> Value {
    match &report.violation {
        None => serde_json::json!({ "ok": true, "violation": null }),
        Some(err) => {
            let (kind, node) = classify_tree_error(err);
            serde_json::json!({
                "ok": false,
                "violation": { "kind": kind, "node": node, "message": err.to_string() }
            })
        }
    }
}

fn classify_tree_error(err: &TreeError) -> (&'static str, Option<String>) {
    match err {
        TreeError::ProbSumViolation { node, .. } => ("ProbSumViolation", Some(node.clone())),
        TreeError::OrphanNode { node } => ("OrphanNode", Some(node.clone())),
        TreeError::NoRoot => ("OrphanNode", None),
        TreeError::NonUniformDepth { node, .. } => ("NonUniformDepth", Some(node.clone())),
        TreeError::ZeroBranch { node } => ("ZeroBranch", Some(node.clone())),
        TreeError::DuplicateId { node } => ("DuplicateId", Some(node.clone())),
        TreeError::Empty => ("Empty", None),
        other => ("Invalid", {
            let _ = other;
            None
        }),
    }
}
