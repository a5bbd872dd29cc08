//! Pivotal-bond revelation.
//!
//! Independent values on `m` edges determine a random pivotal subset `S`
//! through a named rule. Revealing the values one edge at a time in a fixed
//! order accumulates
//! `W = Σ_j P(e(j) ∈ S | values revealed before step j)`,
//! and `W′ = W·1_{|S| ≤ K}`. Writing `Z_j` for the reveal step of the j-th
//! pivotal edge (in reveal order, `∞` beyond the realized count), each
//! `Y_j = P(Z_j = ∞ | F_∞) + Σ_n P(Z_j = n | F_{n−1})` is a mean-one total
//! risk, `W′ ≤ Σ_{j≤K} Y_j′ ≤ Σ_{j≤K} Y_j` pointwise whenever `|S| ≤ K`
//! surely, and `P(W′ > λK) ≤ e^{1−λ}`.
//!
//! Everything here is decided by exhaustive enumeration over the product
//! alphabet (budget-guarded), so reports are exact in rational mode.

use std::collections::BTreeSet;

use serde_json::Value;

use crate::compensator::total_risk;
use crate::convex::{convex_order_vs_exponential, ShortfallReport};
use crate::distribution::Distribution;
use crate::report::{CheckReport, Witness};
use crate::scalar::{ExpValue, LinearValue, Scalar};
use crate::tree::{FiltrationSpec, NodeSpec, ProbTree, RandomTime, TimeValue};

use super::ScenarioError;

/// Cap on joint value states for exhaustive enumeration.
pub const ENUMERATION_BUDGET: u128 = 1 << 20;

// ---------------------------------------------------------------------------
// Rule registry
// ---------------------------------------------------------------------------

/// A pivotal-set rule: a deterministic map from the full value vector to a
/// subset of edge indices.
pub trait PivotalRule<K: Scalar>: Send + Sync {
    fn name(&self) -> &str;
    fn pivotal_set(&self, values: &[K]) -> BTreeSet<usize>;
}

struct AllEdges;
impl<K: Scalar> PivotalRule<K> for AllEdges {
    fn name(&self) -> &str {
        "all-edges"
    }
    fn pivotal_set(&self, values: &[K]) -> BTreeSet<usize> {
        (0..values.len()).collect()
    }
}

struct NoEdges;
impl<K: Scalar> PivotalRule<K> for NoEdges {
    fn name(&self) -> &str {
        "none"
    }
    fn pivotal_set(&self, _values: &[K]) -> BTreeSet<usize> {
        BTreeSet::new()
    }
}

/// Edges whose value equals a target; membership is decided edge by edge, so
/// conditioning on other edges is vacuous.
struct ValueMatch<K> {
    target: K,
}
impl<K: Scalar> PivotalRule<K> for ValueMatch<K> {
    fn name(&self) -> &str {
        "value-match"
    }
    fn pivotal_set(&self, values: &[K]) -> BTreeSet<usize> {
        values
            .iter()
            .enumerate()
            .filter(|(_, v)| **v == self.target)
            .map(|(i, _)| i)
            .collect()
    }
}

/// All target-valued edges, but only when they reach a quorum.
struct Majority<K> {
    target: K,
    threshold: usize,
}
impl<K: Scalar> PivotalRule<K> for Majority<K> {
    fn name(&self) -> &str {
        "majority"
    }
    fn pivotal_set(&self, values: &[K]) -> BTreeSet<usize> {
        let hits: BTreeSet<usize> = values
            .iter()
            .enumerate()
            .filter(|(_, v)| **v == self.target)
            .map(|(i, _)| i)
            .collect();
        if hits.len() >= self.threshold {
            hits
        } else {
            BTreeSet::new()
        }
    }
}

/// The `k` edges with smallest values (bottleneck edges), ties broken by
/// edge index, so `|S| = min(k, m)` surely.
struct SmallestK {
    count: usize,
}
impl<K: Scalar> PivotalRule<K> for SmallestK {
    fn name(&self) -> &str {
        "smallest-k"
    }
    fn pivotal_set(&self, values: &[K]) -> BTreeSet<usize> {
        let mut idx: Vec<usize> = (0..values.len()).collect();
        idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
        idx.into_iter().take(self.count).collect()
    }
}

pub const RULE_NAMES: [&str; 5] = ["all-edges", "none", "value-match", "majority", "smallest-k"];

/// Look up a rule by name with its JSON parameters.
pub fn rule_from_spec<K: Scalar>(spec: &Value) -> Result<Box<dyn PivotalRule<K>>, ScenarioError> {
    let name = spec
        .get("name")
        .and_then(|v| v.as_str())
        .ok_or_else(|| ScenarioError::BadRuleParams("rule needs a \"name\"".into()))?;
    let value_param = |key: &str| -> Result<K, ScenarioError> {
        let v = spec
            .get(key)
            .ok_or_else(|| ScenarioError::BadRuleParams(format!("rule {name} needs {key:?}")))?;
        K::parse_json(v).map_err(ScenarioError::BadRuleParams)
    };
    match name {
        "all-edges" => Ok(Box::new(AllEdges)),
        "none" => Ok(Box::new(NoEdges)),
        "value-match" => Ok(Box::new(ValueMatch {
            target: value_param("value")?,
        })),
        "majority" => {
            let threshold = spec
                .get("threshold")
                .map(|v| {
                    v.as_u64()
                        .map(|u| u as usize)
                        .ok_or_else(|| ScenarioError::BadRuleParams("threshold must be an integer".into()))
                })
                .transpose()?;
            Ok(Box::new(Majority {
                target: value_param("value")?,
                threshold: threshold.unwrap_or(0),
            }))
        }
        "smallest-k" => {
            let count = spec
                .get("k")
                .and_then(|v| v.as_u64())
                .ok_or_else(|| ScenarioError::BadRuleParams("smallest-k needs integer \"k\"".into()))?;
            Ok(Box::new(SmallestK {
                count: count as usize,
            }))
        }
        other => Err(ScenarioError::UnknownRule {
            name: other.to_string(),
            known: RULE_NAMES.join(", "),
        }),
    }
}

/// Make a `majority` rule with an explicit quorum.
pub fn majority_rule<K: Scalar>(target: K, threshold: usize) -> Box<dyn PivotalRule<K>> {
    Box::new(Majority { target, threshold })
}

/// Make a `smallest-k` rule.
pub fn smallest_k_rule<K: Scalar>(count: usize) -> Box<dyn PivotalRule<K>> {
    Box::new(SmallestK { count })
}

/// Make a `value-match` rule.
pub fn value_match_rule<K: Scalar>(target: K) -> Box<dyn PivotalRule<K>> {
    Box::new(ValueMatch { target })
}

/// Make the `all-edges` rule.
pub fn all_edges_rule<K: Scalar>() -> Box<dyn PivotalRule<K>> {
    Box::new(AllEdges)
}

// ---------------------------------------------------------------------------
// Model
// ---------------------------------------------------------------------------

/// Edge values under a product measure, a pivotal rule, a cap `K`, and a
/// reveal order.
pub struct PivotalModel<K: Scalar> {
    /// Per edge: the value alphabet with probabilities (each sums to 1).
    alphabets: Vec<Vec<(K, K)>>,
    cap: usize,
    rule: Box<dyn PivotalRule<K>>,
    /// `order[j]` is the edge revealed at step `j + 1`.
    order: Vec<usize>,
}

impl<K: Scalar> std::fmt::Debug for PivotalModel<K> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PivotalModel")
            .field("edges", &self.alphabets.len())
            .field("cap", &self.cap)
            .field("rule", &self.rule.name())
            .field("order", &self.order)
            .finish()
    }
}

impl<K: Scalar> PivotalModel<K> {
    pub fn new(
        alphabets: Vec<Vec<(K, K)>>,
        cap: usize,
        rule: Box<dyn PivotalRule<K>>,
        order: Option<Vec<usize>>,
    ) -> Result<Self, ScenarioError> {
        let edges = alphabets.len();
        if edges == 0 {
            return Err(ScenarioError::BadModel("need at least one edge".into()));
        }
        if cap == 0 {
            return Err(ScenarioError::BadModel("cap K must be at least 1".into()));
        }
        let zero = <K as Scalar>::zero();
        for (e, alpha) in alphabets.iter().enumerate() {
            if alpha.is_empty() {
                return Err(ScenarioError::BadModel(format!("edge {e} has an empty alphabet")));
            }
            let mut sum = zero.clone();
            for (_, p) in alpha {
                if p.total_cmp(&zero) != std::cmp::Ordering::Greater {
                    return Err(ScenarioError::BadModel(format!(
                        "edge {e} has a non-positive letter probability"
                    )));
                }
                sum = sum + p.clone();
            }
            if (sum.clone() - K::one()).abs().total_cmp(&K::mass_tol())
                == std::cmp::Ordering::Greater
            {
                return Err(ScenarioError::BadModel(format!(
                    "edge {e} letter probabilities sum to {sum}, expected 1"
                )));
            }
        }
        let order = order.unwrap_or_else(|| (0..edges).collect());
        let mut seen = vec![false; edges];
        if order.len() != edges {
            return Err(ScenarioError::BadModel("order must list every edge once".into()));
        }
        for &e in &order {
            if e >= edges || seen[e] {
                return Err(ScenarioError::BadModel("order must be a permutation of the edges".into()));
            }
            seen[e] = true;
        }
        let model = PivotalModel {
            alphabets,
            cap,
            rule,
            order,
        };
        let states = model.joint_states();
        if states > ENUMERATION_BUDGET {
            return Err(ScenarioError::EnumerationTooLarge {
                states,
                budget: ENUMERATION_BUDGET,
            });
        }
        Ok(model)
    }

    pub fn edges(&self) -> usize {
        self.alphabets.len()
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    pub fn rule_name(&self) -> &str {
        self.rule.name()
    }

    pub fn joint_states(&self) -> u128 {
        self.alphabets
            .iter()
            .map(|a| a.len() as u128)
            .product()
    }

    /// Edge values of a sample given as per-edge letter indices.
    pub fn values_of(&self, sample: &[usize]) -> Vec<K> {
        sample
            .iter()
            .enumerate()
            .map(|(e, &l)| self.alphabets[e][l].0.clone())
            .collect()
    }

    pub fn pivotal_set(&self, sample: &[usize]) -> BTreeSet<usize> {
        self.rule.pivotal_set(&self.values_of(sample))
    }

    pub fn sample_prob(&self, sample: &[usize]) -> K {
        let mut p = K::one();
        for (e, &l) in sample.iter().enumerate() {
            p = p * self.alphabets[e][l].1.clone();
        }
        p
    }
}

// ---------------------------------------------------------------------------
// Single-sample W by direct enumeration
// ---------------------------------------------------------------------------

/// `W`, `W′`, and the per-step terms for one sample, each term computed by
/// exact enumeration over the coordinates not yet revealed.
#[derive(Debug, Clone)]
pub struct PivotalWReport<K: Scalar> {
    pub terms: Vec<K>,
    pub w: K,
    pub w_prime: K,
    pub pivotal_count: usize,
}

pub fn pivotal_w<K: Scalar>(
    model: &PivotalModel<K>,
    sample: &[usize],
) -> Result<PivotalWReport<K>, ScenarioError> {
    let m = model.edges();
    if sample.len() != m || sample.iter().enumerate().any(|(e, &l)| l >= model.alphabets[e].len())
    {
        return Err(ScenarioError::BadModel("sample does not match the alphabets".into()));
    }
    let mut terms = Vec::with_capacity(m);
    for j in 1..=m {
        let revealed: &[usize] = &model.order[..j - 1];
        let edge_j = model.order[j - 1];
        // enumerate all completions of the unrevealed coordinates
        let unrevealed: Vec<usize> = (0..m).filter(|e| !revealed.contains(e)).collect();
        let mut term = <K as Scalar>::zero();
        let mut odometer = vec![0usize; unrevealed.len()];
        loop {
            let mut full = sample.to_vec();
            let mut prob = K::one();
            for (slot, &e) in unrevealed.iter().enumerate() {
                full[e] = odometer[slot];
                prob = prob * model.alphabets[e][odometer[slot]].1.clone();
            }
            if model.pivotal_set(&full).contains(&edge_j) {
                term = term + prob;
            }
            // advance
            let mut carry = true;
            for (slot, &e) in unrevealed.iter().enumerate() {
                if !carry {
                    break;
                }
                odometer[slot] += 1;
                if odometer[slot] < model.alphabets[e].len() {
                    carry = false;
                } else {
                    odometer[slot] = 0;
                }
            }
            if carry {
                break;
            }
        }
        terms.push(term);
    }
    let mut w = <K as Scalar>::zero();
    for t in &terms {
        w = w + t.clone();
    }
    let pivotal_count = model.pivotal_set(sample).len();
    let w_prime = if pivotal_count <= model.cap {
        w.clone()
    } else {
        <K as Scalar>::zero()
    };
    Ok(PivotalWReport {
        terms,
        w,
        w_prime,
        pivotal_count,
    })
}

// ---------------------------------------------------------------------------
// Whole-space verification through the reveal tree
// ---------------------------------------------------------------------------

/// The reveal-filtration tree of a model plus per-leaf sample data.
pub struct RevealTree<K: Scalar> {
    pub tree: ProbTree<K>,
    pub filtration: FiltrationSpec,
    /// Per leaf: per-edge letter indices.
    pub samples: Vec<Vec<usize>>,
}

/// Build the prefix tree of the reveal process: level `j` atoms are the
/// value prefixes of length `j`.
pub fn reveal_tree<K: Scalar>(model: &PivotalModel<K>) -> Result<RevealTree<K>, ScenarioError> {
    let m = model.edges();
    let mut specs = vec![NodeSpec {
        id: "r".to_string(),
        parent: None,
        prob: K::one(),
    }];
    // frontier: (node id, per-edge letters so far)
    let mut frontier: Vec<(String, Vec<usize>)> = vec![("r".to_string(), vec![usize::MAX; m])];
    for j in 1..=m {
        let edge = model.order[j - 1];
        let mut next = Vec::with_capacity(frontier.len() * model.alphabets[edge].len());
        for (parent, letters) in &frontier {
            for (l, (_, p)) in model.alphabets[edge].iter().enumerate() {
                let id = format!("{parent}.{l}");
                specs.push(NodeSpec {
                    id: id.clone(),
                    parent: Some(parent.clone()),
                    prob: p.clone(),
                });
                let mut sample = letters.clone();
                sample[edge] = l;
                next.push((id, sample));
            }
        }
        frontier = next;
    }
    let tree = ProbTree::from_nodes(specs)?;
    // leaves come out in the same construction order
    debug_assert_eq!(tree.leaf_count(), frontier.len());
    let samples = frontier.into_iter().map(|(_, s)| s).collect();
    Ok(RevealTree {
        tree,
        filtration: FiltrationSpec::natural(m),
        samples,
    })
}

/// Full verification of the revelation chain on one model.
#[derive(Debug)]
pub struct Scenario2Report<K: Scalar> {
    pub samples: usize,
    pub cap: usize,
    pub max_pivotal_count: usize,
    pub cap_exceeded_probability: f64,
    /// Pointwise `W′ ≤ Σ_{j≤K} Y_j′ ≤ Σ_{j≤K} Y_j` on every sample.
    pub chain: CheckReport,
    /// Per `j ≤ K`: `Y_j ⪯ ℰ`.
    pub order_checks: Vec<ShortfallReport>,
    /// Per grid λ: `P(W′ > λK) ≤ e^{1−λ}`.
    pub tail_checks: Vec<CheckReport>,
    pub w_prime_law: Distribution<K>,
    pub holds: bool,
}

pub fn verify_scenario2_chain<K: Scalar>(
    model: &PivotalModel<K>,
    lambda_grid: &[K],
    tol: &K,
) -> Result<Scenario2Report<K>, ScenarioError> {
    let reveal = reveal_tree(model)?;
    let tree = &reveal.tree;
    let m = model.edges();
    let n_leaves = tree.leaf_count();
    let zero = <K as Scalar>::zero();

    // pivotal data per leaf
    let mut pivotal_sets: Vec<BTreeSet<usize>> = Vec::with_capacity(n_leaves);
    for sample in &reveal.samples {
        pivotal_sets.push(model.pivotal_set(sample));
    }
    let max_pivotal_count = pivotal_sets.iter().map(|s| s.len()).max().unwrap_or(0);
    let mut cap_exceeded = zero.clone();
    for (pos, &leaf) in tree.leaves().iter().enumerate() {
        if pivotal_sets[pos].len() > model.cap {
            cap_exceeded = cap_exceeded + tree.path_prob(leaf).clone();
        }
    }

    // W per leaf: step-j terms are conditional expectations at level j−1 of
    // the indicator that the edge revealed at step j is pivotal.
    let mut w: Vec<K> = vec![zero.clone(); n_leaves];
    for j in 1..=m {
        let edge = model.order[j - 1];
        let indicator: Vec<K> = pivotal_sets
            .iter()
            .map(|s| if s.contains(&edge) { K::one() } else { zero.clone() })
            .collect();
        let cond = tree.conditional_expectation(&indicator, j - 1)?;
        for (pos, &leaf) in tree.leaves().iter().enumerate() {
            let atom = tree.ancestor_at_level(leaf, j - 1);
            w[pos] = w[pos].clone() + cond[tree.pos_in_level(atom)].clone();
        }
    }
    let w_prime: Vec<K> = w
        .iter()
        .zip(&pivotal_sets)
        .map(|(wv, s)| {
            if s.len() <= model.cap {
                wv.clone()
            } else {
                zero.clone()
            }
        })
        .collect();

    // Z_j per leaf: reveal step of the j-th pivotal edge in reveal order.
    // Reveal step of edge e is its position in the order.
    let mut reveal_step = vec![0usize; m];
    for (step0, &e) in model.order.iter().enumerate() {
        reveal_step[e] = step0 + 1;
    }
    let mut y_sum: Vec<K> = vec![zero.clone(); n_leaves];
    let mut y_prime_sum: Vec<K> = vec![zero.clone(); n_leaves];
    let mut order_checks = Vec::with_capacity(model.cap);
    for j in 1..=model.cap {
        let z_values: Vec<TimeValue> = pivotal_sets
            .iter()
            .map(|s| {
                let mut steps: Vec<usize> = s.iter().map(|&e| reveal_step[e]).collect();
                steps.sort_unstable();
                match steps.get(j - 1) {
                    Some(&step) => TimeValue::Finite(step as u64),
                    None => TimeValue::Infinity,
                }
            })
            .collect();
        let z = RandomTime::new(tree, z_values)?;
        let (y_j, y_j_law) = total_risk(tree, &reveal.filtration, &z, true)?;
        let (y_j_prime, _) = total_risk(tree, &reveal.filtration, &z, false)?;
        for pos in 0..n_leaves {
            y_sum[pos] = y_sum[pos].clone() + y_j[pos].clone();
            y_prime_sum[pos] = y_prime_sum[pos].clone() + y_j_prime[pos].clone();
        }
        order_checks.push(convex_order_vs_exponential(&y_j_law, tol, &[])?);
    }

    // pointwise chain
    let mut chain_worst = f64::INFINITY;
    let mut chain_violation: Option<Witness> = None;
    for (pos, &leaf) in tree.leaves().iter().enumerate() {
        let first = y_prime_sum[pos].clone() - w_prime[pos].clone();
        let second = y_sum[pos].clone() - y_prime_sum[pos].clone();
        for (stage, margin) in [("W' ≤ ΣY'", &first), ("ΣY' ≤ ΣY", &second)] {
            let ok = (margin.clone() + tol.clone()).total_cmp(&zero) != std::cmp::Ordering::Less;
            chain_worst = chain_worst.min(margin.to_f64());
            if !ok && chain_violation.is_none() {
                chain_violation = Some(Witness {
                    step: m,
                    atom: tree.label(leaf).to_string(),
                    detail: format!("{stage} fails by {:.3e}", -margin.to_f64()),
                });
            }
        }
    }
    if chain_worst == f64::INFINITY {
        chain_worst = 0.0;
    }
    let chain = match chain_violation {
        None => CheckReport::passing("revelation_chain", chain_worst),
        Some(wit) => CheckReport::failing("revelation_chain", chain_worst, wit),
    };

    // tail bound at each grid λ
    let w_prime_law = tree.leaf_distribution(&w_prime)?;
    let cap_scalar = K::from_int(model.cap as i64);
    let mut tail_checks = Vec::with_capacity(lambda_grid.len());
    for lambda in lambda_grid {
        let threshold = lambda.clone() * cap_scalar.clone();
        let tail = w_prime_law.tail_above(&threshold);
        let margin_expr = K::Exp::exp_term(K::one(), K::one() - lambda.clone())
            .add(&K::Exp::from_scalar(tol.clone() - tail.clone()));
        let holds = margin_expr.certified_sign() != std::cmp::Ordering::Less;
        let reference = (1.0 - lambda.to_f64()).exp();
        let margin = reference - tail.to_f64();
        tail_checks.push(if holds {
            CheckReport::passing(format!("tail_bound(lambda={lambda})"), margin)
        } else {
            CheckReport::failing(
                format!("tail_bound(lambda={lambda})"),
                margin,
                Witness {
                    step: m,
                    atom: format!("lambda={lambda}"),
                    detail: format!("P(W' > λK) = {tail} exceeds e^(1−λ)"),
                },
            )
        });
    }

    let holds = chain.holds
        && order_checks.iter().all(|r| r.holds)
        && tail_checks.iter().all(|r| r.holds);
    Ok(Scenario2Report {
        samples: n_leaves,
        cap: model.cap,
        max_pivotal_count,
        cap_exceeded_probability: cap_exceeded.to_f64(),
        chain,
        order_checks,
        tail_checks,
        w_prime_law,
        holds,
    })
}
