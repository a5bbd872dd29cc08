//! Finite filtered probability spaces as rooted trees.
//!
//! Nodes are filtration atoms; every edge carries a strictly positive
//! conditional branch probability and children probabilities sum to one.
//! All leaves sit at a common depth `D`, so the partition of leaves induced
//! by the nodes at level `k` is an honest σ-field atom structure, and a
//! filtration is just a nondecreasing map from time steps to levels.
//! Ragged shapes (e.g. survival combs where death can occur early) are
//! encoded by chains of single children with branch probability one.

use std::collections::HashMap;

use thiserror::Error;

use crate::distribution::{DistError, Distribution};
use crate::scalar::{LinearValue, Scalar};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TreeError {
    #[error("children of node {node} have branch probabilities summing to {sum}, expected 1")]
    ProbSumViolation { node: String, sum: String },
    #[error("node {node} is not connected to the root")]
    OrphanNode { node: String },
    #[error("tree must have exactly one parentless node")]
    NoRoot,
    #[error("leaf {node} has depth {found}, but the tree depth is {expected}")]
    NonUniformDepth {
        node: String,
        found: usize,
        expected: usize,
    },
    #[error("branch probability of node {node} must be strictly positive")]
    ZeroBranch { node: String },
    #[error("duplicate node id {node}")]
    DuplicateId { node: String },
    #[error("tree has no nodes")]
    Empty,
    #[error("level {level} out of range 0..={depth}")]
    LevelOutOfRange { level: usize, depth: usize },
    #[error("filtration levels must be nondecreasing")]
    NonMonotoneLevels,
    #[error("filtration must have at least one step")]
    EmptyFiltration,
    #[error("expected {expected} leaf values, got {got}")]
    LeafCountMismatch { expected: usize, got: usize },
    #[error("random time at leaf {node} must be a positive integer or infinity")]
    NonPositiveTime { node: String },
    #[error("mortality row {index} is negative")]
    NegativeMass { index: usize },
    #[error("mortality masses sum to {sum}, expected 1")]
    MassNotOne { sum: String },
    #[error("tail mass from year {year} on is zero")]
    ZeroTail { year: usize },
}

/// One node of the input description.
#[derive(Debug, Clone)]
pub struct NodeSpec<K> {
    pub id: String,
    pub parent: Option<String>,
    /// Conditional branch probability given the parent; ignored for the root.
    pub prob: K,
}

#[derive(Debug, Clone)]
struct Node<K> {
    label: String,
    parent: Option<usize>,
    prob: K,
    depth: usize,
    path_prob: K,
    pos_in_level: usize,
}

/// Validation outcome of [`ProbTree::validate`].
#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub ok: bool,
    pub violation: Option<TreeError>,
}

/// Finite rooted probability tree of uniform leaf depth.
#[derive(Debug, Clone)]
pub struct ProbTree<K: Scalar> {
    nodes: Vec<Node<K>>,
    depth: usize,
    /// node indices per depth, in input order
    levels: Vec<Vec<usize>>,
}

impl<K: Scalar> ProbTree<K> {
    /// Build a tree, returning the first violated invariant if any.
    pub fn from_nodes(specs: Vec<NodeSpec<K>>) -> Result<Self, TreeError> {
        if specs.is_empty() {
            return Err(TreeError::Empty);
        }
        let mut index: HashMap<&str, usize> = HashMap::with_capacity(specs.len());
        for (i, s) in specs.iter().enumerate() {
            if index.insert(s.id.as_str(), i).is_some() {
                return Err(TreeError::DuplicateId { node: s.id.clone() });
            }
        }
        let mut root: Option<usize> = None;
        let mut parents: Vec<Option<usize>> = Vec::with_capacity(specs.len());
        for (i, s) in specs.iter().enumerate() {
            match &s.parent {
                None => {
                    if root.is_some() {
                        return Err(TreeError::OrphanNode { node: s.id.clone() });
                    }
                    root = Some(i);
                    parents.push(None);
                }
                Some(pid) => match index.get(pid.as_str()) {
                    Some(&p) => parents.push(Some(p)),
                    None => return Err(TreeError::OrphanNode { node: s.id.clone() }),
                },
            }
        }
        let root = root.ok_or(TreeError::NoRoot)?;

        // depths via BFS over the child incidence
        let mut children: Vec<Vec<usize>> = vec![Vec::new(); specs.len()];
        for (i, p) in parents.iter().enumerate() {
            if let Some(p) = *p {
                children[p].push(i);
            }
        }
        let mut depth_of: Vec<Option<usize>> = vec![None; specs.len()];
        depth_of[root] = Some(0);
        let mut queue = std::collections::VecDeque::from([root]);
        while let Some(v) = queue.pop_front() {
            let d = depth_of[v].unwrap();
            for &c in &children[v] {
                depth_of[c] = Some(d + 1);
                queue.push_back(c);
            }
        }
        for (i, d) in depth_of.iter().enumerate() {
            if d.is_none() {
                // parent chain never reaches the root (cycle)
                return Err(TreeError::OrphanNode {
                    node: specs[i].id.clone(),
                });
            }
        }

        let zero = <K as Scalar>::zero();
        for (i, s) in specs.iter().enumerate() {
            if i != root && specs[i].prob.total_cmp(&zero) != std::cmp::Ordering::Greater {
                return Err(TreeError::ZeroBranch { node: s.id.clone() });
            }
        }
        for (i, s) in specs.iter().enumerate() {
            if children[i].is_empty() {
                continue;
            }
            let mut sum = <K as Scalar>::zero();
            for &c in &children[i] {
                sum = sum + specs[c].prob.clone();
            }
            let err = (sum.clone() - K::one()).abs();
            if err.total_cmp(&K::mass_tol()) == std::cmp::Ordering::Greater {
                return Err(TreeError::ProbSumViolation {
                    node: s.id.clone(),
                    sum: format!("{sum}"),
                });
            }
        }
        let depth = depth_of.iter().map(|d| d.unwrap()).max().unwrap();
        for (i, s) in specs.iter().enumerate() {
            if children[i].is_empty() && depth_of[i] != Some(depth) {
                return Err(TreeError::NonUniformDepth {
                    node: s.id.clone(),
                    found: depth_of[i].unwrap(),
                    expected: depth,
                });
            }
        }

        let mut levels: Vec<Vec<usize>> = vec![Vec::new(); depth + 1];
        let mut nodes: Vec<Node<K>> = Vec::with_capacity(specs.len());
        for (i, s) in specs.into_iter().enumerate() {
            let d = depth_of[i].unwrap();
            let prob = if i == root { K::one() } else { s.prob };
            let path_prob = match parents[i] {
                None => K::one(),
                Some(p) => nodes_path_prob(&nodes, p) * prob.clone(),
            };
            let pos = levels[d].len();
            levels[d].push(i);
            nodes.push(Node {
                label: s.id,
                parent: parents[i],
                prob,
                depth: d,
                path_prob,
                pos_in_level: pos,
            });
        }
        // parents precede children in BFS depth order, but not necessarily in
        // input order; recompute path probabilities level by level.
        for d in 1..=depth {
            for &i in &levels[d] {
                let p = nodes[i].parent.unwrap();
                nodes[i].path_prob = nodes[p].path_prob.clone() * nodes[i].prob.clone();
            }
        }
        Ok(ProbTree {
            nodes,
            depth,
            levels,
        })
    }

    /// Non-failing validation wrapper: `ok`, or the first violated invariant.
    pub fn validate(specs: Vec<NodeSpec<K>>) -> ValidationReport {
        match Self::from_nodes(specs) {
            Ok(_) => ValidationReport {
                ok: true,
                violation: None,
            },
            Err(e) => ValidationReport {
                ok: false,
                violation: Some(e),
            },
        }
    }

    pub fn depth(&self) -> usize {
        self.depth
    }
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }
    pub fn level_nodes(&self, level: usize) -> &[usize] {
        &self.levels[level]
    }
    /// Leaf node indices (all at the tree depth), in input order.
    pub fn leaves(&self) -> &[usize] {
        &self.levels[self.depth]
    }
    pub fn leaf_count(&self) -> usize {
        self.leaves().len()
    }
    pub fn label(&self, node: usize) -> &str {
        &self.nodes[node].label
    }
    pub fn parent(&self, node: usize) -> Option<usize> {
        self.nodes[node].parent
    }
    pub fn node_depth(&self, node: usize) -> usize {
        self.nodes[node].depth
    }
    pub fn branch_prob(&self, node: usize) -> &K {
        &self.nodes[node].prob
    }
    /// Unconditional probability of reaching `node` from the root.
    pub fn path_prob(&self, node: usize) -> &K {
        &self.nodes[node].path_prob
    }
    /// Position of `node` within its level listing.
    pub fn pos_in_level(&self, node: usize) -> usize {
        self.nodes[node].pos_in_level
    }
    pub fn node_by_label(&self, label: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n.label == label)
    }

    /// Ancestor of `node` at the given (not deeper) level.
    pub fn ancestor_at_level(&self, node: usize, level: usize) -> usize {
        let mut v = node;
        debug_assert!(level <= self.nodes[node].depth);
        while self.nodes[v].depth > level {
            v = self.nodes[v].parent.expect("non-root node has a parent");
        }
        v
    }

    /// `E(x | node)` for every node, by one bottom-up sweep.
    ///
    /// `leaf_values` is aligned with [`ProbTree::leaves`].
    pub fn backward_values<V: LinearValue<K>>(&self, leaf_values: &[V]) -> Vec<V> {
        assert_eq!(leaf_values.len(), self.leaf_count(), "leaf value count");
        let mut vals: Vec<V> = vec![V::zero(); self.nodes.len()];
        for (pos, &leaf) in self.leaves().iter().enumerate() {
            vals[leaf] = leaf_values[pos].clone();
        }
        for d in (1..=self.depth).rev() {
            for &i in &self.levels[d] {
                let p = self.nodes[i].parent.unwrap();
                let contrib = vals[i].scale(&self.nodes[i].prob);
                vals[p] = vals[p].add(&contrib);
            }
        }
        vals
    }

    /// Conditional expectation of a leaf function given the level-`k` atoms,
    /// aligned with [`ProbTree::level_nodes`]`(k)`.
    pub fn conditional_expectation<V: LinearValue<K>>(
        &self,
        leaf_values: &[V],
        level: usize,
    ) -> Result<Vec<V>, TreeError> {
        if level > self.depth {
            return Err(TreeError::LevelOutOfRange {
                level,
                depth: self.depth,
            });
        }
        if leaf_values.len() != self.leaf_count() {
            return Err(TreeError::LeafCountMismatch {
                expected: self.leaf_count(),
                got: leaf_values.len(),
            });
        }
        let vals = self.backward_values(leaf_values);
        Ok(self.levels[level].iter().map(|&i| vals[i].clone()).collect())
    }

    /// Law of a leaf function under the path measure.
    pub fn leaf_distribution(&self, leaf_values: &[K]) -> Result<Distribution<K>, DistError> {
        assert_eq!(leaf_values.len(), self.leaf_count(), "leaf value count");
        let pairs: Vec<(K, K)> = self
            .leaves()
            .iter()
            .enumerate()
            .map(|(pos, &leaf)| (leaf_values[pos].clone(), self.nodes[leaf].path_prob.clone()))
            .collect();
        Distribution::from_pairs(pairs)
    }
}

fn nodes_path_prob<K: Scalar>(nodes: &[Node<K>], idx: usize) -> K {
    nodes
        .get(idx)
        .map(|n| n.path_prob.clone())
        .unwrap_or_else(K::one)
}

// ---------------------------------------------------------------------------
// Filtrations and random times
// ---------------------------------------------------------------------------

/// Nondecreasing map from time steps `0..=T` to tree levels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiltrationSpec {
    levels: Vec<usize>,
}

impl FiltrationSpec {
    pub fn new(levels: Vec<usize>) -> Result<Self, TreeError> {
        if levels.len() < 2 {
            return Err(TreeError::EmptyFiltration);
        }
        if levels.windows(2).any(|w| w[1] < w[0]) {
            return Err(TreeError::NonMonotoneLevels);
        }
        Ok(FiltrationSpec { levels })
    }

    /// `ℓ ≡ 0`: no information at any step.
    pub fn trivial(horizon: usize) -> Self {
        FiltrationSpec {
            levels: vec![0; horizon + 1],
        }
    }

    /// `ℓ ≡ D`: everything known from step 0 on.
    pub fn full(depth: usize, horizon: usize) -> Self {
        FiltrationSpec {
            levels: vec![depth; horizon + 1],
        }
    }

    /// `ℓ(n) = min(n, D)` with horizon `T = D`.
    pub fn natural(depth: usize) -> Self {
        FiltrationSpec {
            levels: (0..=depth).collect(),
        }
    }

    pub fn horizon(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn level_at(&self, step: usize) -> usize {
        self.levels[step]
    }

    pub fn levels(&self) -> &[usize] {
        &self.levels
    }

    pub fn check_against<K: Scalar>(&self, tree: &ProbTree<K>) -> Result<(), TreeError> {
        for &l in &self.levels {
            if l > tree.depth() {
                return Err(TreeError::LevelOutOfRange {
                    level: l,
                    depth: tree.depth(),
                });
            }
        }
        Ok(())
    }
}

/// Value of a random time at one leaf.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeValue {
    Finite(u64),
    Infinity,
}

impl TimeValue {
    pub fn is_finite(&self) -> bool {
        matches!(self, TimeValue::Finite(_))
    }
}

/// Random positive integer time (possibly infinite), one value per leaf.
///
/// No measurability is required: an arbitrary leaf function is allowed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RandomTime {
    values: Vec<TimeValue>,
}

impl RandomTime {
    /// `values` aligned with [`ProbTree::leaves`]; every finite value ≥ 1.
    pub fn new<K: Scalar>(tree: &ProbTree<K>, values: Vec<TimeValue>) -> Result<Self, TreeError> {
        if values.len() != tree.leaf_count() {
            return Err(TreeError::LeafCountMismatch {
                expected: tree.leaf_count(),
                got: values.len(),
            });
        }
        for (pos, v) in values.iter().enumerate() {
            if let TimeValue::Finite(n) = v {
                if *n == 0 {
                    return Err(TreeError::NonPositiveTime {
                        node: tree.label(tree.leaves()[pos]).to_string(),
                    });
                }
            }
        }
        Ok(RandomTime { values })
    }

    pub fn value(&self, leaf_pos: usize) -> TimeValue {
        self.values[leaf_pos]
    }

    pub fn values(&self) -> &[TimeValue] {
        &self.values
    }

    pub fn max_finite(&self) -> Option<u64> {
        self.values
            .iter()
            .filter_map(|v| match v {
                TimeValue::Finite(n) => Some(*n),
                TimeValue::Infinity => None,
            })
            .max()
    }

    pub fn any_infinite(&self) -> bool {
        self.values.iter().any(|v| !v.is_finite())
    }
}

// ---------------------------------------------------------------------------
// Survival combs
// ---------------------------------------------------------------------------

/// Build the survival comb for a lifetime law `q` over years `1..=N`:
/// each year an alive node splits into a death branch (hazard
/// `h_n = q_n / Σ_{k≥n} q_k`) and a survival branch, and death paths are
/// frozen to the uniform depth by chains of single children. Returns the
/// tree, its natural filtration, and the death year as a random time.
///
/// Years with `q_n = 0` simply have no death branch. Trailing zero mass is
/// rejected: the final tail must be positive so the comb terminates.
pub fn survival_comb<K: Scalar>(
    q: &[K],
) -> Result<(ProbTree<K>, FiltrationSpec, RandomTime), TreeError> {
    let n_years = q.len();
    if n_years == 0 {
        return Err(TreeError::Empty);
    }
    let zero = <K as Scalar>::zero();
    for (i, m) in q.iter().enumerate() {
        if m.total_cmp(&zero) == std::cmp::Ordering::Less {
            return Err(TreeError::NegativeMass { index: i });
        }
    }
    let mut total = <K as Scalar>::zero();
    for m in q {
        total = total + m.clone();
    }
    if (total.clone() - K::one()).abs().total_cmp(&K::mass_tol()) == std::cmp::Ordering::Greater {
        return Err(TreeError::MassNotOne {
            sum: format!("{total}"),
        });
    }
    if q[n_years - 1].total_cmp(&zero) != std::cmp::Ordering::Greater {
        return Err(TreeError::ZeroTail { year: n_years });
    }

    let mut specs: Vec<NodeSpec<K>> = Vec::new();
    specs.push(NodeSpec {
        id: "a0".to_string(),
        parent: None,
        prob: K::one(),
    });
    let mut z_values: Vec<(usize, TimeValue)> = Vec::new(); // (spec index of leaf, Z)

    // suffix sums: backward accumulation keeps deep tails accurate
    let mut tails: Vec<K> = vec![<K as Scalar>::zero(); n_years + 1];
    let mut acc = <K as Scalar>::zero();
    for year in (1..=n_years).rev() {
        acc = acc + q[year - 1].clone();
        tails[year] = acc.clone();
    }
    for year in 1..=n_years {
        let hazard = q[year - 1].clone() / tails[year].clone();
        let survive = K::one() - hazard.clone();
        let alive_parent = format!("a{}", year - 1);
        if q[year - 1].total_cmp(&zero) == std::cmp::Ordering::Greater {
            // death branch, frozen down to the uniform depth
            let mut parent = alive_parent.clone();
            for d in year..=n_years {
                let id = format!("d{year}_{d}");
                specs.push(NodeSpec {
                    id: id.clone(),
                    parent: Some(parent),
                    prob: if d == year { hazard.clone() } else { K::one() },
                });
                parent = id;
            }
            z_values.push((specs.len() - 1, TimeValue::Finite(year as u64)));
        }
        if year < n_years {
            specs.push(NodeSpec {
                id: format!("a{year}"),
                parent: Some(alive_parent),
                prob: survive,
            });
        }
    }

    let id_to_z: HashMap<String, TimeValue> = z_values
        .iter()
        .map(|(i, z)| (specs[*i].id.clone(), *z))
        .collect();
    let tree = ProbTree::from_nodes(specs)?;
    let z: Vec<TimeValue> = tree
        .leaves()
        .iter()
        .map(|&leaf| id_to_z[tree.label(leaf)])
        .collect();
    let time = RandomTime::new(&tree, z)?;
    let filtration = FiltrationSpec::natural(n_years);
    Ok((tree, filtration, time))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{rat, rat_int, Rat};

    fn spec<K: Scalar>(id: &str, parent: Option<&str>, prob: K) -> NodeSpec<K> {
        NodeSpec {
            id: id.to_string(),
            parent: parent.map(|s| s.to_string()),
            prob,
        }
    }

    /// Root with two leaf children, probabilities 1/2 each.
    fn minimal() -> Vec<NodeSpec<Rat>> {
        vec![
            spec("r", None, rat_int(1)),
            spec("l", Some("r"), rat(1, 2)),
            spec("h", Some("r"), rat(1, 2)),
        ]
    }

    /// Uniform binary tree of depth 2, all branch probabilities 1/2.
    fn binary_depth2() -> ProbTree<Rat> {
        ProbTree::from_nodes(vec![
            spec("r", None, rat_int(1)),
            spec("0", Some("r"), rat(1, 2)),
            spec("1", Some("r"), rat(1, 2)),
            spec("00", Some("0"), rat(1, 2)),
            spec("01", Some("0"), rat(1, 2)),
            spec("10", Some("1"), rat(1, 2)),
            spec("11", Some("1"), rat(1, 2)),
        ])
        .unwrap()
    }

    #[test]
    fn minimal_tree_is_valid() {
        let report = ProbTree::validate(minimal());
        assert!(report.ok, "{:?}", report.violation);
    }

    #[test]
    fn prob_sum_violation_detected() {
        let nodes = vec![
            spec("r", None, 1.0f64),
            spec("l", Some("r"), 0.6),
            spec("h", Some("r"), 0.5),
        ];
        let report = ProbTree::validate(nodes);
        assert!(!report.ok);
        assert!(matches!(
            report.violation,
            Some(TreeError::ProbSumViolation { ref node, .. }) if node == "r"
        ));
    }

    #[test]
    fn orphan_detected() {
        let mut nodes = minimal();
        nodes.push(spec("x", None, rat_int(1)));
        assert!(matches!(
            ProbTree::validate(nodes).violation,
            Some(TreeError::OrphanNode { ref node }) if node == "x"
        ));
        let mut nodes = minimal();
        nodes.push(spec("y", Some("ghost"), rat(1, 2)));
        assert!(matches!(
            ProbTree::validate(nodes).violation,
            Some(TreeError::OrphanNode { ref node }) if node == "y"
        ));
    }

    #[test]
    fn zero_branch_and_ragged_depth_detected() {
        let mut nodes = minimal();
        nodes[1].prob = rat_int(0);
        nodes[2].prob = rat_int(1);
        assert!(matches!(
            ProbTree::validate(nodes).violation,
            Some(TreeError::ZeroBranch { ref node }) if node == "l"
        ));
        let mut nodes = minimal();
        nodes.push(spec("ll", Some("l"), rat_int(1)));
        assert!(matches!(
            ProbTree::validate(nodes).violation,
            Some(TreeError::NonUniformDepth { ref node, .. }) if node == "h"
        ));
    }

    #[test]
    fn conditioning_on_full_information_returns_x() {
        let tree = binary_depth2();
        let x: Vec<Rat> = (0..4).map(rat_int).collect();
        let ce = tree.conditional_expectation(&x, 2).unwrap();
        assert_eq!(ce, x);
    }

    #[test]
    fn conditioning_on_trivial_field_returns_mean() {
        let tree = binary_depth2();
        let x: Vec<Rat> = (0..4).map(rat_int).collect();
        let ce = tree.conditional_expectation(&x, 0).unwrap();
        assert_eq!(ce, vec![rat(3, 2)]);
    }

    #[test]
    fn conditioning_at_middle_level() {
        let tree = binary_depth2();
        let x: Vec<Rat> = (0..4).map(rat_int).collect();
        let ce = tree.conditional_expectation(&x, 1).unwrap();
        assert_eq!(ce, vec![rat(1, 2), rat(5, 2)]);
    }

    #[test]
    fn level_out_of_range() {
        let tree = binary_depth2();
        let x: Vec<Rat> = (0..4).map(rat_int).collect();
        assert!(matches!(
            tree.conditional_expectation(&x, 3),
            Err(TreeError::LevelOutOfRange { .. })
        ));
    }

    /// Independent oracle: weights from explicit root-to-leaf path products,
    /// leaves located by ancestor walks. No shared code with the sweep.
    fn oracle_condexp(tree: &ProbTree<Rat>, x: &[Rat], level: usize) -> Vec<Rat> {
        tree.level_nodes(level)
            .iter()
            .map(|&atom| {
                let mut total = rat_int(0);
                let mut mass = rat_int(0);
                for (pos, &leaf) in tree.leaves().iter().enumerate() {
                    if tree.ancestor_at_level(leaf, level) != atom {
                        continue;
                    }
                    let mut w = rat_int(1);
                    let mut v = leaf;
                    loop {
                        w *= tree.branch_prob(v).clone();
                        match tree.parent(v) {
                            Some(p) => v = p,
                            None => break,
                        }
                    }
                    total += w.clone() * x[pos].clone();
                    mass += w;
                }
                total / mass
            })
            .collect()
    }

    #[test]
    fn sweep_matches_path_enumeration_oracle() {
        let tree = ProbTree::from_nodes(vec![
            spec("r", None, rat_int(1)),
            spec("a", Some("r"), rat(1, 3)),
            spec("b", Some("r"), rat(2, 3)),
            spec("a0", Some("a"), rat(1, 4)),
            spec("a1", Some("a"), rat(3, 4)),
            spec("b0", Some("b"), rat(1, 2)),
            spec("b1", Some("b"), rat(1, 2)),
        ])
        .unwrap();
        let x = vec![rat(7, 2), rat(-1, 3), rat_int(2), rat(5, 4)];
        for level in 0..=2 {
            assert_eq!(
                tree.conditional_expectation(&x, level).unwrap(),
                oracle_condexp(&tree, &x, level),
                "level {level}"
            );
        }
    }

    #[test]
    fn tower_property_exact() {
        let tree = binary_depth2();
        let x = vec![rat(1, 3), rat_int(2), rat(-5, 7), rat(9, 4)];
        let inner = tree.conditional_expectation(&x, 1).unwrap();
        // lift level-1 values back to leaves, then condition on level 0
        let lifted: Vec<Rat> = tree
            .leaves()
            .iter()
            .map(|&leaf| {
                let anc = tree.ancestor_at_level(leaf, 1);
                inner[tree.pos_in_level(anc)].clone()
            })
            .collect();
        assert_eq!(
            tree.conditional_expectation(&lifted, 0).unwrap(),
            tree.conditional_expectation(&x, 0).unwrap()
        );
    }

    #[test]
    fn leaf_distribution_examples() {
        let tree = ProbTree::from_nodes(minimal()).unwrap();
        // constant function → point mass
        let d = tree.leaf_distribution(&[rat_int(4), rat_int(4)]).unwrap();
        assert_eq!(d.support(), &[(rat_int(4), rat_int(1))]);
        // distinct values → uniform two-point law
        let d = tree.leaf_distribution(&[rat_int(0), rat_int(1)]).unwrap();
        assert_eq!(
            d.support(),
            &[(rat_int(0), rat(1, 2)), (rat_int(1), rat(1, 2))]
        );
        // merging across unequal path probabilities
        let tree = ProbTree::from_nodes(vec![
            spec("r", None, rat_int(1)),
            spec("l", Some("r"), rat(1, 3)),
            spec("h", Some("r"), rat(2, 3)),
        ])
        .unwrap();
        let d = tree.leaf_distribution(&[rat_int(1), rat_int(1)]).unwrap();
        assert_eq!(d.support(), &[(rat_int(1), rat_int(1))]);
    }

    #[test]
    fn path_probabilities_sum_to_one() {
        let tree = binary_depth2();
        let mut sum = rat_int(0);
        for &leaf in tree.leaves() {
            sum += tree.path_prob(leaf).clone();
        }
        assert_eq!(sum, rat_int(1));
    }

    #[test]
    fn filtration_validation() {
        assert!(FiltrationSpec::new(vec![0, 1, 1, 3]).is_ok());
        assert!(matches!(
            FiltrationSpec::new(vec![0, 2, 1]),
            Err(TreeError::NonMonotoneLevels)
        ));
        assert!(matches!(
            FiltrationSpec::new(vec![0]),
            Err(TreeError::EmptyFiltration)
        ));
        let f = FiltrationSpec::natural(3);
        assert_eq!(f.horizon(), 3);
        assert_eq!(f.levels(), &[0, 1, 2, 3]);
    }

    #[test]
    fn survival_comb_two_point_uniform() {
        let q = vec![rat(1, 2), rat(1, 2)];
        let (tree, filt, z) = survival_comb(&q).unwrap();
        assert_eq!(tree.depth(), 2);
        assert_eq!(filt.levels(), &[0, 1, 2]);
        assert_eq!(tree.leaf_count(), 2);
        // leaf order: d1 chain first, then d2
        let labels: Vec<&str> = tree.leaves().iter().map(|&l| tree.label(l)).collect();
        assert_eq!(labels, vec!["d1_2", "d2_2"]);
        assert_eq!(z.values(), &[TimeValue::Finite(1), TimeValue::Finite(2)]);
        for &leaf in tree.leaves() {
            assert_eq!(tree.path_prob(leaf), &rat(1, 2));
        }
    }

    #[test]
    fn survival_comb_rejects_bad_mass() {
        assert!(matches!(
            survival_comb(&[rat(1, 2), rat(1, 4)]),
            Err(TreeError::MassNotOne { .. })
        ));
        assert!(matches!(
            survival_comb(&[rat_int(1), rat_int(0)]),
            Err(TreeError::ZeroTail { year: 2 })
        ));
        // an interior zero year is fine: no death branch that year
        let (tree, _, z) = survival_comb(&[rat(1, 2), rat_int(0), rat(1, 2)]).unwrap();
        assert_eq!(tree.leaf_count(), 2);
        assert_eq!(z.values(), &[TimeValue::Finite(1), TimeValue::Finite(3)]);
    }
}
