//! Shared generators for the oracle and acceptance suites: structured tree
//! shape enumeration, deterministic probability cycling from the normalized
//! five-value set, level-map enumeration, Z patterns, and seeded random
//! fleets in exact arithmetic.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use totalrisk::exact::{rat, rat_int, Rat};
use totalrisk::process::{RawIncreasingProcess, TerminalRule};
use totalrisk::tree::{FiltrationSpec, NodeSpec, ProbTree, RandomTime, TimeValue};
use totalrisk::Scalar;

pub fn node(id: String, parent: Option<String>, prob: Rat) -> NodeSpec<Rat> {
    NodeSpec { id, parent, prob }
}

/// The five admissible base weights.
pub fn base_weights() -> [Rat; 5] {
    [rat(1, 4), rat(1, 3), rat(1, 2), rat(2, 3), rat(3, 4)]
}

/// `count` branch probabilities from the base set (cycled from `salt`),
/// normalized to sum exactly one.
pub fn normalized_probs(count: usize, salt: usize) -> Vec<Rat> {
    let base = base_weights();
    let picks: Vec<Rat> = (0..count).map(|i| base[(salt + i) % base.len()].clone()).collect();
    let mut total = rat_int(0);
    for p in &picks {
        total += p.clone();
    }
    picks.into_iter().map(|p| p / total.clone()).collect()
}

/// A tree shape: children counts per node, level by level (BFS order).
pub type Shape = Vec<Vec<usize>>;

/// All shapes of exactly the given depth with branching in `1..=max_branch`,
/// capped at `limit` shapes per recursion level to keep depth-3 structured
/// rather than fully exhaustive.
pub fn shapes(depth: usize, max_branch: usize, limit: usize) -> Vec<Shape> {
    if depth == 0 {
        return vec![vec![]];
    }
    // enumerate the root level then recurse on the remaining depth per level
    fn level_options(nodes: usize, max_branch: usize, limit: usize) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new()];
        for _ in 0..nodes {
            let mut next = Vec::new();
            for prefix in &out {
                for c in 1..=max_branch {
                    let mut row = prefix.clone();
                    row.push(c);
                    next.push(row);
                }
            }
            out = next;
            if out.len() > limit {
                out.truncate(limit);
            }
        }
        out
    }
    let mut result: Vec<Shape> = vec![vec![]];
    let mut widths: Vec<usize> = vec![1];
    for level in 0..depth {
        let mut next_result = Vec::new();
        let mut next_widths = Vec::new();
        for (shape, &width) in result.iter().zip(widths.iter()) {
            for row in level_options(width, max_branch, limit) {
                let mut s = shape.clone();
                let w: usize = row.iter().sum();
                s.push(row);
                next_result.push(s);
                next_widths.push(w);
            }
        }
        // keep the enumeration structured: spread-preserving truncation
        if next_result.len() > limit {
            let stride = next_result.len() / limit + 1;
            let picked: Vec<usize> = (0..next_result.len()).step_by(stride).collect();
            next_result = picked.iter().map(|&i| next_result[i].clone()).collect();
            next_widths = picked.iter().map(|&i| next_widths[i]).collect();
        }
        let _ = level;
        result = next_result;
        widths = next_widths;
    }
    result
}

/// Build the tree of a shape with probabilities cycled from `salt`.
pub fn tree_of_shape(shape: &Shape, salt: usize) -> ProbTree<Rat> {
    let mut specs = vec![node("n0".to_string(), None, rat_int(1))];
    let mut frontier = vec!["n0".to_string()];
    let mut counter = salt;
    let mut next_id = 1usize;
    for row in shape {
        assert_eq!(row.len(), frontier.len(), "shape width mismatch");
        let mut next_frontier = Vec::new();
        for (parent, &children) in frontier.iter().zip(row.iter()) {
            let probs = normalized_probs(children, counter);
            counter += 1;
            for p in probs {
                let id = format!("n{next_id}");
                next_id += 1;
                specs.push(node(id.clone(), Some(parent.clone()), p));
                next_frontier.push(id);
            }
        }
        frontier = next_frontier;
    }
    ProbTree::from_nodes(specs).expect("generated shape is valid")
}

/// Every nondecreasing level map `{0..horizon} → {0..depth}`.
pub fn all_filtrations(depth: usize, horizon: usize) -> Vec<FiltrationSpec> {
    let mut out = Vec::new();
    let mut stack: Vec<Vec<usize>> = vec![vec![]];
    while let Some(prefix) = stack.pop() {
        if prefix.len() == horizon + 1 {
            out.push(FiltrationSpec::new(prefix).unwrap());
            continue;
        }
        let lo = prefix.last().copied().unwrap_or(0);
        for l in lo..=depth {
            let mut next = prefix.clone();
            next.push(l);
            stack.push(next);
        }
    }
    out.sort_by(|a, b| a.levels().cmp(b.levels()));
    out
}

/// Structured Z patterns: strides, constants, and ∞-sprinkled rows.
pub fn z_patterns(tree: &ProbTree<Rat>, horizon: usize, with_infinity: bool) -> Vec<RandomTime> {
    let leaves = tree.leaf_count();
    let t = horizon as u64;
    let mut patterns: Vec<Vec<TimeValue>> = Vec::new();
    patterns.push(vec![TimeValue::Finite(1); leaves]);
    patterns.push(vec![TimeValue::Finite(t); leaves]);
    for (stride, offset) in [(1u64, 0u64), (2, 1), (3, 2)] {
        patterns.push(
            (0..leaves as u64)
                .map(|i| TimeValue::Finite(1 + (i * stride + offset) % t))
                .collect(),
        );
    }
    if with_infinity && leaves >= 2 {
        patterns.push(
            (0..leaves as u64)
                .map(|i| {
                    if i % 3 == 2 {
                        TimeValue::Infinity
                    } else {
                        TimeValue::Finite(1 + i % t)
                    }
                })
                .collect(),
        );
    }
    patterns
        .into_iter()
        .map(|values| RandomTime::new(tree, values).unwrap())
        .collect()
}

// ---------------------------------------------------------------------------
// Seeded random fleets
// ---------------------------------------------------------------------------

pub fn fleet_rng(seed: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(seed)
}

/// Random rational in `[0, 1]` with denominator up to `max_den`.
pub fn random_unit_rat(rng: &mut ChaCha12Rng, max_den: u64) -> Rat {
    let den = rng.random_range(1..=max_den);
    let num = rng.random_range(0..=den);
    rat(num as i64, den as i64)
}

pub fn random_tree(rng: &mut ChaCha12Rng, max_depth: usize, max_branch: usize) -> ProbTree<Rat> {
    let depth = rng.random_range(1..=max_depth);
    let mut specs = vec![node("n0".to_string(), None, rat_int(1))];
    let mut frontier = vec!["n0".to_string()];
    let mut next_id = 1usize;
    for _ in 0..depth {
        let mut next_frontier = Vec::new();
        for parent in &frontier {
            let children = rng.random_range(1..=max_branch);
            let weights: Vec<i64> = (0..children).map(|_| rng.random_range(1..=6)).collect();
            let total: i64 = weights.iter().sum();
            for w in weights {
                let id = format!("n{next_id}");
                next_id += 1;
                specs.push(node(id.clone(), Some(parent.clone()), rat(w, total)));
                next_frontier.push(id);
            }
        }
        frontier = next_frontier;
    }
    ProbTree::from_nodes(specs).expect("generated tree is valid")
}

pub fn random_filtration(
    rng: &mut ChaCha12Rng,
    depth: usize,
    horizon: usize,
) -> FiltrationSpec {
    let mut levels = Vec::with_capacity(horizon + 1);
    let mut current = 0usize;
    for step in 0..=horizon {
        if step > 0 {
            current = rng.random_range(current..=depth);
        } else {
            current = rng.random_range(0..=depth);
        }
        levels.push(current);
    }
    FiltrationSpec::new(levels).unwrap()
}

pub fn random_time(
    rng: &mut ChaCha12Rng,
    tree: &ProbTree<Rat>,
    horizon: usize,
    infinity_weight: u32,
) -> RandomTime {
    let values = (0..tree.leaf_count())
        .map(|_| {
            if infinity_weight > 0 && rng.random_range(0..10) < infinity_weight {
                TimeValue::Infinity
            } else {
                TimeValue::Finite(rng.random_range(1..=horizon as u64))
            }
        })
        .collect();
    RandomTime::new(tree, values).unwrap()
}

/// Random nondecreasing per-leaf paths from 0 to exactly 1.
pub fn random_increasing_process(
    rng: &mut ChaCha12Rng,
    tree: &ProbTree<Rat>,
    horizon: usize,
) -> RawIncreasingProcess<Rat> {
    let paths: Vec<Vec<Rat>> = (0..tree.leaf_count())
        .map(|_| {
            let mut weights: Vec<i64> = (0..horizon).map(|_| rng.random_range(0..=4)).collect();
            if weights.iter().all(|&w| w == 0) {
                weights[rng.random_range(0..horizon)] = 1;
            }
            let total: i64 = weights.iter().sum();
            let mut path = Vec::with_capacity(horizon + 1);
            let mut cum = rat_int(0);
            path.push(cum.clone());
            for w in weights {
                cum += rat(w, total);
                path.push(cum.clone());
            }
            path
        })
        .collect();
    RawIncreasingProcess::new(tree, paths, TerminalRule::ExactlyOne).unwrap()
}

/// Random adapted increment rows (constant on the step-`k` atoms by
/// construction), values in `[0, 1]`.
pub fn random_adapted_rows(
    rng: &mut ChaCha12Rng,
    tree: &ProbTree<Rat>,
    filtration: &FiltrationSpec,
) -> Vec<Vec<Rat>> {
    let horizon = filtration.horizon();
    let per_step_atom: Vec<Vec<Rat>> = (1..=horizon)
        .map(|k| {
            let atoms = tree.level_nodes(filtration.level_at(k)).len();
            (0..atoms).map(|_| random_unit_rat(rng, 4)).collect()
        })
        .collect();
    tree.leaves()
        .iter()
        .map(|&leaf| {
            (1..=horizon)
                .map(|k| {
                    let atom = tree.ancestor_at_level(leaf, filtration.level_at(k));
                    per_step_atom[k - 1][tree.pos_in_level(atom)].clone()
                })
                .collect()
        })
        .collect()
}

/// Mean-one random finite laws (float mode) for checkpoint-soundness tests.
pub fn random_mean_one_f64(rng: &mut ChaCha12Rng, max_support: usize) -> Vec<(f64, f64)> {
    let size = rng.random_range(2..=max_support);
    let values: Vec<f64> = (0..size)
        .map(|_| (rng.random::<f64>() * 4.0 * 100.0).round() / 100.0)
        .collect();
    let weights: Vec<f64> = (0..size).map(|_| rng.random::<f64>() + 0.01).collect();
    let wsum: f64 = weights.iter().sum();
    let probs: Vec<f64> = weights.iter().map(|w| w / wsum).collect();
    let mean: f64 = values.iter().zip(&probs).map(|(v, p)| v * p).sum();
    if mean <= 1e-6 {
        return vec![(1.0, 1.0)];
    }
    values
        .iter()
        .zip(&probs)
        .map(|(v, p)| (v / mean, *p))
        .collect()
}

pub fn exact_zero() -> Rat {
    rat_int(0)
}

pub fn exact_one() -> Rat {
    rat_int(1)
}

pub fn scalar_one_f64() -> f64 {
    <f64 as Scalar>::one()
}
