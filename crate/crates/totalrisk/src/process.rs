//! Adapted step processes and raw nondecreasing path processes.

use thiserror::Error;

use crate::scalar::{LinearValue, Scalar};
use crate::tree::{FiltrationSpec, ProbTree};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProcessError {
    #[error("process horizon {got} does not match the filtration horizon {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("expected {expected} leaf paths, got {got}")]
    LeafCountMismatch { expected: usize, got: usize },
    #[error("path of leaf {leaf} must start at 0")]
    NotStartingAtZero { leaf: String },
    #[error("path of leaf {leaf} decreases at step {step}")]
    Decreasing { leaf: String, step: usize },
    #[error("path of leaf {leaf} ends at {value}, expected 1")]
    TerminalNotOne { leaf: String, value: String },
    #[error("path of leaf {leaf} ends at {value} > 1")]
    TerminalAboveOne { leaf: String, value: String },
}

/// How the terminal value of a raw increasing process is constrained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TerminalRule {
    /// `A(T) = 1` on every path.
    ExactlyOne,
    /// `A(T) ≤ 1`; used for rescaled processes that stop short of full mass.
    AtMostOne,
}

/// Per-leaf nondecreasing step paths `A(leaf, 0..=T)` with `A(0) = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct RawIncreasingProcess<K: Scalar> {
    paths: Vec<Vec<K>>,
}

impl<K: Scalar> RawIncreasingProcess<K> {
    /// `paths` aligned with [`ProbTree::leaves`], each of length `T + 1`.
    pub fn new(
        tree: &ProbTree<K>,
        paths: Vec<Vec<K>>,
        terminal: TerminalRule,
    ) -> Result<Self, ProcessError> {
        if paths.len() != tree.leaf_count() {
            return Err(ProcessError::LeafCountMismatch {
                expected: tree.leaf_count(),
                got: paths.len(),
            });
        }
        let horizon = paths.first().map(|p| p.len().saturating_sub(1)).unwrap_or(0);
        let zero = <K as Scalar>::zero();
        let one = K::one();
        for (pos, path) in paths.iter().enumerate() {
            let leaf = || tree.label(tree.leaves()[pos]).to_string();
            if path.len() != horizon + 1 {
                return Err(ProcessError::DimensionMismatch {
                    expected: horizon,
                    got: path.len().saturating_sub(1),
                });
            }
            if (path[0].clone() - zero.clone()).abs().total_cmp(&K::mass_tol())
                == std::cmp::Ordering::Greater
            {
                return Err(ProcessError::NotStartingAtZero { leaf: leaf() });
            }
            for step in 1..path.len() {
                if path[step].total_cmp(&path[step - 1]) == std::cmp::Ordering::Less {
                    return Err(ProcessError::Decreasing {
                        leaf: leaf(),
                        step,
                    });
                }
            }
            let last = &path[horizon];
            let dev = (last.clone() - one.clone()).abs();
            match terminal {
                TerminalRule::ExactlyOne => {
                    if dev.total_cmp(&K::mass_tol()) == std::cmp::Ordering::Greater {
                        return Err(ProcessError::TerminalNotOne {
                            leaf: leaf(),
                            value: format!("{last}"),
                        });
                    }
                }
                TerminalRule::AtMostOne => {
                    if last.total_cmp(&one) == std::cmp::Ordering::Greater
                        && dev.total_cmp(&K::mass_tol()) == std::cmp::Ordering::Greater
                    {
                        return Err(ProcessError::TerminalAboveOne {
                            leaf: leaf(),
                            value: format!("{last}"),
                        });
                    }
                }
            }
        }
        Ok(RawIncreasingProcess { paths })
    }

    /// The indicator process `A(leaf, n) = 1_{Z(leaf) ≤ n}`.
    ///
    /// Infinite times yield all-zero paths, so use [`TerminalRule::AtMostOne`]
    /// downstream when `Z` may be infinite.
    pub fn indicator_of_time(
        tree: &ProbTree<K>,
        z: &crate::tree::RandomTime,
        horizon: usize,
    ) -> Self {
        assert_eq!(z.values().len(), tree.leaf_count(), "Z/leaf alignment");
        let paths = z
            .values()
            .iter()
            .map(|zv| {
                (0..=horizon)
                    .map(|n| match zv {
                        crate::tree::TimeValue::Finite(k) if *k <= n as u64 => K::one(),
                        _ => <K as Scalar>::zero(),
                    })
                    .collect()
            })
            .collect();
        // structurally valid by construction
        RawIncreasingProcess { paths }
    }

    pub fn horizon(&self) -> usize {
        self.paths[0].len() - 1
    }

    pub fn value(&self, leaf_pos: usize, step: usize) -> &K {
        &self.paths[leaf_pos][step]
    }

    /// Column of values at one step, aligned with leaves.
    pub fn step_values(&self, step: usize) -> Vec<K> {
        self.paths.iter().map(|p| p[step].clone()).collect()
    }

    /// Column of increments `A(·, step) − A(·, step − 1)`.
    pub fn increments(&self, step: usize) -> Vec<K> {
        self.paths
            .iter()
            .map(|p| p[step].clone() - p[step - 1].clone())
            .collect()
    }
}

/// Step process adapted to a filtration: one value per atom of each step.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptedProcess<V> {
    /// `steps[n]` aligned with `tree.level_nodes(ℓ(n))`.
    steps: Vec<Vec<V>>,
    levels: Vec<usize>,
}

impl<V: Clone> AdaptedProcess<V> {
    pub fn new(steps: Vec<Vec<V>>, filtration: &FiltrationSpec) -> Self {
        assert_eq!(steps.len(), filtration.horizon() + 1);
        AdaptedProcess {
            steps,
            levels: filtration.levels().to_vec(),
        }
    }

    pub fn horizon(&self) -> usize {
        self.steps.len() - 1
    }

    /// Tree level of the step-`n` atoms.
    pub fn level_at(&self, step: usize) -> usize {
        self.levels[step]
    }

    pub fn step(&self, n: usize) -> &[V] {
        &self.steps[n]
    }

    /// Value at the step-`n` atom containing `node` (node at depth ≥ ℓ(n)).
    pub fn value_at<K: Scalar>(&self, tree: &ProbTree<K>, step: usize, node: usize) -> &V {
        let atom = tree.ancestor_at_level(node, self.levels[step]);
        &self.steps[step][tree.pos_in_level(atom)]
    }

    /// Restriction to the leaves: per-leaf value at the given step.
    pub fn on_leaves<K: Scalar>(&self, tree: &ProbTree<K>, step: usize) -> Vec<V> {
        tree.leaves()
            .iter()
            .map(|&leaf| self.value_at(tree, step, leaf).clone())
            .collect()
    }
}

impl<V: Clone + std::fmt::Debug + Send + Sync + 'static> AdaptedProcess<V> {
    /// Pointwise combination of two processes on the same filtration.
    pub fn zip_with<F: Fn(&V, &V) -> V>(&self, other: &Self, f: F) -> Self {
        assert_eq!(self.levels, other.levels);
        let steps = self
            .steps
            .iter()
            .zip(&other.steps)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| f(x, y)).collect())
            .collect();
        AdaptedProcess {
            steps,
            levels: self.levels.clone(),
        }
    }
}

/// Build an adapted process from a constant-per-step scalar sequence.
pub fn constant_adapted<K: Scalar, V: LinearValue<K>>(
    tree: &ProbTree<K>,
    filtration: &FiltrationSpec,
    per_step: &[V],
) -> AdaptedProcess<V> {
    assert_eq!(per_step.len(), filtration.horizon() + 1);
    let steps = per_step
        .iter()
        .enumerate()
        .map(|(n, v)| vec![v.clone(); tree.level_nodes(filtration.level_at(n)).len()])
        .collect();
    AdaptedProcess::new(steps, filtration)
}
