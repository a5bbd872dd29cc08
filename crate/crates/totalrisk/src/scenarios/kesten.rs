//! Joint tail bound for conditional sums of adapted nonnegative increments.
//!
//! For adapted increments `U_1, …, U_N ≥ 0` and thresholds `R, T > 0`, the
//! event that the previsible sum `Σ E(U_k | F_{k−1})` reaches `R` while the
//! realized sum stays at or below `T` has probability at most `e^{1−R/T}`.
//! Two routes are computed:
//!
//! - the joint probability itself, by exhaustive leaf enumeration;
//! - the rescaled-process route: the compensator of
//!   `A_n = T^{−1} Σ_{k≤n} U_k · 1_{Σ U ≤ T}` (a raw nondecreasing process
//!   with terminal value at most one), whose terminal law must satisfy the
//!   exponential tail bound at `λ = R/T`.
//!
//! Both verdicts are reported and must agree on the fleet.

use crate::compensator::project;
use crate::convex::exp_tail_bound;
use crate::process::{AdaptedProcess, RawIncreasingProcess, TerminalRule};
use crate::report::{CheckReport, Witness};
use crate::scalar::{ExpValue, LinearValue, Scalar};
use crate::tree::{FiltrationSpec, ProbTree};

use super::ScenarioError;

/// Adapted nonnegative increments with thresholds.
pub struct KestenInstance<K: Scalar> {
    pub tree: ProbTree<K>,
    pub filtration: FiltrationSpec,
    /// `increments[k - 1]` is `U_k`, aligned with the level-`ℓ(k)` atoms.
    increments: Vec<Vec<K>>,
    pub r_threshold: K,
    pub t_threshold: K,
}

impl<K: Scalar> KestenInstance<K> {
    /// Build from per-leaf increment rows (`rows[leaf][k-1] = U_k(leaf)`),
    /// checking nonnegativity and step-`k` measurability.
    pub fn from_leaf_rows(
        tree: ProbTree<K>,
        filtration: FiltrationSpec,
        rows: &[Vec<K>],
        r_threshold: K,
        t_threshold: K,
    ) -> Result<Self, ScenarioError> {
        let zero = <K as Scalar>::zero();
        if r_threshold.total_cmp(&zero) != std::cmp::Ordering::Greater
            || t_threshold.total_cmp(&zero) != std::cmp::Ordering::Greater
        {
            return Err(ScenarioError::NonPositiveThreshold);
        }
        filtration.check_against(&tree).map_err(ScenarioError::Tree)?;
        let horizon = filtration.horizon();
        if rows.len() != tree.leaf_count() || rows.iter().any(|r| r.len() != horizon) {
            return Err(ScenarioError::BadModel(format!(
                "need one row of {horizon} increments per leaf"
            )));
        }
        for (pos, row) in rows.iter().enumerate() {
            for (k0, u) in row.iter().enumerate() {
                if u.total_cmp(&zero) == std::cmp::Ordering::Less {
                    return Err(ScenarioError::NegativeIncrement {
                        leaf: tree.label(tree.leaves()[pos]).to_string(),
                        step: k0 + 1,
                    });
                }
            }
        }
        // measurability: U_k constant on the level-ℓ(k) atoms
        let mut increments = Vec::with_capacity(horizon);
        for k in 1..=horizon {
            let level = filtration.level_at(k);
            let atoms = tree.level_nodes(level);
            let mut per_atom: Vec<Option<K>> = vec![None; atoms.len()];
            for (pos, &leaf) in tree.leaves().iter().enumerate() {
                let atom = tree.ancestor_at_level(leaf, level);
                let slot = &mut per_atom[tree.pos_in_level(atom)];
                match slot {
                    None => *slot = Some(rows[pos][k - 1].clone()),
                    Some(v) if *v == rows[pos][k - 1] => {}
                    Some(_) => {
                        return Err(ScenarioError::NotAdapted {
                            step: k,
                            atom: tree.label(atom).to_string(),
                        })
                    }
                }
            }
            increments.push(per_atom.into_iter().map(|v| v.unwrap()).collect());
        }
        Ok(KestenInstance {
            tree,
            filtration,
            increments,
            r_threshold,
            t_threshold,
        })
    }

    pub fn horizon(&self) -> usize {
        self.filtration.horizon()
    }

    /// `U_k` on the level-`ℓ(k)` atoms.
    pub fn increment_atoms(&self, k: usize) -> &[K] {
        &self.increments[k - 1]
    }

    /// `U_k(leaf)`.
    pub fn increment_on_leaf(&self, k: usize, leaf: usize) -> &K {
        let level = self.filtration.level_at(k);
        let atom = self.tree.ancestor_at_level(leaf, level);
        &self.increments[k - 1][self.tree.pos_in_level(atom)]
    }

    /// The increments as an adapted process (zero at step 0).
    pub fn adapted(&self) -> AdaptedProcess<K> {
        let mut steps = Vec::with_capacity(self.horizon() + 1);
        steps.push(vec![
            <K as Scalar>::zero();
            self.tree.level_nodes(self.filtration.level_at(0)).len()
        ]);
        steps.extend(self.increments.iter().cloned());
        AdaptedProcess::new(steps, &self.filtration)
    }
}

/// Outcome of the joint tail check.
#[derive(Debug, Clone)]
pub struct KestenReport<K: Scalar> {
    /// `P(Σ E(U_k|F_{k−1}) ≥ R and Σ U_k ≤ T)`, exact by enumeration.
    pub joint_probability: K,
    /// `e^{1−R/T}` (display).
    pub bound: f64,
    /// Joint probability ≤ bound, certified.
    pub holds: bool,
    /// The rescaled-process route: tail of the terminal compensator at `R/T`.
    pub rescaled_tail: CheckReport,
    pub routes_agree: bool,
}

/// Verify `P(Σ E(U_k|F_{k−1}) ≥ R, Σ U_k ≤ T) ≤ e^{1−R/T}` both directly
/// and through the rescaled process.
pub fn kesten_check<K: Scalar>(
    instance: &KestenInstance<K>,
    tol: &K,
) -> Result<KestenReport<K>, ScenarioError> {
    let tree = &instance.tree;
    let filtration = &instance.filtration;
    let horizon = instance.horizon();
    let zero = <K as Scalar>::zero();

    // previsible sums per leaf: Σ_k E(U_k | F_{k−1})
    let mut previsible_sum: Vec<K> = vec![zero.clone(); tree.leaf_count()];
    for k in 1..=horizon {
        let level = filtration.level_at(k);
        let leaf_values: Vec<K> = tree
            .leaves()
            .iter()
            .map(|&leaf| {
                let atom = tree.ancestor_at_level(leaf, level);
                instance.increments[k - 1][tree.pos_in_level(atom)].clone()
            })
            .collect();
        let cond = tree.conditional_expectation(&leaf_values, filtration.level_at(k - 1))?;
        for (pos, &leaf) in tree.leaves().iter().enumerate() {
            let atom = tree.ancestor_at_level(leaf, filtration.level_at(k - 1));
            previsible_sum[pos] =
                previsible_sum[pos].clone() + cond[tree.pos_in_level(atom)].clone();
        }
    }
    // realized sums per leaf
    let realized_sum: Vec<K> = (0..tree.leaf_count())
        .map(|pos| {
            let mut s = zero.clone();
            for k in 1..=horizon {
                s = s + instance
                    .increment_on_leaf(k, tree.leaves()[pos])
                    .clone();
            }
            s
        })
        .collect();

    let mut joint_probability = zero.clone();
    for (pos, &leaf) in tree.leaves().iter().enumerate() {
        let hit_previsible =
            previsible_sum[pos].total_cmp(&instance.r_threshold) != std::cmp::Ordering::Less;
        let within_realized =
            realized_sum[pos].total_cmp(&instance.t_threshold) != std::cmp::Ordering::Greater;
        if hit_previsible && within_realized {
            joint_probability = joint_probability + tree.path_prob(leaf).clone();
        }
    }

    let ratio = instance.r_threshold.clone() / instance.t_threshold.clone();
    let margin_expr = K::Exp::exp_term(K::one(), K::one() - ratio.clone())
        .add(&K::Exp::from_scalar(tol.clone() - joint_probability.clone()));
    let holds = margin_expr.certified_sign() != std::cmp::Ordering::Less;
    let bound = exp_tail_bound(ratio.to_f64());

    // rescaled route: A_n = (Σ_{k≤n} U_k)/T on the event {Σ U ≤ T}, else 0
    let paths: Vec<Vec<K>> = (0..tree.leaf_count())
        .map(|pos| {
            let on_event =
                realized_sum[pos].total_cmp(&instance.t_threshold) != std::cmp::Ordering::Greater;
            let mut path = Vec::with_capacity(horizon + 1);
            let mut cum = zero.clone();
            path.push(zero.clone());
            for k in 1..=horizon {
                cum = cum + instance.increment_on_leaf(k, tree.leaves()[pos]).clone();
                path.push(if on_event {
                    cum.clone() / instance.t_threshold.clone()
                } else {
                    zero.clone()
                });
            }
            path
        })
        .collect();
    let rescaled = RawIncreasingProcess::new(tree, paths, TerminalRule::AtMostOne)
        .map_err(crate::compensator::CompensatorError::Process)?;
    let pair = project(tree, filtration, &rescaled)?;
    let terminal = pair.compensator.on_leaves(tree, horizon);
    let mut tail = zero.clone();
    for (pos, &leaf) in tree.leaves().iter().enumerate() {
        if terminal[pos].total_cmp(&ratio) == std::cmp::Ordering::Greater {
            tail = tail + tree.path_prob(leaf).clone();
        }
    }
    let rescaled_expr = K::Exp::exp_term(K::one(), K::one() - ratio.clone())
        .add(&K::Exp::from_scalar(tol.clone() - tail.clone()));
    let rescaled_holds = rescaled_expr.certified_sign() != std::cmp::Ordering::Less;
    let rescaled_margin = bound - tail.to_f64();
    let rescaled_tail = if rescaled_holds {
        CheckReport::passing("rescaled_compensator_tail", rescaled_margin)
    } else {
        CheckReport::failing(
            "rescaled_compensator_tail",
            rescaled_margin,
            Witness {
                step: horizon,
                atom: format!("lambda={ratio}"),
                detail: format!("P(Ap_T > R/T) = {tail} exceeds e^(1−R/T)"),
            },
        )
    };

    Ok(KestenReport {
        joint_probability,
        bound,
        holds,
        routes_agree: holds == rescaled_tail.holds,
        rescaled_tail,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{rat, rat_int, Rat};
    use crate::tree::NodeSpec;

    fn spec(id: &str, parent: Option<&str>, prob: Rat) -> NodeSpec<Rat> {
        NodeSpec {
            id: id.to_string(),
            parent: parent.map(|s| s.to_string()),
            prob,
        }
    }

    /// Uniform binary tree of depth 2 with natural filtration.
    fn binary2() -> (ProbTree<Rat>, FiltrationSpec) {
        let tree = ProbTree::from_nodes(vec![
            spec("r", None, rat_int(1)),
            spec("0", Some("r"), rat(1, 2)),
            spec("1", Some("r"), rat(1, 2)),
            spec("00", Some("0"), rat(1, 2)),
            spec("01", Some("0"), rat(1, 2)),
            spec("10", Some("1"), rat(1, 2)),
            spec("11", Some("1"), rat(1, 2)),
        ])
        .unwrap();
        (tree, FiltrationSpec::natural(2))
    }

    #[test]
    fn adaptedness_enforced() {
        let (tree, filt) = binary2();
        // U_1 must be constant on level-1 atoms; leaves 00 and 01 disagree
        let rows = vec![
            vec![rat_int(1), rat_int(0)],
            vec![rat_int(2), rat_int(0)],
            vec![rat_int(1), rat_int(0)],
            vec![rat_int(1), rat_int(0)],
        ];
        assert!(matches!(
            KestenInstance::from_leaf_rows(tree, filt, &rows, rat_int(1), rat_int(1)),
            Err(ScenarioError::NotAdapted { step: 1, .. })
        ));
    }

    #[test]
    fn vacuous_when_r_below_t() {
        let (tree, filt) = binary2();
        let rows = vec![vec![rat(1, 2), rat(1, 2)]; 4];
        let inst =
            KestenInstance::from_leaf_rows(tree, filt, &rows, rat(1, 2), rat_int(2)).unwrap();
        let report = kesten_check(&inst, &rat_int(0)).unwrap();
        assert_eq!(report.joint_probability, rat_int(1));
        assert!(report.bound >= 1.0);
        assert!(report.holds);
        assert!(report.routes_agree);
    }

    #[test]
    fn empty_event_when_deterministic_sum_exceeds_t() {
        let (tree, filt) = binary2();
        // deterministic increments, realized sum 2 > T = 1, R/T = 3
        let rows = vec![vec![rat_int(1), rat_int(1)]; 4];
        let inst = KestenInstance::from_leaf_rows(tree, filt, &rows, rat_int(3), rat_int(1)).unwrap();
        let report = kesten_check(&inst, &rat_int(0)).unwrap();
        assert_eq!(report.joint_probability, rat_int(0));
        assert!(report.holds);
        assert!(report.routes_agree);
    }

    #[test]
    fn mixed_instance_exact_probability() {
        let (tree, filt) = binary2();
        // U_1 = 1/2 everywhere; U_2 = 1 on the 0-branch, 0 on the 1-branch.
        let rows = vec![
            vec![rat(1, 2), rat_int(1)],
            vec![rat(1, 2), rat_int(1)],
            vec![rat(1, 2), rat_int(0)],
            vec![rat(1, 2), rat_int(0)],
        ];
        // previsible sum = 1/2 + E(U_2|F_1) = 1/2 + {1 on 0-branch, 0 on 1-branch}
        // realized sums: 3/2 on 0-branch, 1/2 on 1-branch
        let inst = KestenInstance::from_leaf_rows(
            tree,
            filt,
            &rows,
            rat(3, 2),
            rat_int(1),
        )
        .unwrap();
        let report = kesten_check(&inst, &rat_int(0)).unwrap();
        // previsible hits 3/2 only on the 0-branch, where realized = 3/2 > 1
        assert_eq!(report.joint_probability, rat_int(0));
        assert!(report.holds);
        assert!(report.routes_agree);
    }
}
