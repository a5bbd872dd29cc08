//! Optional projections, discrete dual previsible projections (compensators),
//! total risk of a random time, the exponential supermartingale, and the
//! stopped tail bound.
//!
//! For a raw nondecreasing path process `A` on a filtered tree:
//!
//! - the optional projection is `ᵒA_n = E(A_n | F_n)` per atom;
//! - the compensator accumulates previsible increments,
//!   `Aᵖ_n = Σ_{k≤n} E(A_k − A_{k−1} | F_{k−1})`, so its step-`n` value is
//!   constant on the step-`(n−1)` atoms;
//! - the total risk of a random time `Z` is `Y = Σ_{n<T} P(Z = n+1 | F_n)`,
//!   optionally plus `P(Z = ∞ | F_T)`, and coincides with the terminal
//!   compensator of `A = 1_{Z ≤ n}` when `Z` is finite;
//! - `M_n = e^{Aᵖ_n}(1 − ᵒA_n)` is a supermartingale and `Aᵖ − ᵒA` is a
//!   martingale, both checkable atom by atom;
//! - for λ > 0 and the previsible hitting time `τ = min{n : Aᵖ_n ≥ λ}`,
//!   the stopped bound `e^{−λ} ≥ E[(1−ᵒA_τ) + ΔᵒA_τ·(Aᵖ_τ−λ)/ΔAᵖ_τ]` holds,
//!   and the right side equals `E(Aᵖ_T − λ)⁺` identically.

use thiserror::Error;

use crate::distribution::{DistError, Distribution};
use crate::process::{AdaptedProcess, ProcessError, RawIncreasingProcess};
use crate::report::{CheckReport, Witness};
use crate::scalar::{ExpValue, LinearValue, Scalar};
use crate::tree::{FiltrationSpec, ProbTree, RandomTime, TimeValue, TreeError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CompensatorError {
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Process(#[from] ProcessError),
    #[error(transparent)]
    Distribution(#[from] DistError),
    #[error("finite time {time} at leaf {leaf} exceeds the horizon {horizon}")]
    HorizonTooShort {
        leaf: String,
        time: u64,
        horizon: usize,
    },
    #[error("lambda must be strictly positive")]
    NonPositiveLambda,
}

/// Optional projection and compensator of one raw process.
#[derive(Debug, Clone)]
pub struct ProjectionPair<K: Scalar> {
    pub optional: AdaptedProcess<K>,
    pub compensator: AdaptedProcess<K>,
}

/// Compute `ᵒA` and `Aᵖ` on the given filtration.
pub fn project<K: Scalar>(
    tree: &ProbTree<K>,
    filtration: &FiltrationSpec,
    a: &RawIncreasingProcess<K>,
) -> Result<ProjectionPair<K>, CompensatorError> {
    filtration.check_against(tree)?;
    let horizon = filtration.horizon();
    if a.horizon() != horizon {
        return Err(ProcessError::DimensionMismatch {
            expected: horizon,
            got: a.horizon(),
        }
        .into());
    }

    let mut optional_steps = Vec::with_capacity(horizon + 1);
    for n in 0..=horizon {
        optional_steps.push(tree.conditional_expectation(&a.step_values(n), filtration.level_at(n))?);
    }

    let mut compensator_steps = Vec::with_capacity(horizon + 1);
    compensator_steps.push(vec![
        <K as Scalar>::zero();
        tree.level_nodes(filtration.level_at(0)).len()
    ]);
    // running totals, always aligned with the previous step's atoms
    let mut cumulative: Vec<K> = compensator_steps[0].clone();
    for n in 1..=horizon {
        let prev_level = filtration.level_at(n - 1);
        let increments = tree.conditional_expectation(&a.increments(n), prev_level)?;
        for (i, inc) in increments.into_iter().enumerate() {
            cumulative[i] = cumulative[i].clone() + inc;
        }
        let level = filtration.level_at(n);
        let lifted: Vec<K> = tree
            .level_nodes(level)
            .iter()
            .map(|&w| {
                let anc = tree.ancestor_at_level(w, prev_level);
                cumulative[tree.pos_in_level(anc)].clone()
            })
            .collect();
        compensator_steps.push(lifted.clone());
        cumulative = lifted;
    }

    Ok(ProjectionPair {
        optional: AdaptedProcess::new(optional_steps, filtration),
        compensator: AdaptedProcess::new(compensator_steps, filtration),
    })
}

/// Accumulated conditional hazard `Y(leaf) = Σ_{n<T} P(Z = n+1 | F_n)`,
/// plus `P(Z = ∞ | F_T)` when `include_infinity_term` is set. Returns the
/// per-leaf values and their law.
pub fn total_risk<K: Scalar>(
    tree: &ProbTree<K>,
    filtration: &FiltrationSpec,
    z: &RandomTime,
    include_infinity_term: bool,
) -> Result<(Vec<K>, Distribution<K>), CompensatorError> {
    filtration.check_against(tree)?;
    let horizon = filtration.horizon();
    for (pos, zv) in z.values().iter().enumerate() {
        if let TimeValue::Finite(k) = zv {
            if *k as usize > horizon {
                return Err(CompensatorError::HorizonTooShort {
                    leaf: tree.label(tree.leaves()[pos]).to_string(),
                    time: *k,
                    horizon,
                });
            }
        }
    }

    // Per-node accumulator: the step-n hazard lives on the ℓ(n) atoms, and a
    // leaf's Y is the sum over its ancestor chain.
    let mut acc: Vec<K> = vec![<K as Scalar>::zero(); tree.node_count()];
    let mut add_conditional = |indicator: Vec<K>, level: usize| -> Result<(), CompensatorError> {
        let cond = tree.conditional_expectation(&indicator, level)?;
        for (i, &node) in tree.level_nodes(level).iter().enumerate() {
            acc[node] = acc[node].clone() + cond[i].clone();
        }
        Ok(())
    };
    for n in 0..horizon {
        let target = (n + 1) as u64;
        let indicator: Vec<K> = z
            .values()
            .iter()
            .map(|zv| match zv {
                TimeValue::Finite(k) if *k == target => K::one(),
                _ => <K as Scalar>::zero(),
            })
            .collect();
        add_conditional(indicator, filtration.level_at(n))?;
    }
    if include_infinity_term && z.any_infinite() {
        let indicator: Vec<K> = z
            .values()
            .iter()
            .map(|zv| match zv {
                TimeValue::Infinity => K::one(),
                _ => <K as Scalar>::zero(),
            })
            .collect();
        add_conditional(indicator, filtration.level_at(horizon))?;
    }

    let mut totals: Vec<K> = vec![<K as Scalar>::zero(); tree.node_count()];
    for depth in 0..=tree.depth() {
        for &i in tree.level_nodes(depth) {
            let from_parent = tree
                .parent(i)
                .map(|p| totals[p].clone())
                .unwrap_or_else(<K as Scalar>::zero);
            totals[i] = acc[i].clone() + from_parent;
        }
    }
    let y: Vec<K> = tree.leaves().iter().map(|&l| totals[l].clone()).collect();
    let law = tree.leaf_distribution(&y)?;
    Ok((y, law))
}

/// The exponential supermartingale `M_n = e^{Aᵖ_n}(1 − ᵒA_n)` per atom.
///
/// In exact mode the values are symbolic exponential terms, so downstream
/// checks stay certified.
pub fn supermartingale_process<K: Scalar>(
    tree: &ProbTree<K>,
    filtration: &FiltrationSpec,
    a: &RawIncreasingProcess<K>,
) -> Result<AdaptedProcess<K::Exp>, CompensatorError> {
    let pair = project(tree, filtration, a)?;
    Ok(supermartingale_from_pair(&pair, filtration))
}

/// Assemble `M` from an existing projection pair.
pub fn supermartingale_from_pair<K: Scalar>(
    pair: &ProjectionPair<K>,
    filtration: &FiltrationSpec,
) -> AdaptedProcess<K::Exp> {
    let steps: Vec<Vec<K::Exp>> = (0..=pair.optional.horizon())
        .map(|n| {
            pair.optional
                .step(n)
                .iter()
                .zip(pair.compensator.step(n))
                .map(|(oa, ap)| K::Exp::exp_term(K::one() - oa.clone(), ap.clone()))
                .collect()
        })
        .collect();
    AdaptedProcess::new(steps, filtration)
}

/// Verify `E(M_{n+1} | v) ≤ M_n(v) + tol` on every atom `v` of every step.
///
/// `worst_margin` is the smallest slack `M_n(v) − E(M_{n+1}|v)` seen;
/// the witness is the most violating atom, if any.
pub fn check_supermartingale<K: Scalar>(
    tree: &ProbTree<K>,
    filtration: &FiltrationSpec,
    m: &AdaptedProcess<K::Exp>,
    tol: &K,
) -> CheckReport {
    let horizon = m.horizon();
    let mut worst = f64::INFINITY;
    let mut violation: Option<(f64, Witness)> = None;
    for n in 0..horizon {
        let level = filtration.level_at(n);
        let next_level = filtration.level_at(n + 1);
        let atoms = tree.level_nodes(level);
        let mut conditional: Vec<K::Exp> = vec![K::Exp::zero(); atoms.len()];
        for (iw, &w) in tree.level_nodes(next_level).iter().enumerate() {
            let v = tree.ancestor_at_level(w, level);
            let weight = tree.path_prob(w).clone() / tree.path_prob(v).clone();
            let contrib = m.step(n + 1)[iw].scale(&weight);
            let pos = tree.pos_in_level(v);
            conditional[pos] = conditional[pos].add(&contrib);
        }
        for (iv, &v) in atoms.iter().enumerate() {
            let margin = m.step(n)[iv].sub(&conditional[iv]);
            let ok = margin
                .add(&K::Exp::from_scalar(tol.clone()))
                .certified_sign()
                != std::cmp::Ordering::Less;
            let mf = margin.to_f64();
            worst = worst.min(mf);
            if !ok && violation.as_ref().map(|(w, _)| mf < *w).unwrap_or(true) {
                violation = Some((
                    mf,
                    Witness {
                        step: n,
                        atom: tree.label(v).to_string(),
                        detail: format!("E(M_{{n+1}}|atom) exceeds M_n by {:.3e}", -mf),
                    },
                ));
            }
        }
    }
    if worst == f64::INFINITY {
        worst = 0.0;
    }
    match violation {
        None => CheckReport::passing("supermartingale", worst),
        Some((_, w)) => CheckReport::failing("supermartingale", worst, w),
    }
}

/// Verify that `Aᵖ − ᵒA` has conditionally vanishing increments:
/// `E(D_{n+1} − D_n | v) = 0` (within `tol`) on every atom.
///
/// `worst_margin` is `−max |deviation|`, so 0 means an exact martingale.
pub fn check_projection_martingale<K: Scalar>(
    tree: &ProbTree<K>,
    filtration: &FiltrationSpec,
    pair: &ProjectionPair<K>,
    tol: &K,
) -> CheckReport {
    let horizon = pair.optional.horizon();
    let diff: Vec<Vec<K>> = (0..=horizon)
        .map(|n| {
            pair.compensator
                .step(n)
                .iter()
                .zip(pair.optional.step(n))
                .map(|(ap, oa)| ap.clone() - oa.clone())
                .collect()
        })
        .collect();
    let mut max_dev = <K as Scalar>::zero();
    let mut violation: Option<Witness> = None;
    for n in 0..horizon {
        let level = filtration.level_at(n);
        let next_level = filtration.level_at(n + 1);
        let atoms = tree.level_nodes(level);
        let mut conditional: Vec<K> = vec![<K as Scalar>::zero(); atoms.len()];
        for (iw, &w) in tree.level_nodes(next_level).iter().enumerate() {
            let v = tree.ancestor_at_level(w, level);
            let weight = tree.path_prob(w).clone() / tree.path_prob(v).clone();
            let pos = tree.pos_in_level(v);
            conditional[pos] = conditional[pos].clone() + diff[n + 1][iw].clone() * weight;
        }
        for (iv, &v) in atoms.iter().enumerate() {
            let deviation = (conditional[iv].clone() - diff[n][iv].clone()).abs();
            if deviation.total_cmp(&max_dev) == std::cmp::Ordering::Greater {
                max_dev = deviation.clone();
            }
            if deviation.total_cmp(tol) == std::cmp::Ordering::Greater && violation.is_none() {
                violation = Some(Witness {
                    step: n,
                    atom: tree.label(v).to_string(),
                    detail: format!("martingale increment deviates by {}", deviation),
                });
            }
        }
    }
    let worst = -max_dev.to_f64();
    match violation {
        None => CheckReport::passing("projection_martingale", worst),
        Some(w) => CheckReport::failing("projection_martingale", worst, w),
    }
}

/// Result of the stopped tail bound at one λ.
#[derive(Debug, Clone)]
pub struct StoppedBoundReport<K: Scalar> {
    pub lambda: K,
    /// `E[(1 − ᵒA_τ) + ΔᵒA_τ·(Aᵖ_τ − λ)/ΔAᵖ_τ]` with the τ = ∞ term zero.
    pub rhs: K,
    /// `e^{−λ}` as a display value; the verdict is certified separately.
    pub reference: f64,
    /// `E(Aᵖ_T − λ)⁺`, which the rhs must reproduce identically.
    pub terminal_shortfall: K,
    pub holds: bool,
    pub rhs_matches_terminal: bool,
    /// `P(τ ≤ T)`.
    pub hit_probability: K,
}

/// Evaluate the stopped bound at `lambda > 0`.
///
/// Discrete-time conventions: left limits at τ are step-`(τ−1)` values, and
/// `τ = 0` would use `ᵒA_{τ−} = Aᵖ_{τ−} = 0` (unreachable for λ > 0 since
/// `Aᵖ_0 = 0`). Paths that never hit contribute zero; a hit with
/// `ΔAᵖ_τ = 0` contributes `1 − ᵒA_τ`.
pub fn stopped_bound<K: Scalar>(
    tree: &ProbTree<K>,
    filtration: &FiltrationSpec,
    a: &RawIncreasingProcess<K>,
    lambda: &K,
    tol: &K,
) -> Result<StoppedBoundReport<K>, CompensatorError> {
    if lambda.total_cmp(&<K as Scalar>::zero()) != std::cmp::Ordering::Greater {
        return Err(CompensatorError::NonPositiveLambda);
    }
    let pair = project(tree, filtration, a)?;
    let horizon = filtration.horizon();

    let mut rhs = <K as Scalar>::zero();
    let mut terminal_shortfall = <K as Scalar>::zero();
    let mut hit_probability = <K as Scalar>::zero();
    for &leaf in tree.leaves() {
        let weight = tree.path_prob(leaf).clone();
        let tau = (1..=horizon).find(|&n| {
            pair.compensator
                .value_at(tree, n, leaf)
                .total_cmp(lambda)
                != std::cmp::Ordering::Less
        });
        if let Some(tau) = tau {
            hit_probability = hit_probability + weight.clone();
            let ap_tau = pair.compensator.value_at(tree, tau, leaf).clone();
            let ap_prev = pair.compensator.value_at(tree, tau - 1, leaf).clone();
            let oa_tau = pair.optional.value_at(tree, tau, leaf).clone();
            let oa_prev = pair.optional.value_at(tree, tau - 1, leaf).clone();
            let jump = ap_tau.clone() - ap_prev;
            let integrand = if jump.is_zero() {
                K::one() - oa_tau
            } else {
                let interp = (ap_tau - lambda.clone()) / jump;
                (K::one() - oa_tau.clone()) + (oa_tau - oa_prev) * interp
            };
            rhs = rhs + weight.clone() * integrand;
        }
        let ap_end = pair.compensator.value_at(tree, horizon, leaf);
        terminal_shortfall = terminal_shortfall + weight * ap_end.pos_part_minus(lambda);
    }

    let bound_margin = K::Exp::exp_term(K::one(), -lambda.clone())
        .add(&K::Exp::from_scalar(tol.clone() - rhs.clone()));
    let holds = bound_margin.certified_sign() != std::cmp::Ordering::Less;
    let rhs_matches_terminal = (rhs.clone() - terminal_shortfall.clone())
        .abs()
        .total_cmp(tol)
        != std::cmp::Ordering::Greater;

    Ok(StoppedBoundReport {
        lambda: lambda.clone(),
        rhs,
        reference: (-lambda.to_f64()).exp(),
        terminal_shortfall,
        holds,
        rhs_matches_terminal,
        hit_probability,
    })
}

/// Closed-form total-risk law of a survival comb under its natural
/// filtration: death in year `k` (probability `q_k`) accumulates the hazards
/// `h_1 + … + h_k`. Equal to `total_risk` on [`crate::tree::survival_comb`],
/// but linear in the number of years.
pub fn natural_comb_risk_law<K: Scalar>(q: &[K]) -> Result<Distribution<K>, CompensatorError> {
    if q.is_empty() {
        return Err(TreeError::Empty.into());
    }
    // suffix sums keep deep tails accurate in float mode
    let mut tails = vec![<K as Scalar>::zero(); q.len() + 1];
    for i in (0..q.len()).rev() {
        tails[i] = tails[i + 1].clone() + q[i].clone();
    }
    let mut cum = <K as Scalar>::zero();
    let mut pairs = Vec::new();
    for (i, mass) in q.iter().enumerate() {
        if tails[i].total_cmp(&<K as Scalar>::zero()) != std::cmp::Ordering::Greater {
            return Err(TreeError::ZeroTail { year: i + 1 }.into());
        }
        let hazard = mass.clone() / tails[i].clone();
        cum = cum + hazard;
        if !mass.is_zero() {
            pairs.push((cum.clone(), mass.clone()));
        }
    }
    Ok(Distribution::from_pairs(pairs)?)
}
