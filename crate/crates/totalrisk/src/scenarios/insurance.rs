//! Yearly life-insurance premium models.
//!
//! A mortality table gives the lifetime law `q_1, …, q_N`. The fair yearly
//! premium is the hazard `h_n = q_n / Σ_{k≥n} q_k` while the policy holder
//! is alive, or more generally the conditional death probability given the
//! information available. The lifetime premium total (in units of face
//! value) is exactly the total risk of the death year, so its law follows
//! from `total_risk` on the built model.
//!
//! Three information structures are supported:
//!
//! - `none`: the natural yearly alive/dead observation;
//! - `oracle`: the death year is revealed at time 0;
//! - `health-chain`: a finite-state Markov chain observed yearly modulates
//!   the one-year death probability through per-state weights, calibrated
//!   by forward tail-matching so the marginal law of the death year is
//!   exactly `q`. Infeasible weight/chain combinations are rejected.

use crate::scalar::Scalar;
use crate::tree::{survival_comb, FiltrationSpec, NodeSpec, ProbTree, RandomTime, TimeValue};

use super::ScenarioError;

/// Lifetime law `q_1 … q_N` over years.
#[derive(Debug, Clone)]
pub struct MortalityTable<K: Scalar> {
    q: Vec<K>,
}

impl<K: Scalar> MortalityTable<K> {
    pub fn new(q: Vec<K>) -> Result<Self, ScenarioError> {
        if q.is_empty() {
            return Err(ScenarioError::EmptyTable);
        }
        let zero = <K as Scalar>::zero();
        for (i, mass) in q.iter().enumerate() {
            if mass.total_cmp(&zero) == std::cmp::Ordering::Less {
                return Err(ScenarioError::NegativeMass { year: i + 1 });
            }
        }
        let mut sum = <K as Scalar>::zero();
        for mass in &q {
            sum = sum + mass.clone();
        }
        if (sum.clone() - K::one()).abs().total_cmp(&K::mass_tol()) == std::cmp::Ordering::Greater
        {
            return Err(ScenarioError::MassNotOne {
                sum: format!("{sum}"),
            });
        }
        if q[q.len() - 1].total_cmp(&zero) != std::cmp::Ordering::Greater {
            return Err(ScenarioError::ZeroTail { year: q.len() });
        }
        Ok(MortalityTable { q })
    }

    pub fn years(&self) -> usize {
        self.q.len()
    }

    pub fn masses(&self) -> &[K] {
        &self.q
    }

    /// Hazard sequence `h_n = q_n / Σ_{k≥n} q_k`; always ends at 1.
    pub fn hazards(&self) -> Vec<K> {
        // suffix sums keep deep tails accurate in float mode
        let n = self.q.len();
        let mut tails = vec![<K as Scalar>::zero(); n + 1];
        for i in (0..n).rev() {
            tails[i] = tails[i + 1].clone() + self.q[i].clone();
        }
        self.q
            .iter()
            .enumerate()
            .map(|(i, mass)| mass.clone() / tails[i].clone())
            .collect()
    }
}

/// Hazard sequence of a table (the `mortality_hazard` operation).
pub fn mortality_hazard<K: Scalar>(q: &MortalityTable<K>) -> Vec<K> {
    q.hazards()
}

/// Finite-state yearly health chain with death-rate weights.
#[derive(Debug, Clone)]
pub struct HealthChainSpec<K> {
    /// Initial state distribution (drawn at the start of year 1).
    pub initial: Vec<K>,
    /// Row-stochastic transition matrix applied at the start of each later year.
    pub transition: Vec<Vec<K>>,
    /// Strictly positive per-state death-rate multipliers.
    pub weights: Vec<K>,
}

/// Information structure of an insurance model.
#[derive(Debug, Clone)]
pub enum SignalSpec<K> {
    /// Natural filtration: alive/dead observed yearly.
    None,
    /// Death year revealed at time 0.
    Oracle,
    /// Health chain observed yearly.
    HealthChain(HealthChainSpec<K>),
}

impl<K> SignalSpec<K> {
    pub fn name(&self) -> &'static str {
        match self {
            SignalSpec::None => "none",
            SignalSpec::Oracle => "oracle",
            SignalSpec::HealthChain(_) => "health-chain",
        }
    }
}

/// A built insurance model: run `total_risk` on it for the premium law.
#[derive(Debug, Clone)]
pub struct InsuranceModel<K: Scalar> {
    pub tree: ProbTree<K>,
    pub filtration: FiltrationSpec,
    pub death_year: RandomTime,
}

/// Build the filtered model for a mortality table and a signal structure.
///
/// Calibration invariant: the law of `death_year` on the built tree equals
/// `q` (exactly in rational mode).
pub fn build_insurance_model<K: Scalar>(
    table: &MortalityTable<K>,
    signal: &SignalSpec<K>,
) -> Result<InsuranceModel<K>, ScenarioError> {
    match signal {
        SignalSpec::None => {
            let (tree, filtration, death_year) = survival_comb(table.masses())?;
            Ok(InsuranceModel {
                tree,
                filtration,
                death_year,
            })
        }
        SignalSpec::Oracle => {
            let (tree, _, death_year) = survival_comb(table.masses())?;
            let filtration = FiltrationSpec::full(tree.depth(), table.years());
            Ok(InsuranceModel {
                tree,
                filtration,
                death_year,
            })
        }
        SignalSpec::HealthChain(chain) => build_health_chain_model(table, chain),
    }
}

/// Forward tail-matching calibration: with alive-state masses `a_n(s)` at
/// the start of year `n`, the year-`n` death probability in state `s` is
/// `c_n·w_s` with `c_n = q_n / Σ_s a_n(s)·w_s`. The final year kills
/// every survivor outright (its tail mass forces death probability one).
fn calibrate_death_probs<K: Scalar>(
    table: &MortalityTable<K>,
    chain: &HealthChainSpec<K>,
) -> Result<Vec<Vec<K>>, ScenarioError> {
    let states = chain.weights.len();
    let years = table.years();
    let zero = <K as Scalar>::zero();
    let one = K::one();

    if chain.initial.len() != states || chain.transition.len() != states {
        return Err(ScenarioError::BadModel(
            "initial/transition/weights dimensions disagree".into(),
        ));
    }
    for row in &chain.transition {
        if row.len() != states {
            return Err(ScenarioError::BadModel("transition matrix not square".into()));
        }
        let mut sum = zero.clone();
        for p in row {
            if p.total_cmp(&zero) == std::cmp::Ordering::Less {
                return Err(ScenarioError::BadModel("negative transition probability".into()));
            }
            sum = sum + p.clone();
        }
        if (sum.clone() - one.clone()).abs().total_cmp(&K::mass_tol())
            == std::cmp::Ordering::Greater
        {
            return Err(ScenarioError::BadModel(format!(
                "transition row sums to {sum}, expected 1"
            )));
        }
    }
    for w in &chain.weights {
        if w.total_cmp(&zero) != std::cmp::Ordering::Greater {
            return Err(ScenarioError::BadModel("weights must be strictly positive".into()));
        }
    }

    let mut alive: Vec<K> = chain.initial.clone();
    let mut death_probs: Vec<Vec<K>> = Vec::with_capacity(years);
    for year in 1..=years {
        if year == years {
            death_probs.push(vec![one.clone(); states]);
            break;
        }
        let mut weighted = zero.clone();
        for (s, a) in alive.iter().enumerate() {
            weighted = weighted + a.clone() * chain.weights[s].clone();
        }
        let q_n = &table.masses()[year - 1];
        let scale = if q_n.is_zero() {
            zero.clone()
        } else {
            if weighted.total_cmp(&zero) != std::cmp::Ordering::Greater {
                return Err(ScenarioError::CalibrationInfeasible {
                    year,
                    detail: "no alive mass left to carry the required death mass".into(),
                });
            }
            q_n.clone() / weighted
        };
        let mut row = Vec::with_capacity(states);
        for (s, a) in alive.iter().enumerate() {
            let d = scale.clone() * chain.weights[s].clone();
            if a.total_cmp(&zero) == std::cmp::Ordering::Greater
                && d.total_cmp(&one) == std::cmp::Ordering::Greater
            {
                return Err(ScenarioError::CalibrationInfeasible {
                    year,
                    detail: format!("state {s} would need death probability {d} > 1"),
                });
            }
            row.push(d);
        }
        // advance alive masses: survive year, then transition
        let mut next = vec![zero.clone(); states];
        for (s, a) in alive.iter().enumerate() {
            let surviving = a.clone() * (one.clone() - row[s].clone());
            for (s2, p) in chain.transition[s].iter().enumerate() {
                next[s2] = next[s2].clone() + surviving.clone() * p.clone();
            }
        }
        alive = next;
        death_probs.push(row);
    }
    Ok(death_probs)
}

fn build_health_chain_model<K: Scalar>(
    table: &MortalityTable<K>,
    chain: &HealthChainSpec<K>,
) -> Result<InsuranceModel<K>, ScenarioError> {
    let death_probs = calibrate_death_probs(table, chain)?;
    let states = chain.weights.len();
    let years = table.years();
    let zero = <K as Scalar>::zero();
    let one = K::one();

    // Alive nodes carry their state; each year splits over (next state, die?).
    // Death paths freeze into single-child chains down to the uniform depth.
    let mut specs: Vec<NodeSpec<K>> = vec![NodeSpec {
        id: "c".to_string(),
        parent: None,
        prob: one.clone(),
    }];
    let mut deaths: Vec<(String, u64)> = Vec::new(); // (leaf id, year)
    // alive frontier: (node id, state)
    let mut frontier: Vec<(String, usize)> = Vec::new();

    for year in 1..=years {
        let mut next_frontier = Vec::new();
        let sources: Vec<(String, Option<usize>)> = if year == 1 {
            vec![("c".to_string(), None)]
        } else {
            frontier
                .iter()
                .map(|(id, s)| (id.clone(), Some(*s)))
                .collect()
        };
        for (parent_id, state) in sources {
            for s2 in 0..states {
                let step_prob = match state {
                    None => chain.initial[s2].clone(),
                    Some(s) => chain.transition[s][s2].clone(),
                };
                if step_prob.total_cmp(&zero) != std::cmp::Ordering::Greater {
                    continue;
                }
                let d = death_probs[year - 1][s2].clone();
                let die_prob = step_prob.clone() * d.clone();
                let live_prob = step_prob * (one.clone() - d);
                if die_prob.total_cmp(&zero) == std::cmp::Ordering::Greater {
                    let mut chain_parent = parent_id.clone();
                    for depth in year..=years {
                        let id = format!("{parent_id}.s{s2}x{depth}");
                        specs.push(NodeSpec {
                            id: id.clone(),
                            parent: Some(chain_parent),
                            prob: if depth == year { die_prob.clone() } else { one.clone() },
                        });
                        chain_parent = id;
                    }
                    deaths.push((format!("{parent_id}.s{s2}x{years}"), year as u64));
                }
                if live_prob.total_cmp(&zero) == std::cmp::Ordering::Greater {
                    let id = format!("{parent_id}.s{s2}");
                    specs.push(NodeSpec {
                        id: id.clone(),
                        parent: Some(parent_id.clone()),
                        prob: live_prob,
                    });
                    next_frontier.push((id, s2));
                }
            }
        }
        frontier = next_frontier;
    }
    if !frontier.is_empty() {
        // final-year death probability is one, so this cannot happen
        return Err(ScenarioError::CalibrationInfeasible {
            year: years,
            detail: "survivors left after the final year".into(),
        });
    }

    let death_by_id: std::collections::HashMap<String, u64> = deaths.into_iter().collect();
    let tree = ProbTree::from_nodes(specs)?;
    let z: Vec<TimeValue> = tree
        .leaves()
        .iter()
        .map(|&leaf| TimeValue::Finite(death_by_id[tree.label(leaf)]))
        .collect();
    let death_year = RandomTime::new(&tree, z)?;
    Ok(InsuranceModel {
        tree,
        filtration: FiltrationSpec::natural(years),
        death_year,
    })
}
