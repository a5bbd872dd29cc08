//! Application scenarios: yearly insurance premiums, pivotal-bond
//! revelation, and the joint conditional-sum/realized-sum tail bound.

pub mod insurance;
pub mod kesten;
pub mod pivotal;

use thiserror::Error;

use crate::compensator::CompensatorError;
use crate::convex::ConvexError;
use crate::distribution::DistError;
use crate::tree::TreeError;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("mortality table is empty")]
    EmptyTable,
    #[error("mortality tail mass from year {year} on is zero")]
    ZeroTail { year: usize },
    #[error("mortality mass of year {year} is negative")]
    NegativeMass { year: usize },
    #[error("mortality masses sum to {sum}, expected 1")]
    MassNotOne { sum: String },
    #[error("health-chain calibration infeasible in year {year}: {detail}")]
    CalibrationInfeasible { year: usize, detail: String },
    #[error("value enumeration has {states} joint states, over the budget of {budget}")]
    EnumerationTooLarge { states: u128, budget: u128 },
    #[error("unknown pivotal rule {name:?} (known: {known})")]
    UnknownRule { name: String, known: String },
    #[error("bad rule parameters: {0}")]
    BadRuleParams(String),
    #[error("bad model parameters: {0}")]
    BadModel(String),
    #[error("increments are not adapted: leaves under atom {atom} disagree at step {step}")]
    NotAdapted { step: usize, atom: String },
    #[error("increment at leaf {leaf}, step {step} is negative")]
    NegativeIncrement { leaf: String, step: usize },
    #[error("thresholds must be strictly positive")]
    NonPositiveThreshold,
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Compensator(#[from] CompensatorError),
    #[error(transparent)]
    Distribution(#[from] DistError),
    #[error(transparent)]
    Convex(#[from] ConvexError),
}
