//! Machine-readable check reports.

use serde::Serialize;

/// Location of a violation inside a filtered model.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct Witness {
    pub step: usize,
    pub atom: String,
    pub detail: String,
}

/// Outcome of one inequality or identity check.
///
/// `worst_margin` is the tightest slack seen (negative on violation), as a
/// display float; verdicts themselves are decided in the active arithmetic.
#[derive(Debug, Clone, Serialize)]
pub struct CheckReport {
    pub check: String,
    pub holds: bool,
    pub worst_margin: f64,
    pub witness: Option<Witness>,
}

impl CheckReport {
    pub fn passing(check: impl Into<String>, worst_margin: f64) -> Self {
        CheckReport {
            check: check.into(),
            holds: true,
            worst_margin,
            witness: None,
        }
    }

    pub fn failing(check: impl Into<String>, worst_margin: f64, witness: Witness) -> Self {
        CheckReport {
            check: check.into(),
            holds: false,
            worst_margin,
            witness: Some(witness),
        }
    }
}
