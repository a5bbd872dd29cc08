//! Monte Carlo verification of the continuous-time natural-filtration total
//! risk and mesh convergence of its tree discretizations.

pub mod density;
pub mod discretize;
pub mod ks;
pub mod sample;

use thiserror::Error;

pub use density::{density_from_spec, Density};
pub use discretize::{
    bin_probabilities, discrete_risk_law, discretize_density, horizon_for_tail, shortfall_gap,
};
pub use ks::{ks_band_99, ks_statistic};
pub use sample::{empirical_shortfall, sample_natural_risk, SampleBatch, ShortfallPoint};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum McError {
    #[error("invalid density: {0}")]
    InvalidDensity(String),
    #[error("batch has no samples")]
    EmptyBatch,
    #[error("mesh too coarse: only {bins} bin(s)")]
    MeshTooCoarse { bins: usize },
    #[error("horizon leaves tail mass {tail:.3e} uncovered (limit 1e-9)")]
    HorizonLeavesTailMass { tail: f64 },
    #[error("comb construction failed: {0}")]
    Comb(String),
}
