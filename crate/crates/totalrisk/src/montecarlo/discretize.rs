//! Mesh discretization of a continuous lifetime into a survival comb.
//!
//! Binning a density at mesh `h` gives `q_n = F(nh) − F((n−1)h)`; the comb
//! built from `q` under its natural filtration carries the discrete total
//! risk, whose law converges to Exp(1) as `h → 0`. The mass beyond the
//! horizon (at most [`TAIL_FOLD_LIMIT`]) is folded into the last bin.

use crate::compensator::natural_comb_risk_law;
use crate::distribution::Distribution;
use crate::tree::{survival_comb, FiltrationSpec, ProbTree, RandomTime};

use super::density::Density;
use super::McError;

/// Maximum tail mass the horizon may leave uncovered.
pub const TAIL_FOLD_LIMIT: f64 = 1e-9;

/// A horizon whose uncovered tail mass is safely inside the fold limit.
pub fn horizon_for_tail(density: &dyn Density) -> f64 {
    density.quantile(1.0 - 0.9 * TAIL_FOLD_LIMIT)
}

/// Bin masses `q_1..q_B` of a density at mesh `h` up to the horizon,
/// tail-folded into the last bin.
pub fn bin_probabilities(
    density: &dyn Density,
    mesh: f64,
    horizon: f64,
) -> Result<Vec<f64>, McError> {
    if !(mesh > 0.0) || !mesh.is_finite() {
        return Err(McError::InvalidDensity(format!("mesh must be positive, got {mesh}")));
    }
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(McError::InvalidDensity(format!(
            "horizon must be positive, got {horizon}"
        )));
    }
    let bins = (horizon / mesh).ceil() as usize;
    if bins < 2 {
        return Err(McError::MeshTooCoarse { bins });
    }
    let tail = density.survival(bins as f64 * mesh);
    if tail > TAIL_FOLD_LIMIT {
        return Err(McError::HorizonLeavesTailMass { tail });
    }
    // survival differences stay accurate deep in the tail, where CDF values
    // would cancel
    let mut q = Vec::with_capacity(bins);
    for n in 1..=bins {
        let hi = density.survival((n - 1) as f64 * mesh);
        let lo = density.survival(n as f64 * mesh);
        q.push((hi - lo).max(0.0));
    }
    *q.last_mut().unwrap() += tail;
    Ok(q)
}

/// Build the comb tree, natural filtration, and death-bin time of a
/// discretized density.
pub fn discretize_density(
    density: &dyn Density,
    mesh: f64,
    horizon: f64,
) -> Result<(ProbTree<f64>, FiltrationSpec, RandomTime), McError> {
    let q = bin_probabilities(density, mesh, horizon)?;
    survival_comb(&q).map_err(|e| McError::Comb(e.to_string()))
}

/// The discrete total-risk law at mesh `h`, via the closed-form comb law
/// (identical to `total_risk` on the built tree, linear in the bin count).
pub fn discrete_risk_law(
    density: &dyn Density,
    mesh: f64,
    horizon: f64,
) -> Result<Distribution<f64>, McError> {
    let q = bin_probabilities(density, mesh, horizon)?;
    natural_comb_risk_law(&q).map_err(|e| McError::Comb(e.to_string()))
}

/// `e^{−λ} − E(Y_h − λ)⁺`: nonnegative under the order bound, shrinking to
/// zero as the mesh refines.
pub fn shortfall_gap(law: &Distribution<f64>, lambda: f64) -> f64 {
    (-lambda).exp() - law.shortfall(&lambda)
}
