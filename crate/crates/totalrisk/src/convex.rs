//! Convex-order dominance tests.
//!
//! `Y ⪯ X` for finite laws is decided through the shortfall
//! characterization: equal means plus `E(Y−λ)⁺ ≤ E(X−λ)⁺` for all λ. Both
//! shortfall curves are piecewise linear with breakpoints in the supports,
//! so the pairwise test needs only the union of supports.
//!
//! Against the mean-one exponential reference the right side is `e^{−λ}`,
//! and on each linear piece of the shortfall curve the difference
//! `e^{−λ} − E(X−λ)⁺` is convex. It is therefore nonnegative on a piece iff
//! it is nonnegative at both endpoints and at the single interior critical
//! point `λ* = ln(1/q)` (where `q` is the mass above the piece), when that
//! point falls inside. All three kinds of checkpoint reduce to comparisons
//! of a rational against `e^(rational)`, so exact mode certifies them:
//! the critical-point margin condition `q(1 + ln(1/q) − b) ≥ E(X−b)⁺ − tol`
//! is rewritten as `1/q ≥ e^{(E(X−b)⁺ − tol)/q − 1 + b}` before comparing.

use serde::Serialize;
use thiserror::Error;

use crate::distribution::Distribution;
use crate::report::{CheckReport, Witness};
use crate::scalar::{ExpValue, LinearValue, Scalar};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConvexError {
    #[error("distribution has negative support values")]
    NegativeSupport,
}

/// Where a checkpoint came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckpointKind {
    Breakpoint,
    InteriorCritical,
    UserGrid,
}

/// One λ checkpoint of a shortfall comparison (display values; the `ok`
/// verdict is decided in the active arithmetic).
#[derive(Debug, Clone, Serialize)]
pub struct Checkpoint {
    pub lambda: f64,
    pub shortfall: f64,
    pub reference: f64,
    pub margin: f64,
    pub ok: bool,
    pub kind: CheckpointKind,
}

/// Violation location: a λ with negative margin, or a mean mismatch.
#[derive(Debug, Clone, Serialize, PartialEq)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum OrderWitness {
    Lambda { lambda: f64 },
    Mean { mean: f64, target: f64 },
}

/// Outcome of a convex-order test.
#[derive(Debug, Clone, Serialize)]
pub struct ShortfallReport {
    pub check: String,
    pub holds: bool,
    pub mean: f64,
    pub mean_target: f64,
    pub mean_ok: bool,
    pub worst_margin: f64,
    pub checkpoints: Vec<Checkpoint>,
    /// Present iff `holds` is false.
    pub witness: Option<OrderWitness>,
}

/// `E(X − λ)⁺` of a finite law.
pub fn shortfall<K: Scalar>(dist: &Distribution<K>, lambda: &K) -> K {
    dist.shortfall(lambda)
}

fn finish_report(
    check: &str,
    mean: f64,
    mean_target: f64,
    mean_ok: bool,
    mut checkpoints: Vec<Checkpoint>,
) -> ShortfallReport {
    checkpoints.sort_by(|a, b| a.lambda.total_cmp(&b.lambda));
    let worst_margin = checkpoints
        .iter()
        .map(|c| c.margin)
        .fold(f64::INFINITY, f64::min);
    let first_violation = checkpoints.iter().find(|c| !c.ok);
    let holds = mean_ok && first_violation.is_none();
    let witness = if holds {
        None
    } else if let Some(c) = first_violation {
        Some(OrderWitness::Lambda { lambda: c.lambda })
    } else {
        Some(OrderWitness::Mean {
            mean,
            target: mean_target,
        })
    };
    ShortfallReport {
        check: check.to_string(),
        holds,
        mean,
        mean_target,
        mean_ok,
        worst_margin: if worst_margin.is_finite() {
            worst_margin
        } else {
            0.0
        },
        checkpoints,
        witness,
    }
}

/// Decide `y ⪯ x`: means equal within `tol` and shortfall dominance at every
/// support breakpoint of either law.
pub fn convex_order_leq<K: Scalar>(
    y: &Distribution<K>,
    x: &Distribution<K>,
    tol: &K,
) -> ShortfallReport {
    let mean_y = y.mean();
    let mean_x = x.mean();
    let mean_ok = (mean_y.clone() - mean_x.clone()).abs().total_cmp(tol)
        != std::cmp::Ordering::Greater;

    let mut lambdas: Vec<K> = y
        .support()
        .iter()
        .chain(x.support().iter())
        .map(|(v, _)| v.clone())
        .collect();
    lambdas.sort_by(|a, b| a.total_cmp(b));
    lambdas.dedup();

    let checkpoints = lambdas
        .into_iter()
        .map(|lambda| {
            let sy = y.shortfall(&lambda);
            let sx = x.shortfall(&lambda);
            let margin = sx.clone() - sy.clone();
            let ok = (margin.clone() + tol.clone()).total_cmp(&<K as Scalar>::zero())
                != std::cmp::Ordering::Less;
            Checkpoint {
                lambda: lambda.to_f64(),
                shortfall: sy.to_f64(),
                reference: sx.to_f64(),
                margin: margin.to_f64(),
                ok,
                kind: CheckpointKind::Breakpoint,
            }
        })
        .collect();

    finish_report(
        "convex_order_leq",
        mean_y.to_f64(),
        mean_x.to_f64(),
        mean_ok,
        checkpoints,
    )
}

/// Decide `X ⪯ ℰ` for a nonnegative law `X` against the analytic mean-one
/// exponential: mean 1 within `tol`, and `E(X−λ)⁺ ≤ e^{−λ} + tol` at every
/// support breakpoint, every interior critical point, and every requested
/// extra λ ≥ 0. (Negative λ need no check: there both sides equal
/// `mean − λ` identically.)
pub fn convex_order_vs_exponential<K: Scalar>(
    dist: &Distribution<K>,
    tol: &K,
    extra_lambdas: &[K],
) -> Result<ShortfallReport, ConvexError> {
    let zero = <K as Scalar>::zero();
    if dist.min_value().total_cmp(&zero) == std::cmp::Ordering::Less {
        return Err(ConvexError::NegativeSupport);
    }
    let mean = dist.mean();
    let mean_ok = (mean.clone() - K::one()).abs().total_cmp(tol) != std::cmp::Ordering::Greater;

    let mut breakpoints: Vec<K> = vec![zero.clone()];
    for (v, _) in dist.support() {
        if v.total_cmp(&zero) == std::cmp::Ordering::Greater {
            breakpoints.push(v.clone());
        }
    }

    let mut checkpoints: Vec<Checkpoint> = Vec::new();
    let endpoint = |lambda: &K, kind: CheckpointKind| -> Checkpoint {
        let sf = dist.shortfall(lambda);
        let margin_expr = K::Exp::exp_term(K::one(), -lambda.clone())
            .add(&K::Exp::from_scalar(tol.clone() - sf.clone()));
        let ok = margin_expr.certified_sign() != std::cmp::Ordering::Less;
        let reference = (-lambda.to_f64()).exp();
        Checkpoint {
            lambda: lambda.to_f64(),
            shortfall: sf.to_f64(),
            reference,
            margin: reference - sf.to_f64(),
            ok,
            kind,
        }
    };

    for (i, b) in breakpoints.iter().enumerate() {
        checkpoints.push(endpoint(b, CheckpointKind::Breakpoint));
        let next = match breakpoints.get(i + 1) {
            Some(n) => n,
            None => continue, // last piece has slope 0 and stays below e^{−λ}
        };
        let q = dist.tail_above(b);
        if q.total_cmp(&zero) != std::cmp::Ordering::Greater {
            continue;
        }
        if q.total_cmp(&K::one()) != std::cmp::Ordering::Less {
            // slope −1: the critical point is λ* = 0, an endpoint
            continue;
        }
        let inv_q = K::one() / q.clone();
        // λ* = ln(1/q) interior ⟺ e^{b} < 1/q < e^{next}
        let left = K::Exp::from_scalar(inv_q.clone())
            .sub(&K::Exp::exp_term(K::one(), b.clone()))
            .certified_sign();
        let right = K::Exp::exp_term(K::one(), next.clone())
            .sub(&K::Exp::from_scalar(inv_q.clone()))
            .certified_sign();
        if left != std::cmp::Ordering::Greater || right != std::cmp::Ordering::Greater {
            continue;
        }
        // margin(λ*) ≥ −tol ⟺ 1/q ≥ e^{(g(b) − tol)/q − 1 + b}
        let g_b = dist.shortfall(b);
        let crit = (g_b.clone() - tol.clone()) / q.clone() - K::one() + b.clone();
        let ok = K::Exp::from_scalar(inv_q)
            .sub(&K::Exp::exp_term(K::one(), crit))
            .certified_sign()
            != std::cmp::Ordering::Less;
        let qf = q.to_f64();
        let lambda_star = -qf.ln();
        let sf = g_b.to_f64() - qf * (lambda_star - b.to_f64());
        checkpoints.push(Checkpoint {
            lambda: lambda_star,
            shortfall: sf,
            reference: qf, // e^{−λ*} = q
            margin: qf - sf,
            ok,
            kind: CheckpointKind::InteriorCritical,
        });
    }

    for lambda in extra_lambdas {
        if lambda.total_cmp(&zero) == std::cmp::Ordering::Less {
            continue;
        }
        checkpoints.push(endpoint(lambda, CheckpointKind::UserGrid));
    }

    Ok(finish_report(
        "convex_order_vs_exponential",
        mean.to_f64(),
        1.0,
        mean_ok,
        checkpoints,
    ))
}

/// The tail reference `e^{1−λ}`.
pub fn exp_tail_bound(lambda: f64) -> f64 {
    (1.0 - lambda).exp()
}

/// Verify `P(X > λ) ≤ e^{1−λ} + tol`.
pub fn check_tail<K: Scalar>(dist: &Distribution<K>, lambda: &K, tol: &K) -> CheckReport {
    let tail = dist.tail_above(lambda);
    let margin_expr = K::Exp::exp_term(K::one(), K::one() - lambda.clone())
        .add(&K::Exp::from_scalar(tol.clone() - tail.clone()));
    let holds = margin_expr.certified_sign() != std::cmp::Ordering::Less;
    let reference = exp_tail_bound(lambda.to_f64());
    let margin = reference - tail.to_f64();
    if holds {
        CheckReport::passing("tail_exp_bound", margin)
    } else {
        CheckReport::failing(
            "tail_exp_bound",
            margin,
            Witness {
                step: 0,
                atom: format!("lambda={}", lambda),
                detail: format!("P(X > λ) = {} exceeds e^(1−λ) = {:.6e}", tail, reference),
            },
        )
    }
}
