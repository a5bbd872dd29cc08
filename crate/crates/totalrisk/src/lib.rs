//! Total-risk computations on finite filtered probability spaces.
//!
//! A filtered space is modelled as a rooted probability tree of uniform leaf
//! depth together with a nondecreasing level map: the atoms of the σ-field at
//! step `n` are the tree nodes at level `ℓ(n)`. On top of that the crate
//! provides
//!
//! - optional projections and discrete dual previsible projections
//!   (compensators) of raw nondecreasing processes, and the total risk
//!   `R = Σₙ P(Z = n+1 | Fₙ)` of a random time `Z`;
//! - certified convex-order tests of a finite distribution against the
//!   mean-one exponential, via the shortfall characterization
//!   `E(Y−λ)⁺ ≤ e^{−λ}` at finitely many checkpoints;
//! - the supermartingale `M = e^{Aᵖ}(1 − ᵒA)`, the martingale `Aᵖ − ᵒA`,
//!   and the stopped bound `e^{−λ} ≥ E[(1−ᵒA_τ) + ΔᵒA_τ (Aᵖ_τ−λ)/ΔAᵖ_τ]`;
//! - application scenarios (yearly insurance premiums, pivotal-bond
//!   revelation, a joint conditional-sum/realized-sum tail bound);
//! - Monte Carlo sampling of the continuous-time natural-filtration total
//!   risk `−ln(1 − F(Z))` and mesh-convergence of tree discretizations.
//!
//! Every computation runs in one of two arithmetic modes, never mixed:
//! exact big-rational arithmetic (comparisons against `e^x` decided by
//! certified rational enclosures, so verdicts carry no rounding doubt) or
//! plain `f64` with explicit tolerances.

pub mod compensator;
pub mod convex;
pub mod distribution;
pub mod exact;
pub mod io;
pub mod montecarlo;
pub mod process;
pub mod report;
pub mod scalar;
pub mod scenarios;
pub mod tree;

pub use distribution::Distribution;
pub use exact::{ExpSum, Rat};
pub use process::{AdaptedProcess, RawIncreasingProcess};
pub use report::{CheckReport, Witness};
pub use scalar::{ExpValue, LinearValue, Scalar};
pub use tree::{FiltrationSpec, ProbTree, RandomTime, TimeValue};
