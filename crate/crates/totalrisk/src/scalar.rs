//! Arithmetic abstraction shared by the exact-rational and float modes.
//!
//! All model code is generic over [`Scalar`]. The two implementations are
//! `f64` (float mode, tolerance-based comparisons) and [`crate::exact::Rat`]
//! (exact mode, zero tolerances). A scalar carries an associated
//! [`ExpValue`] type used wherever `e^x` enters a comparison: for floats it
//! is `f64` again, for rationals it is a symbolic sum of exponential terms
//! whose sign is decided by certified rational enclosures.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

/// Values closed under addition, subtraction, and scalar weighting — enough
/// structure for conditional expectations.
pub trait LinearValue<K: Scalar>: Clone + fmt::Debug + Send + Sync + 'static {
    fn zero() -> Self;
    fn add(&self, other: &Self) -> Self;
    fn sub(&self, other: &Self) -> Self;
    fn scale(&self, k: &K) -> Self;
}

/// Linear values that can additionally hold exponential terms `c·e^x` and
/// decide their own sign.
///
/// In float mode the sign is an ordinary comparison; in exact mode it is
/// certified (rational enclosures refined until the sign separates, exact
/// rational comparison when every exponent cancels).
pub trait ExpValue<K: Scalar>: LinearValue<K> {
    fn from_scalar(k: K) -> Self;
    /// `coeff · e^exponent`.
    fn exp_term(coeff: K, exponent: K) -> Self;
    fn certified_sign(&self) -> Ordering;
    fn to_f64(&self) -> f64;

    fn is_nonneg(&self) -> bool {
        self.certified_sign() != Ordering::Less
    }
}

/// Field-like scalar with a total order. Implemented by `f64` and `Rat`.
pub trait Scalar:
    Clone
    + PartialEq
    + fmt::Debug
    + fmt::Display
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    /// True for arithmetic where comparisons are exact.
    const EXACT: bool;

    /// The carrier for expressions mixing scalars with `e^x` terms.
    type Exp: ExpValue<Self>;

    fn zero() -> Self;
    fn one() -> Self;
    fn from_int(n: i64) -> Self;
    fn from_ratio(num: i64, den: i64) -> Self;
    /// Exact conversion from a finite float (dyadic rational in exact mode).
    fn from_f64(x: f64) -> Option<Self>;
    fn to_f64(&self) -> f64;
    fn total_cmp(&self, other: &Self) -> Ordering;

    /// Default per-check tolerance: `0` exact, `1e-10` float.
    fn default_tol() -> Self;
    /// Tolerance for probability-mass sums: `0` exact, `1e-12` float.
    fn mass_tol() -> Self;

    /// Parse from a JSON value. Exact mode accepts integers and `"a/b"`
    /// strings and rejects non-integral numbers; float mode accepts numbers
    /// and `"a/b"` strings.
    fn parse_json(v: &serde_json::Value) -> Result<Self, String>;
    /// Emit as a JSON value (`"a/b"` string in exact mode, number in float).
    fn to_json(&self) -> serde_json::Value;

    fn is_zero(&self) -> bool {
        *self == Self::zero()
    }
    fn abs(&self) -> Self {
        if self.total_cmp(&Self::zero()) == Ordering::Less {
            -self.clone()
        } else {
            self.clone()
        }
    }
    fn max_of(self, other: Self) -> Self {
        if self.total_cmp(&other) == Ordering::Less {
            other
        } else {
            self
        }
    }
    /// `(self − other)⁺`.
    fn pos_part_minus(&self, other: &Self) -> Self {
        let d = self.clone() - other.clone();
        if d.total_cmp(&Self::zero()) == Ordering::Less {
            Self::zero()
        } else {
            d
        }
    }
}

/// Every scalar is a linear value over itself.
impl<K: Scalar> LinearValue<K> for K {
    fn zero() -> Self {
        Scalar::zero()
    }
    fn add(&self, other: &Self) -> Self {
        self.clone() + other.clone()
    }
    fn sub(&self, other: &Self) -> Self {
        self.clone() - other.clone()
    }
    fn scale(&self, k: &K) -> Self {
        self.clone() * k.clone()
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;
    type Exp = f64;

    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_int(n: i64) -> Self {
        n as f64
    }
    fn from_ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }
    fn from_f64(x: f64) -> Option<Self> {
        x.is_finite().then_some(x)
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn total_cmp(&self, other: &Self) -> Ordering {
        f64::total_cmp(self, other)
    }
    fn default_tol() -> Self {
        1e-10
    }
    fn mass_tol() -> Self {
        1e-12
    }

    fn parse_json(v: &serde_json::Value) -> Result<Self, String> {
        match v {
            serde_json::Value::Number(n) => n
                .as_f64()
                .ok_or_else(|| format!("number out of f64 range: {n}")),
            serde_json::Value::String(s) => parse_fraction_f64(s),
            other => Err(format!("expected a number or \"a/b\" string, got {other}")),
        }
    }
    fn to_json(&self) -> serde_json::Value {
        serde_json::Number::from_f64(*self)
            .map(serde_json::Value::Number)
            .unwrap_or(serde_json::Value::Null)
    }
}

impl ExpValue<f64> for f64 {
    fn from_scalar(k: f64) -> Self {
        k
    }
    fn exp_term(coeff: f64, exponent: f64) -> Self {
        coeff * exponent.exp()
    }
    fn certified_sign(&self) -> Ordering {
        self.total_cmp(&0.0)
    }
    fn to_f64(&self) -> f64 {
        *self
    }
}

fn parse_fraction_f64(s: &str) -> Result<f64, String> {
    let s = s.trim();
    if let Some((a, b)) = s.split_once('/') {
        let num: f64 = a
            .trim()
            .parse()
            .map_err(|_| format!("bad numerator in {s:?}"))?;
        let den: f64 = b
            .trim()
            .parse()
            .map_err(|_| format!("bad denominator in {s:?}"))?;
        if den == 0.0 {
            return Err(format!("zero denominator in {s:?}"));
        }
        Ok(num / den)
    } else {
        s.parse().map_err(|_| format!("bad number {s:?}"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_parses_fractions_and_numbers() {
        let v: serde_json::Value = serde_json::json!("2/3");
        assert!((f64::parse_json(&v).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        let v = serde_json::json!(0.25);
        assert_eq!(f64::parse_json(&v).unwrap(), 0.25);
        assert!(f64::parse_json(&serde_json::json!(null)).is_err());
        assert!(f64::parse_json(&serde_json::json!("1/0")).is_err());
    }

    #[test]
    fn pos_part() {
        assert_eq!(2.0f64.pos_part_minus(&0.5), 1.5);
        assert_eq!(0.5f64.pos_part_minus(&2.0), 0.0);
    }
}
