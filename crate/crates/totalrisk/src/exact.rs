//! Exact big-rational arithmetic and certified comparisons against `e^x`.
//!
//! Exact mode represents every model quantity as a [`Rat`]. Quantities of
//! the form `Σᵢ cᵢ·e^{xᵢ}` (supermartingale values, shortfall margins
//! against the exponential reference) are carried symbolically by
//! [`ExpSum`], keyed by exponent. Deciding the sign of such a sum is exact:
//!
//! - terms with equal exponents are merged, so a sum whose exponents all
//!   cancel reduces to a plain rational comparison;
//! - a surviving mixed-sign sum over distinct rational exponents is never
//!   zero (the `e^{xᵢ}` are linearly independent over the rationals), so
//!   interval refinement with rational enclosures of `e^{xᵢ}` terminates.
//!
//! Enclosures come from the truncated Taylor series with an explicit
//! remainder bound, using `e^x = e^⌊x⌋·e^{x−⌊x⌋}` to keep the series
//! argument in `[0, 1)`.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::sync::{Mutex, OnceLock};

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::scalar::{ExpValue, LinearValue, Scalar};

/// Exact rational scalar.
pub type Rat = num_rational::BigRational;

/// `a / b` as a [`Rat`].
pub fn rat(num: i64, den: i64) -> Rat {
    Rat::new(BigInt::from(num), BigInt::from(den))
}

/// Integer as a [`Rat`].
pub fn rat_int(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

impl Scalar for Rat {
    const EXACT: bool = true;
    type Exp = ExpSum;

    fn zero() -> Self {
        num_traits::Zero::zero()
    }
    fn one() -> Self {
        num_traits::One::one()
    }
    fn from_int(n: i64) -> Self {
        rat_int(n)
    }
    fn from_ratio(num: i64, den: i64) -> Self {
        rat(num, den)
    }
    fn from_f64(x: f64) -> Option<Self> {
        Rat::from_float(x)
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn total_cmp(&self, other: &Self) -> Ordering {
        Ord::cmp(self, other)
    }
    fn default_tol() -> Self {
        num_traits::Zero::zero()
    }
    fn mass_tol() -> Self {
        num_traits::Zero::zero()
    }

    fn parse_json(v: &serde_json::Value) -> Result<Self, String> {
        match v {
            serde_json::Value::Number(n) => {
                if let Some(i) = n.as_i64() {
                    Ok(rat_int(i))
                } else if let Some(u) = n.as_u64() {
                    Ok(Rat::from_integer(BigInt::from(u)))
                } else {
                    Err(format!(
                        "exact mode accepts integers or \"a/b\" strings, got float {n}"
                    ))
                }
            }
            serde_json::Value::String(s) => parse_fraction(s),
            other => Err(format!("expected an integer or \"a/b\" string, got {other}")),
        }
    }
    fn to_json(&self) -> serde_json::Value {
        serde_json::Value::String(self.to_string())
    }

    fn is_zero(&self) -> bool {
        num_traits::Zero::is_zero(self)
    }
}

fn parse_fraction(s: &str) -> Result<Rat, String> {
    let s = s.trim();
    let (num_s, den_s) = match s.split_once('/') {
        Some((a, b)) => (a.trim(), b.trim()),
        None => (s, "1"),
    };
    let num: BigInt = num_s
        .parse()
        .map_err(|_| format!("bad numerator in {s:?}"))?;
    let den: BigInt = den_s
        .parse()
        .map_err(|_| format!("bad denominator in {s:?}"))?;
    if den.is_zero() {
        return Err(format!("zero denominator in {s:?}"));
    }
    Ok(Rat::new(num, den))
}

// ---------------------------------------------------------------------------
// Rational enclosures of e^x
// ---------------------------------------------------------------------------

fn rat_pow(base: &Rat, mut n: u64) -> Rat {
    let mut acc: Rat = num_traits::One::one();
    let mut sq = base.clone();
    while n > 0 {
        if n & 1 == 1 {
            acc *= &sq;
        }
        n >>= 1;
        if n > 0 {
            sq = &sq * &sq;
        }
    }
    acc
}

/// `(lower, upper)` for `e^f` with `f ∈ [0, 1)`, from `terms + 1` series terms.
///
/// Tail bound: `Σ_{j>t} f^j/j! ≤ f^{t+1}/(t+1)! · (t+2)/(t+2−f) ≤ 2·f^{t+1}/(t+1)!`.
fn exp_series_frac(f: &Rat, terms: usize) -> (Rat, Rat) {
    if num_traits::Zero::is_zero(f) {
        let one: Rat = num_traits::One::one();
        return (one.clone(), one);
    }
    let mut sum: Rat = num_traits::One::one();
    let mut term: Rat = num_traits::One::one();
    for j in 1..=terms {
        term = term * f / Rat::from_integer(BigInt::from(j as u64));
        sum += &term;
    }
    // remainder: next term * 2
    let next = term * f / Rat::from_integer(BigInt::from((terms + 1) as u64));
    let upper = &sum + next * Rat::from_integer(BigInt::from(2));
    (sum, upper)
}

fn exp_series_unit(terms: usize) -> (Rat, Rat) {
    static CACHE: OnceLock<Mutex<BTreeMap<usize, (Rat, Rat)>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(BTreeMap::new()));
    let mut guard = cache.lock().unwrap();
    guard
        .entry(terms)
        .or_insert_with(|| {
            let mut sum: Rat = num_traits::One::one();
            let mut term: Rat = num_traits::One::one();
            for j in 1..=terms {
                term /= Rat::from_integer(BigInt::from(j as u64));
                sum += &term;
            }
            let next = &term / Rat::from_integer(BigInt::from((terms + 1) as u64));
            let upper = &sum + next * Rat::from_integer(BigInt::from(2));
            (sum, upper)
        })
        .clone()
}

/// Certified rational bounds `lo ≤ e^x ≤ hi`; strict on both sides unless
/// `x = 0`, where the enclosure is the exact point `(1, 1)`. Widths shrink
/// factorially in `terms`. Results are memoized per thread, since sign
/// refinements revisit the same exponents constantly.
pub fn exp_enclosure(x: &Rat, terms: usize) -> (Rat, Rat) {
    thread_local! {
        static CACHE: std::cell::RefCell<std::collections::HashMap<(Rat, usize), (Rat, Rat)>> =
            std::cell::RefCell::new(std::collections::HashMap::new());
    }
    CACHE.with(|cache| {
        if let Some(hit) = cache.borrow().get(&(x.clone(), terms)) {
            return hit.clone();
        }
        let value = exp_enclosure_uncached(x, terms);
        let mut map = cache.borrow_mut();
        if map.len() >= 1 << 17 {
            map.clear();
        }
        map.insert((x.clone(), terms), value.clone());
        value
    })
}

fn exp_enclosure_uncached(x: &Rat, terms: usize) -> (Rat, Rat) {
    if num_traits::Zero::is_zero(x) {
        let one: Rat = num_traits::One::one();
        return (one.clone(), one);
    }
    if x.is_negative() {
        let (lo, hi) = exp_enclosure_uncached(&(-x.clone()), terms);
        let one: Rat = num_traits::One::one();
        return (&one / hi, one / lo);
    }
    let n = x.floor().to_integer();
    let frac = x - Rat::from_integer(n.clone());
    let (flo, fhi) = exp_series_frac(&frac, terms);
    let n_u64 = n
        .to_u64()
        .expect("exponent too large for an enclosure of e^x");
    if n_u64 == 0 {
        return (flo, fhi);
    }
    let (elo, ehi) = exp_series_unit(terms);
    (flo * rat_pow(&elo, n_u64), fhi * rat_pow(&ehi, n_u64))
}

// ---------------------------------------------------------------------------
// ExpSum — symbolic Σ cᵢ e^{xᵢ}
// ---------------------------------------------------------------------------

/// Finite sum `Σᵢ cᵢ·e^{xᵢ}` with rational coefficients and exponents.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExpSum {
    /// exponent → coefficient; zero coefficients are pruned.
    terms: BTreeMap<Rat, Rat>,
}

const REFINEMENT_LADDER: [usize; 7] = [8, 16, 32, 64, 128, 256, 512];

impl ExpSum {
    pub fn new() -> Self {
        ExpSum {
            terms: BTreeMap::new(),
        }
    }

    fn insert(&mut self, exponent: Rat, coeff: Rat) {
        if num_traits::Zero::is_zero(&coeff) {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(exponent) {
            Entry::Vacant(e) => {
                e.insert(coeff);
            }
            Entry::Occupied(mut e) => {
                *e.get_mut() += coeff;
                if num_traits::Zero::is_zero(e.get()) {
                    e.remove();
                }
            }
        }
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// The underlying terms, exponent-sorted.
    pub fn terms(&self) -> impl Iterator<Item = (&Rat, &Rat)> {
        self.terms.iter()
    }

    /// Exact value if every exponent cancelled down to `e^0`.
    pub fn as_rational(&self) -> Option<Rat> {
        if self.terms.is_empty() {
            return Some(num_traits::Zero::zero());
        }
        if self.terms.len() == 1 {
            let (x, c) = self.terms.iter().next().unwrap();
            if num_traits::Zero::is_zero(x) {
                return Some(c.clone());
            }
        }
        None
    }
}

impl Default for ExpSum {
    fn default() -> Self {
        Self::new()
    }
}

impl LinearValue<Rat> for ExpSum {
    fn zero() -> Self {
        ExpSum::new()
    }
    fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (x, c) in &other.terms {
            out.insert(x.clone(), c.clone());
        }
        out
    }
    fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (x, c) in &other.terms {
            out.insert(x.clone(), -c.clone());
        }
        out
    }
    fn scale(&self, k: &Rat) -> Self {
        if num_traits::Zero::is_zero(k) {
            return ExpSum::new();
        }
        ExpSum {
            terms: self
                .terms
                .iter()
                .map(|(x, c)| (x.clone(), c * k))
                .collect(),
        }
    }
}

impl ExpValue<Rat> for ExpSum {
    fn from_scalar(k: Rat) -> Self {
        let mut s = ExpSum::new();
        s.insert(num_traits::Zero::zero(), k);
        s
    }
    fn exp_term(coeff: Rat, exponent: Rat) -> Self {
        let mut s = ExpSum::new();
        s.insert(exponent, coeff);
        s
    }

    fn certified_sign(&self) -> Ordering {
        if self.terms.is_empty() {
            return Ordering::Equal;
        }
        if self.terms.len() == 1 {
            // e^x > 0, so the sign is the coefficient's.
            let (_, c) = self.terms.iter().next().unwrap();
            return c.cmp(&num_traits::Zero::zero());
        }
        let mut pos = 0usize;
        let mut neg = 0usize;
        for c in self.terms.values() {
            if c.is_positive() {
                pos += 1;
            } else {
                neg += 1;
            }
        }
        if neg == 0 {
            return Ordering::Greater;
        }
        if pos == 0 {
            return Ordering::Less;
        }
        // Mixed signs over ≥ 2 distinct exponents: the sum is provably
        // nonzero, refine enclosures until the interval excludes zero.
        let zero: Rat = num_traits::Zero::zero();
        for &terms in REFINEMENT_LADDER.iter() {
            let mut lo: Rat = num_traits::Zero::zero();
            let mut hi: Rat = num_traits::Zero::zero();
            for (x, c) in &self.terms {
                let (elo, ehi) = exp_enclosure(x, terms);
                if c.is_positive() {
                    lo += c * elo;
                    hi += c * ehi;
                } else {
                    lo += c * ehi;
                    hi += c * elo;
                }
            }
            if lo > zero {
                return Ordering::Greater;
            }
            if hi < zero {
                return Ordering::Less;
            }
        }
        panic!(
            "sign refinement did not separate (value ≈ {}); exponents: {:?}",
            ExpValue::to_f64(self),
            self.terms
                .keys()
                .map(Scalar::to_f64)
                .collect::<Vec<_>>()
        );
    }

    fn to_f64(&self) -> f64 {
        self.terms
            .iter()
            .map(|(x, c)| Scalar::to_f64(c) * Scalar::to_f64(x).exp())
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn enclosures_bracket_exp() {
        for (num, den) in [(0i64, 1i64), (1, 2), (3, 2), (7, 3), (-1, 1), (-5, 2), (4, 1)] {
            let x = rat(num, den);
            let truth = (num as f64 / den as f64).exp();
            for terms in [8usize, 16, 64] {
                let (lo, hi) = exp_enclosure(&x, terms);
                assert!(Scalar::to_f64(&lo) <= truth + 1e-12, "lo {num}/{den}");
                assert!(Scalar::to_f64(&hi) >= truth - 1e-12, "hi {num}/{den}");
                assert!(lo <= hi);
            }
            let (lo8, hi8) = exp_enclosure(&x, 8);
            let (lo64, hi64) = exp_enclosure(&x, 64);
            assert!(hi64.clone() - lo64.clone() <= hi8 - lo8, "width shrinks");
            assert!(Scalar::to_f64(&(hi64 - lo64)) < 1e-30);
        }
    }

    #[test]
    fn expsum_exact_cancellation() {
        let a = ExpSum::exp_term(rat(1, 1), rat(1, 2));
        let b = ExpSum::exp_term(rat(1, 1), rat(1, 2));
        assert_eq!(a.sub(&b).certified_sign(), Ordering::Equal);

        let c = ExpSum::from_scalar(rat(2, 3)).sub(&ExpSum::from_scalar(rat(2, 3)));
        assert_eq!(c.certified_sign(), Ordering::Equal);
        assert_eq!(c.as_rational(), Some(Scalar::zero()));
    }

    #[test]
    fn expsum_signs() {
        // e^{1/2}/2 < 1
        let m = ExpSum::exp_term(rat(1, 2), rat(1, 2)).sub(&ExpSum::from_scalar(rat(1, 1)));
        assert_eq!(m.certified_sign(), Ordering::Less);
        // e^{-1} > 1/4
        let m = ExpSum::exp_term(rat(1, 1), rat(-1, 1)).sub(&ExpSum::from_scalar(rat(1, 4)));
        assert_eq!(m.certified_sign(), Ordering::Greater);
        // 3 - e > 0, e - 3 < 0
        let e = ExpSum::exp_term(rat(1, 1), rat(1, 1));
        assert_eq!(
            ExpSum::from_scalar(rat(3, 1)).sub(&e).certified_sign(),
            Ordering::Greater
        );
        assert_eq!(
            e.sub(&ExpSum::from_scalar(rat(3, 1))).certified_sign(),
            Ordering::Less
        );
    }

    #[test]
    fn expsum_tight_comparison() {
        // e^{2} vs 7.389056098930650 = close 16-digit rational approximation
        let approx = parse_fraction("7389056098930650/1000000000000000").unwrap();
        let m = ExpSum::exp_term(rat(1, 1), rat(2, 1)).sub(&ExpSum::from_scalar(approx));
        // e^2 = 7.38905609893065022723...
        assert_eq!(m.certified_sign(), Ordering::Greater);
    }

    #[test]
    fn parse_and_emit() {
        assert_eq!(parse_fraction("3/6").unwrap(), rat(1, 2));
        assert_eq!(parse_fraction(" -2 / 4 ").unwrap(), rat(-1, 2));
        assert_eq!(parse_fraction("5").unwrap(), rat_int(5));
        assert!(parse_fraction("1/0").is_err());
        assert_eq!(Scalar::to_json(&rat(1, 2)), serde_json::json!("1/2"));
        assert_eq!(Scalar::to_json(&rat_int(4)), serde_json::json!("4"));
        let v = serde_json::json!(0.5);
        assert!(<Rat as Scalar>::parse_json(&v).is_err(), "floats rejected in exact mode");
    }
}
