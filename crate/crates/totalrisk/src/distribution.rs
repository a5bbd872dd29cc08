//! Finite-support probability distributions.

use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DistError {
    #[error("probability of value #{index} is negative")]
    NegativeProbability { index: usize },
    #[error("probabilities sum to {sum}, expected 1")]
    MassNotOne { sum: String },
    #[error("distribution has no support")]
    Empty,
}

/// Finite-support distribution: strictly increasing values with positive
/// probabilities summing to one (exactly in rational mode, within `1e-12`
/// in float mode).
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution<K: Scalar> {
    support: Vec<(K, K)>,
}

impl<K: Scalar> Distribution<K> {
    /// Build from unsorted `(value, probability)` pairs. Equal values are
    /// merged; zero-probability entries are dropped.
    pub fn from_pairs(mut pairs: Vec<(K, K)>) -> Result<Self, DistError> {
        if pairs.is_empty() {
            return Err(DistError::Empty);
        }
        let zero = <K as Scalar>::zero();
        for (i, (_, p)) in pairs.iter().enumerate() {
            if p.total_cmp(&zero) == std::cmp::Ordering::Less {
                return Err(DistError::NegativeProbability { index: i });
            }
        }
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut support: Vec<(K, K)> = Vec::with_capacity(pairs.len());
        for (v, p) in pairs {
            match support.last_mut() {
                Some((lv, lp)) if *lv == v => {
                    *lp = lp.clone() + p;
                }
                _ => support.push((v, p)),
            }
        }
        support.retain(|(_, p)| !p.is_zero());
        if support.is_empty() {
            return Err(DistError::Empty);
        }
        let mut sum = <K as Scalar>::zero();
        for (_, p) in &support {
            sum = sum + p.clone();
        }
        if (sum.clone() - K::one()).abs().total_cmp(&K::mass_tol()) == std::cmp::Ordering::Greater
        {
            return Err(DistError::MassNotOne {
                sum: format!("{sum}"),
            });
        }
        Ok(Distribution { support })
    }

    pub fn point_mass(value: K) -> Self {
        Distribution {
            support: vec![(value, K::one())],
        }
    }

    /// `(value, probability)` pairs, values strictly increasing.
    pub fn support(&self) -> &[(K, K)] {
        &self.support
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn min_value(&self) -> &K {
        &self.support.first().unwrap().0
    }

    pub fn max_value(&self) -> &K {
        &self.support.last().unwrap().0
    }

    pub fn mean(&self) -> K {
        let mut m = <K as Scalar>::zero();
        for (v, p) in &self.support {
            m = m + v.clone() * p.clone();
        }
        m
    }

    pub fn variance(&self) -> K {
        let mean = self.mean();
        let mut var = <K as Scalar>::zero();
        for (v, p) in &self.support {
            let d = v.clone() - mean.clone();
            var = var + d.clone() * d * p.clone();
        }
        var
    }

    /// Shortfall `E(X − λ)⁺`: piecewise linear, convex, nonincreasing in λ.
    pub fn shortfall(&self, lambda: &K) -> K {
        let mut s = <K as Scalar>::zero();
        for (v, p) in &self.support {
            s = s + v.pos_part_minus(lambda) * p.clone();
        }
        s
    }

    /// Strict upper tail `P(X > λ)`.
    pub fn tail_above(&self, lambda: &K) -> K {
        let mut s = <K as Scalar>::zero();
        for (v, p) in &self.support {
            if v.total_cmp(lambda) == std::cmp::Ordering::Greater {
                s = s + p.clone();
            }
        }
        s
    }
}
