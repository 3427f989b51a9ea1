use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::draw_cumulative;
use crate::scalar::{ksum, Real};

/// Probability vector over item indices with validated invariants.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteDistribution<T> {
    entries: Vec<(usize, T)>,
    cumulative: Vec<f64>,
}

pub(crate) fn sum_tolerance<T: Real>(len: usize) -> f64 {
    (4.0 * T::epsilon().as_f64() * len.max(1) as f64).max(1e-9)
}

impl<T: Real> FiniteDistribution<T> {
    /// Validates nonnegativity, distinct ids, and unit mass (within 1e-9).
    pub fn new(entries: Vec<(usize, T)>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidDistribution("empty support".into()));
        }
        let mut seen = std::collections::HashSet::with_capacity(entries.len());
        for &(id, p) in &entries {
            if !seen.insert(id) {
                return Err(Error::InvalidDistribution(format!("duplicate item {id}")));
            }
            if !p.is_finite() || p < T::zero() {
                return Err(Error::InvalidDistribution(format!(
                    "probability {p} for item {id} is not a nonnegative finite number"
                )));
            }
        }
        let total = ksum(entries.iter().map(|e| e.1));
        let tol = sum_tolerance::<T>(entries.len());
        if (total.as_f64() - 1.0).abs() > tol {
            return Err(Error::InvalidDistribution(format!(
                "probabilities sum to {total}, expected 1"
            )));
        }
        Ok(Self::from_valid(entries))
    }

    fn from_valid(entries: Vec<(usize, T)>) -> Self {
        let mut acc = 0.0;
        let cumulative = entries
            .iter()
            .map(|e| {
                acc += e.1.as_f64();
                acc
            })
            .collect();
        Self {
            entries,
            cumulative,
        }
    }

    /// Normalizes nonnegative weights. Fails when every weight is zero.
    pub fn from_weights(ids: &[usize], weights: &[T]) -> Result<Self> {
        if ids.len() != weights.len() {
            return Err(Error::InvalidArgument("ids and weights differ in length".into()));
        }
        let total = ksum(weights.iter().copied());
        if !(total > T::zero()) {
            return Err(Error::InvalidDistribution("weights have zero total mass".into()));
        }
        let entries = ids.iter().zip(weights).map(|(&i, &w)| (i, w / total)).collect();
        Self::new(entries)
    }

    pub fn uniform(ids: &[usize]) -> Result<Self> {
        let w = vec![T::one(); ids.len()];
        Self::from_weights(ids, &w)
    }

    pub fn point_mass(id: usize) -> Self {
        Self::from_valid(vec![(id, T::one())])
    }

    pub fn entries(&self) -> &[(usize, T)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = usize> + '_ {
        self.entries.iter().map(|e| e.0)
    }

    pub fn prob(&self, id: usize) -> T {
        self.entries
            .iter()
            .find(|e| e.0 == id)
            .map(|e| e.1)
            .unwrap_or_else(T::zero)
    }

    pub fn max_prob(&self) -> T {
        self.entries.iter().fold(T::zero(), |m, e| m.max(e.1))
    }

    pub fn min_prob(&self) -> T {
        self.entries.iter().fold(T::infinity(), |m, e| m.min(e.1))
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.entries[draw_cumulative(rng, &self.cumulative)].0
    }

    /// Entries with strictly positive mass.
    pub fn positive(&self) -> impl Iterator<Item = (usize, T)> + '_ {
        self.entries.iter().copied().filter(|e| e.1 > T::zero())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_mass() {
        assert!(FiniteDistribution::<f64>::new(vec![(0, 0.5), (1, 0.4)]).is_err());
        assert!(FiniteDistribution::<f64>::new(vec![(0, 1.5), (1, -0.5)]).is_err());
        assert!(FiniteDistribution::<f64>::new(vec![(0, 0.5), (0, 0.5)]).is_err());
        assert!(FiniteDistribution::<f64>::new(vec![]).is_err());
        assert!(FiniteDistribution::<f64>::new(vec![(0, 0.5), (1, 0.5 + 1e-12)]).is_ok());
    }

    #[test]
    fn normalizes_weights() {
        let d = FiniteDistribution::from_weights(&[3, 5], &[81.0_f64, 1.0]).unwrap();
        assert!((d.prob(3) - 81.0 / 82.0).abs() < 1e-15);
        assert_eq!(d.prob(4), 0.0);
    }
}
