use serde::{Deserialize, Serialize};

use crate::model::DiscreteDistribution;
use crate::numeric::{threshold_slack, NeumaierSum, VALUE_TOL};

/// Exact law of a real random variable: ascending distinct values with
/// positive probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteDistribution {
    values: Vec<f64>,
    probs: Vec<f64>,
}

impl FiniteDistribution {
    /// Builds a law from weighted outcomes. Values within `VALUE_TOL` of the
    /// smallest value of their group are merged into it; zero weights are dropped.
    ///
    /// The sort is stable, so the result only depends on the input order.
    pub fn from_pairs(mut pairs: Vec<(f64, f64)>) -> Self {
        pairs.retain(|&(_, p)| p > 0.0);
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut values = Vec::new();
        let mut probs = Vec::new();
        let mut acc = NeumaierSum::new();
        let mut head = f64::NAN;
        for (v, p) in pairs {
            if values.is_empty() || v - head > VALUE_TOL {
                if !values.is_empty() {
                    probs.push(acc.value());
                }
                values.push(v);
                head = v;
                acc = NeumaierSum::new();
            }
            acc.add(p);
        }
        if !values.is_empty() {
            probs.push(acc.value());
        }
        Self { values, probs }
    }

    pub fn point_mass(value: f64) -> Self {
        Self {
            values: vec![value],
            probs: vec![1.0],
        }
    }

    pub fn from_law(law: &DiscreteDistribution) -> Self {
        Self::from_pairs(law.atoms().iter().copied().zip(law.probs().iter().copied()).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        crate::numeric::compensated_sum(self.probs.iter().copied())
    }

    /// Law of `f(V)`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::from_pairs(self.values.iter().map(|&v| f(v)).zip(self.probs.iter().copied()).collect())
    }

    /// Law of `|V|`.
    pub fn abs(&self) -> Self {
        self.map(f64::abs)
    }

    pub fn expect(&self, f: impl Fn(f64) -> f64) -> f64 {
        crate::numeric::compensated_sum(self.values.iter().zip(&self.probs).map(|(&v, &p)| p * f(v)))
    }

    pub fn mean(&self) -> f64 {
        self.expect(|v| v)
    }

    pub fn min(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    pub fn max(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    /// `P(V > t)`; values within rounding distance of `t` count as equal to it.
    pub fn tail_gt(&self, t: f64) -> f64 {
        let cut = t + threshold_slack(t);
        let start = self.values.partition_point(|&v| v <= cut);
        crate::numeric::compensated_sum(self.probs[start..].iter().copied())
    }

    /// `P(V >= t)`; values within rounding distance of `t` count as equal to it.
    pub fn tail_ge(&self, t: f64) -> f64 {
        let cut = t - threshold_slack(t);
        let start = self.values.partition_point(|&v| v < cut);
        crate::numeric::compensated_sum(self.probs[start..].iter().copied())
    }

    /// Law of `max(V, W)` for independent `V`, `W`.
    pub fn max_independent(&self, other: &Self) -> Self {
        let mut pairs = Vec::with_capacity(self.len() * other.len());
        for (&a, &p) in self.values.iter().zip(&self.probs) {
            for (&b, &q) in other.values.iter().zip(&other.probs) {
                pairs.push((a.max(b), p * q));
            }
        }
        Self::from_pairs(pairs)
    }

    /// Law of `V + W` for independent `V`, `W`.
    pub fn convolve(&self, other: &Self) -> Self {
        let mut pairs = Vec::with_capacity(self.len() * other.len());
        for (&a, &p) in self.values.iter().zip(&self.probs) {
            for (&b, &q) in other.values.iter().zip(&other.probs) {
                pairs.push((a + b, p * q));
            }
        }
        Self::from_pairs(pairs)
    }
}
