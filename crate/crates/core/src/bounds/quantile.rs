//! Quantile-type parameters: the strict-tail quantile `t0`, the maxima
//! calibration `delta0`, and the fixed point `v0` of `v = sum_i E(xi_i ∧ v)`.

use super::BoundsError;
use crate::exact::FiniteDistribution;
use crate::numeric::NeumaierSum;

/// Slack on the `sum_i P(xi_i > t) <= 1` comparison.
pub const DELTA0_SLACK: f64 = 1e-12;
/// Relative slack on `phi(v) >= v` and on a unit slope of `phi`.
pub const V0_SLACK: f64 = 1e-12;

/// `inf { t >= 0 : P(A > t) <= q }`.
///
/// `P(A > t)` is a right-continuous step function with jumps at the support,
/// so the infimum is zero or a positive support point.
pub fn quantile_t0(dist: &FiniteDistribution, q: f64) -> Result<f64, BoundsError> {
    TailTable::new(dist).t0(q)
}

/// A law with precomputed upper-tail sums, for repeated quantile queries.
#[derive(Debug, Clone)]
pub struct TailTable {
    dist: FiniteDistribution,
    /// `suffix[k]` approximates `P(A >= values[k])`; `suffix[len] = 0`.
    suffix: Vec<f64>,
}

impl TailTable {
    pub fn new(dist: &FiniteDistribution) -> Self {
        let probs = dist.probs();
        let mut suffix = vec![0.0; probs.len() + 1];
        let mut acc = NeumaierSum::new();
        for k in (0..probs.len()).rev() {
            acc.add(probs[k]);
            suffix[k] = acc.value();
        }
        Self {
            dist: dist.clone(),
            suffix,
        }
    }

    pub fn dist(&self) -> &FiniteDistribution {
        &self.dist
    }

    /// [`quantile_t0`] in `O(log n)` plus two exact tail evaluations.
    ///
    /// The suffix sums only locate the candidate; the returned point satisfies
    /// the definition with the exact [`FiniteDistribution::tail_gt`].
    pub fn t0(&self, q: f64) -> Result<f64, BoundsError> {
        if !(q > 0.0 && q < 1.0) {
            return Err(BoundsError::Domain(format!("quantile level must lie in (0, 1), got {q}")));
        }
        let d = &self.dist;
        if d.tail_gt(0.0) <= q {
            return Ok(0.0);
        }
        let values = d.values();
        let first = values.partition_point(|&v| v <= 0.0);
        if first == values.len() {
            return Ok(0.0);
        }
        // P(A > values[k]) is nonincreasing in k and equals suffix[k + 1] up to rounding.
        let mut k = first + self.suffix[first + 1..].partition_point(|&s| s > q);
        k = k.min(values.len() - 1);
        while k > first && d.tail_gt(values[k - 1]) <= q {
            k -= 1;
        }
        while k + 1 < values.len() && d.tail_gt(values[k]) > q {
            k += 1;
        }
        Ok(values[k])
    }
}

/// `sum_i P(xi_i > t)`.
pub fn tail_sum(laws: &[FiniteDistribution], t: f64) -> f64 {
    let mut acc = NeumaierSum::new();
    for law in laws {
        acc.add(law.tail_gt(t));
    }
    acc.value()
}

/// `inf { t > 0 : sum_i P(xi_i > t) <= 1 }`.
pub fn delta0(laws: &[FiniteDistribution]) -> Result<f64, BoundsError> {
    if laws.is_empty() {
        return Err(BoundsError::Domain("delta0 needs at least one law".into()));
    }
    if tail_sum(laws, 0.0) <= 1.0 + DELTA0_SLACK {
        return Ok(0.0);
    }
    let mut support: Vec<f64> = laws
        .iter()
        .flat_map(|l| l.values().iter().copied())
        .filter(|&v| v > 0.0)
        .collect();
    support.sort_by(f64::total_cmp);
    support.dedup();
    for v in support {
        if tail_sum(laws, v) <= 1.0 + DELTA0_SLACK {
            return Ok(v);
        }
    }
    Err(BoundsError::Domain("tail sum never drops to 1".into()))
}

/// `phi(v) = sum_i E(xi_i ∧ v)`.
pub fn phi(laws: &[FiniteDistribution], v: f64) -> f64 {
    let mut acc = NeumaierSum::new();
    for law in laws {
        acc.add(law.expect(|x| x.min(v)));
    }
    acc.value()
}

/// Largest solution of `v = phi(v)`, optionally after replacing every
/// `xi_i` by `xi_i ∧ t`.
///
/// `phi` is concave, nondecreasing and piecewise linear with breakpoints at
/// the support points, so `{v : phi(v) >= v}` is an interval `[0, v0]`. The
/// last breakpoint inside it is found by scanning, and `v0` is solved in
/// closed form on the following linear piece.
pub fn v0(laws: &[FiniteDistribution], truncation: Option<f64>) -> Result<f64, BoundsError> {
    if laws.iter().any(|l| l.min() < 0.0) {
        return Err(BoundsError::Domain("v0 needs nonnegative variables".into()));
    }
    if let Some(t) = truncation {
        if !(t >= 0.0) {
            return Err(BoundsError::Domain(format!("truncation level must be nonnegative, got {t}")));
        }
        let cut: Vec<FiniteDistribution> = laws.iter().map(|l| l.map(|x| x.min(t))).collect();
        return v0(&cut, None);
    }
    let mut breaks: Vec<f64> = laws
        .iter()
        .flat_map(|l| l.values().iter().copied())
        .filter(|&v| v > 0.0)
        .collect();
    breaks.push(0.0);
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    // probabilities summing to 1 - ulp must not turn phi(v) = v into phi(v) < v
    let slack = |v: f64| V0_SLACK * v.max(1.0);
    let mut last = 0;
    for (k, &b) in breaks.iter().enumerate() {
        if phi(laws, b) >= b - slack(b) {
            last = k;
        }
    }
    let b = breaks[last];
    let phi_b = phi(laws, b);
    let slope = tail_sum(laws, b);
    let upper = breaks.get(last + 1).copied();
    let v = if slope < 1.0 - V0_SLACK {
        (phi_b - slope * b) / (1.0 - slope)
    } else {
        upper.unwrap_or(phi_b)
    };
    let v = match upper {
        Some(u) => v.clamp(b, u),
        None => v.max(b),
    };
    Ok(v)
}
