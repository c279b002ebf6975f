//! Suprema of finite classes of centered score functions over independent
//! discrete variables: `S = max_f sum_i f_i(Z_i)`.

use serde::{Deserialize, Serialize};

use super::{moment, Exact, ExactError, FiniteDistribution, MomentKind};
use crate::model::DiscreteDistribution;
use crate::numeric::{abs_pow, compensated_sum, NeumaierSum};

/// Centering tolerance for class members.
pub const CENTERING_TOL: f64 = 1e-10;

/// A finite class of functions evaluated on independent variables.
///
/// `functions[f][i][a]` is the value of member `f` at atom `a` of `Z_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreClass {
    pub laws: Vec<DiscreteDistribution>,
    pub functions: Vec<Vec<Vec<f64>>>,
}

impl ScoreClass {
    /// Checks shapes and centering.
    pub fn validate(&self) -> Result<(), ExactError> {
        if self.functions.is_empty() {
            return Err(ExactError::InvalidQuery("class has no members".into()));
        }
        for (f, member) in self.functions.iter().enumerate() {
            if member.len() != self.laws.len() {
                return Err(ExactError::InvalidQuery(format!(
                    "member {f} has {} components for {} variables",
                    member.len(),
                    self.laws.len()
                )));
            }
            for (i, (values, law)) in member.iter().zip(&self.laws).enumerate() {
                if values.len() != law.len() {
                    return Err(ExactError::InvalidQuery(format!(
                        "member {f} has {} values on the {} atoms of Z_{i}",
                        values.len(),
                        law.len()
                    )));
                }
                let mean = compensated_sum(values.iter().zip(law.probs()).map(|(v, p)| v * p));
                if mean.abs() > CENTERING_TOL {
                    return Err(ExactError::NotCentered { function: f, index: i, mean });
                }
            }
        }
        Ok(())
    }

    /// `sigma^2 = max_f sum_i E f_i(Z_i)^2`.
    pub fn sigma2(&self) -> f64 {
        self.functions
            .iter()
            .map(|member| {
                compensated_sum(member.iter().zip(&self.laws).map(|(values, law)| {
                    compensated_sum(values.iter().zip(law.probs()).map(|(v, p)| p * v * v))
                }))
            })
            .fold(0.0, f64::max)
    }

    /// `a = max_i max_f max_atoms |f_i|`.
    pub fn sup_norm(&self) -> f64 {
        self.functions
            .iter()
            .flatten()
            .flatten()
            .fold(0.0, |acc, v| acc.max(v.abs()))
    }

    /// Law of `F_i(Z_i) = max_f |f_i(Z_i)|` for each `i`.
    fn envelope_laws(&self) -> Vec<FiniteDistribution> {
        self.laws
            .iter()
            .enumerate()
            .map(|(i, law)| {
                let pairs = (0..law.len())
                    .map(|a| {
                        let env = self.functions.iter().fold(0.0f64, |acc, f| acc.max(f[i][a].abs()));
                        (env, law.probs()[a])
                    })
                    .collect();
                FiniteDistribution::from_pairs(pairs)
            })
            .collect()
    }
}

/// Exact moments of the supremum.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SupMoments {
    /// `E|S|^p`.
    pub moment_p: f64,
    /// `E|S|`.
    pub mean_abs: f64,
    pub sigma2: f64,
    /// `E max_i sup_f |f(Z_i)|^p`.
    pub envelope_moment: f64,
    /// `max_i sup_f ||f(Z_i)||_inf`.
    pub a: f64,
}

/// Exact law of `S`.
pub fn sup_distribution(ex: &Exact, class: &ScoreClass) -> Result<FiniteDistribution, ExactError> {
    class.validate()?;
    let radices: Vec<usize> = class.laws.iter().map(DiscreteDistribution::len).collect();
    let chunks = ex.enumerate(&radices, Vec::new, |acc: &mut Vec<(f64, f64)>, digits| {
        let prob: f64 = digits
            .iter()
            .enumerate()
            .map(|(i, &a)| class.laws[i].probs()[a])
            .product();
        let s = class
            .functions
            .iter()
            .map(|f| {
                let mut sum = NeumaierSum::new();
                for (i, &a) in digits.iter().enumerate() {
                    sum.add(f[i][a]);
                }
                sum.value()
            })
            .fold(f64::NEG_INFINITY, f64::max);
        acc.push((s, prob));
    })?;
    Ok(FiniteDistribution::from_pairs(chunks.into_iter().flatten().collect()))
}

pub fn empirical_sup_moment(ex: &Exact, class: &ScoreClass, p: f64) -> Result<SupMoments, ExactError> {
    if !(p > 0.0) {
        return Err(ExactError::InvalidQuery(format!("p must be positive, got {p}")));
    }
    let dist = sup_distribution(ex, class)?;
    let envelope = class
        .envelope_laws()
        .into_iter()
        .reduce(|a, b| a.max_independent(&b))
        .unwrap_or_else(|| FiniteDistribution::point_mass(0.0));
    Ok(SupMoments {
        moment_p: moment(&dist, p, MomentKind::Absolute)?,
        mean_abs: moment(&dist, 1.0, MomentKind::Absolute)?,
        sigma2: class.sigma2(),
        envelope_moment: envelope.expect(|v| abs_pow(v, p)),
        a: class.sup_norm(),
    })
}
