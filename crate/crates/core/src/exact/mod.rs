//! Exact enumeration: laws of U-statistics, moments and mixed moments.
//!
//! Every quantity is computed by walking the full configuration space of the
//! coordinate variables involved. Configurations are split into fixed-size
//! chunks processed in parallel; chunk results are merged in chunk order, so
//! output does not depend on the worker count.

mod distribution;
mod empirical;
mod mixed;

pub use distribution::FiniteDistribution;
pub use empirical::{empirical_sup_moment, sup_distribution, ScoreClass, SupMoments};
pub use mixed::{IndexSubset, MixedForm, MixedMomentQuery};

use thiserror::Error;

use crate::model::{DiscreteDistribution, Mode, UStatInstance};
use crate::numeric::moment_pow;
use crate::par;

/// Default limit on the number of joint configurations enumerated.
pub const DEFAULT_CAP: u64 = 10_000_000;

/// Configurations handled per work unit.
const CHUNK: u64 = 4096;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExactError {
    #[error("enumeration infeasible: {count} configurations exceed the cap of {cap}")]
    Infeasible { count: u64, cap: u64 },
    #[error(
        "signed power {p} of a negative value is undefined; use absolute-moment mode for non-integer p"
    )]
    SignedPower { p: f64 },
    #[error("invalid query: {0}")]
    InvalidQuery(String),
    #[error("class member {function} has mean {mean} under Z_{index}, not centered")]
    NotCentered {
        function: usize,
        index: usize,
        mean: f64,
    },
}

/// Sign convention for powers of possibly negative quantities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MomentKind {
    /// `E|V|^p`.
    #[default]
    Absolute,
    /// `E V^p`; negative support requires integer `p`.
    Raw,
}

impl MomentKind {
    fn absolute(self) -> bool {
        self == MomentKind::Absolute
    }
}

/// Enumeration engine with a configurable cap.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Exact {
    pub cap: u64,
}

impl Default for Exact {
    fn default() -> Self {
        Self { cap: DEFAULT_CAP }
    }
}

/// Product of radices, saturating at `u64::MAX`.
pub(crate) fn config_count(radices: &[usize]) -> u64 {
    radices
        .iter()
        .fold(1u64, |acc, &r| acc.saturating_mul(r as u64))
}

impl Exact {
    pub fn new(cap: u64) -> Self {
        Self { cap }
    }

    pub(crate) fn check(&self, count: u64) -> Result<(), ExactError> {
        if count > self.cap {
            Err(ExactError::Infeasible {
                count,
                cap: self.cap,
            })
        } else {
            Ok(())
        }
    }

    /// Folds `visit` over every digit vector of the mixed-radix space,
    /// returning one accumulator per chunk in chunk order.
    pub(crate) fn enumerate<A, I, F>(&self, radices: &[usize], init: I, visit: F) -> Result<Vec<A>, ExactError>
    where
        A: Send,
        I: Fn() -> A + Sync + Send,
        F: Fn(&mut A, &[usize]) + Sync + Send,
    {
        let count = config_count(radices);
        self.check(count)?;
        if radices.contains(&0) {
            return Ok(Vec::new());
        }
        let chunks = count.div_ceil(CHUNK) as usize;
        Ok(par::map_indexed(chunks, |c| {
            let start = c as u64 * CHUNK;
            let end = (start + CHUNK).min(count);
            let mut digits = decode(start, radices);
            let mut acc = init();
            for _ in start..end {
                visit(&mut acc, &digits);
                crate::model::increment_digits(&mut digits, radices);
            }
            acc
        }))
    }

    /// Exact law of the U-statistic.
    pub fn distribution(&self, inst: &UStatInstance) -> Result<FiniteDistribution, ExactError> {
        self.statistic_distribution(inst, false)
    }

    /// `E|V|^p` for `V` the statistic with every kernel multiplied by the
    /// product of independent Rademacher signs attached to its arguments.
    pub fn chaos_moment(&self, inst: &UStatInstance, p: f64) -> Result<f64, ExactError> {
        let dist = self.statistic_distribution(inst, true)?;
        moment(&dist, p, MomentKind::Absolute)
    }

    /// Law of the sign-randomized statistic.
    pub fn chaos_distribution(&self, inst: &UStatInstance) -> Result<FiniteDistribution, ExactError> {
        self.statistic_distribution(inst, true)
    }

    fn statistic_distribution(&self, inst: &UStatInstance, signs: bool) -> Result<FiniteDistribution, ExactError> {
        let evaluator = Evaluator::new(inst, signs);
        let chunks = self.enumerate(
            &evaluator.radices,
            Vec::new,
            |acc: &mut Vec<(f64, f64)>, digits| acc.push(evaluator.eval(digits)),
        )?;
        Ok(FiniteDistribution::from_pairs(chunks.into_iter().flatten().collect()))
    }

    /// `E f(U)` by direct enumeration, without building the law.
    pub fn expect(&self, inst: &UStatInstance, f: impl Fn(f64) -> f64 + Sync + Send) -> Result<f64, ExactError> {
        let evaluator = Evaluator::new(inst, false);
        let chunks = self.enumerate(
            &evaluator.radices,
            crate::numeric::NeumaierSum::new,
            |acc, digits| {
                let (u, prob) = evaluator.eval(digits);
                acc.add(prob * f(u));
            },
        )?;
        let mut total = crate::numeric::NeumaierSum::new();
        for c in &chunks {
            total.merge(c);
        }
        Ok(total.value())
    }

    pub fn mixed_moment(&self, inst: &UStatInstance, query: &MixedMomentQuery) -> Result<f64, ExactError> {
        mixed::evaluate(self, inst, query)
    }
}

/// Decodes a linear configuration number into mixed-radix digits (first digit most significant).
fn decode(mut k: u64, radices: &[usize]) -> Vec<usize> {
    let mut digits = vec![0; radices.len()];
    for pos in (0..radices.len()).rev() {
        let r = radices[pos] as u64;
        digits[pos] = (k % r) as usize;
        k /= r;
    }
    digits
}

/// Evaluates the statistic on one joint configuration of the live coordinates.
///
/// Coordinates are ordered slot-major (`j * n + i`) for decoupled instances
/// and by index for undecoupled ones. With signs enabled each coordinate
/// digit encodes `atom * 2 + sign`.
struct Evaluator<'a> {
    inst: &'a UStatInstance,
    radices: Vec<usize>,
    probs: Vec<&'a [f64]>,
    /// Per multi-index: coordinate position and table stride for each slot.
    terms: Vec<Vec<(usize, usize)>>,
    signs: bool,
}

impl<'a> Evaluator<'a> {
    fn new(inst: &'a UStatInstance, signs: bool) -> Self {
        let (m, n) = (inst.m(), inst.n());
        let laws: Vec<&DiscreteDistribution> = inst.coordinate_laws();
        let factor = if signs { 2 } else { 1 };
        let radices = laws.iter().map(|l| l.len() * factor).collect();
        let probs = laws.iter().map(|l| l.probs()).collect();
        let terms = crate::model::multi_indices(m, n)
            .map(|mi| {
                let shape = inst.grid().shape_for(&mi);
                let mut stride = 1;
                let mut out = vec![(0, 0); m];
                for j in (0..m).rev() {
                    let coord = match inst.mode() {
                        Mode::Decoupled => j * n + mi[j],
                        Mode::Undecoupled => mi[j],
                    };
                    out[j] = (coord, stride);
                    stride *= shape[j];
                }
                out
            })
            .collect();
        Self {
            inst,
            radices,
            probs,
            terms,
            signs,
        }
    }

    #[inline]
    fn eval(&self, digits: &[usize]) -> (f64, f64) {
        let mut prob = 1.0;
        for (k, &d) in digits.iter().enumerate() {
            let atom = if self.signs { d / 2 } else { d };
            prob *= self.probs[k][atom];
        }
        if self.signs {
            prob *= 0.5f64.powi(digits.len() as i32);
        }
        let mut sum = crate::numeric::NeumaierSum::new();
        for (flat, term) in self.terms.iter().enumerate() {
            let table = self.inst.kernel().table_flat(flat).data();
            let mut off = 0;
            let mut sign = 1.0;
            for &(coord, stride) in term {
                let d = digits[coord];
                if self.signs {
                    off += (d / 2) * stride;
                    if d % 2 == 0 {
                        sign = -sign;
                    }
                } else {
                    off += d * stride;
                }
            }
            sum.add(sign * table[off]);
        }
        (sum.value(), prob)
    }
}

/// Exact law of the U-statistic with the default cap.
pub fn exact_distribution(inst: &UStatInstance) -> Result<FiniteDistribution, ExactError> {
    Exact::default().distribution(inst)
}

/// `E|V|^p` (absolute) or `E V^p` (raw) under a finite law.
pub fn moment(dist: &FiniteDistribution, p: f64, kind: MomentKind) -> Result<f64, ExactError> {
    let mut acc = crate::numeric::NeumaierSum::new();
    for (&v, &q) in dist.values().iter().zip(dist.probs()) {
        let x = moment_pow(v, p, kind.absolute()).ok_or(ExactError::SignedPower { p })?;
        acc.add(q * x);
    }
    Ok(acc.value())
}

pub fn chaos_moment(inst: &UStatInstance, p: f64) -> Result<f64, ExactError> {
    Exact::default().chaos_moment(inst, p)
}

pub fn mixed_moment(inst: &UStatInstance, query: &MixedMomentQuery) -> Result<f64, ExactError> {
    Exact::default().mixed_moment(inst, query)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{
        generate_instance, rademacher_chaos, undecouple, Family, Flags, KernelTensor, VariableGrid,
    };

    fn bernoulli_sum(n: usize) -> UStatInstance {
        let law = DiscreteDistribution::new(vec![0.0, 1.0], vec![0.5, 0.5]).unwrap();
        let grid = VariableGrid::iid(1, n, law);
        let kernel = KernelTensor::from_fn(&grid, |_, a| a[0] as f64);
        UStatInstance::new(grid, kernel, Mode::Decoupled, Flags::default()).unwrap()
    }

    fn two_x1x2() -> UStatInstance {
        let rad = DiscreteDistribution::rademacher();
        let grid = VariableGrid::iid(2, 2, rad.clone());
        let kernel = KernelTensor::from_fn(&grid, |mi, a| {
            if mi[0] == mi[1] {
                0.0
            } else {
                rad.atoms()[a[0]] * rad.atoms()[a[1]]
            }
        });
        let inst = UStatInstance::new(grid, kernel, Mode::Decoupled, Flags::default()).unwrap();
        undecouple(&inst).unwrap()
    }

    #[test]
    fn binomial_law() {
        let d = exact_distribution(&bernoulli_sum(2)).unwrap();
        assert_eq!(d.values(), &[0.0, 1.0, 2.0]);
        assert_eq!(d.probs(), &[0.25, 0.5, 0.25]);
        assert_eq!(moment(&d, 2.0, MomentKind::Absolute).unwrap(), 1.5);
    }

    #[test]
    fn undecoupled_product_law() {
        let d = exact_distribution(&two_x1x2()).unwrap();
        assert_eq!(d.values(), &[-2.0, 2.0]);
        assert_eq!(d.probs(), &[0.5, 0.5]);
        assert_eq!(moment(&d, 3.0, MomentKind::Absolute).unwrap(), 8.0);
        assert_eq!(moment(&d, 3.0, MomentKind::Raw).unwrap(), 0.0);
        assert!(matches!(
            moment(&d, 2.5, MomentKind::Raw),
            Err(ExactError::SignedPower { .. })
        ));
    }

    #[test]
    fn identity_chaos_matches_sign_enumeration() {
        let inst = rademacher_chaos(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let d = exact_distribution(&inst).unwrap();
        // independent oracle: the 16 sign patterns of (x1, x2, y1, y2)
        let mut counts = std::collections::BTreeMap::new();
        for bits in 0..16u32 {
            let s = |k: u32| if bits >> k & 1 == 1 { 1.0 } else { -1.0 };
            let v = s(0) * s(2) + s(1) * s(3);
            *counts.entry(v as i64).or_insert(0) += 1;
        }
        let expect: Vec<(f64, f64)> = counts.iter().map(|(&v, &c)| (v as f64, c as f64 / 16.0)).collect();
        let got: Vec<(f64, f64)> = d.values().iter().copied().zip(d.probs().iter().copied()).collect();
        assert_eq!(got, expect);
        assert_eq!(expect, vec![(-2.0, 0.25), (0.0, 0.5), (2.0, 0.25)]);
    }

    #[test]
    fn cap_is_enforced() {
        let inst = bernoulli_sum(10);
        let err = Exact::new(1000).distribution(&inst).unwrap_err();
        assert_eq!(err, ExactError::Infeasible { count: 1024, cap: 1000 });
        assert!(err.to_string().contains("1024"));
    }

    #[test]
    fn chaos_of_constant_kernels() {
        let one = DiscreteDistribution::point_mass(1.0);
        for m in [1, 2] {
            let grid = VariableGrid::iid(m, 1, one.clone());
            let kernel = KernelTensor::from_fn(&grid, |_, _| 1.0);
            let inst = UStatInstance::new(grid, kernel, Mode::Decoupled, Flags::default()).unwrap();
            for p in [0.5, 1.0, 3.0] {
                assert!((chaos_moment(&inst, p).unwrap() - 1.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn chaos_equals_moment_for_separately_symmetric() {
        for seed in 0..5 {
            let inst = generate_instance(Family::GaussianChaosAnalog, 2, 2, 2, seed).unwrap();
            let direct = moment(&exact_distribution(&inst).unwrap(), 3.0, MomentKind::Absolute).unwrap();
            let chaos = chaos_moment(&inst, 3.0).unwrap();
            assert!((direct - chaos).abs() <= 1e-12 * direct.max(1.0));
        }
    }

    #[test]
    fn direct_expectation_matches_law() {
        for seed in 0..10 {
            let inst = generate_instance(Family::Canonical, 2, 2, 3, seed).unwrap();
            let d = exact_distribution(&inst).unwrap();
            let via_law = moment(&d, 2.5, MomentKind::Absolute).unwrap();
            let direct = Exact::default().expect(&inst, |u| u.abs().powf(2.5)).unwrap();
            assert!((via_law - direct).abs() <= 1e-12 * direct.max(1e-300));
        }
    }

    #[test]
    fn thread_count_does_not_change_the_law() {
        let inst = generate_instance(Family::Nonneg, 2, 3, 3, 4).unwrap();
        let a = par::with_threads(1, || exact_distribution(&inst).unwrap());
        let b = par::with_threads(3, || exact_distribution(&inst).unwrap());
        assert_eq!(a, b);
    }
}
