//! Seeded Monte-Carlo tails of U-statistics beyond enumeration range.
//!
//! Replicates are cut into fixed chunks of [`CHUNK`]; chunk `c` draws from
//! ChaCha8 seeded with the run seed on stream `c`. Chunks are merged in order,
//! so every summary depends only on the source, the seed and the replicate
//! count, never on the number of workers.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

use crate::bounds::{active_regime, exp_bound_eval, BoundParams, ExpForm, Regime};
use crate::model::{multi_indices, Mode, UStatInstance};
use crate::numeric::{monotone_root, threshold_slack};
use crate::par;

/// Replicates per work unit.
pub const CHUNK: u64 = 4096;
/// Points in the default tail grid.
pub const DEFAULT_GRID_POINTS: usize = 32;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum McError {
    #[error("replicate count must be at least 1")]
    NoReplicates,
    #[error("confidence must lie in (0, 1), got {0}")]
    Confidence(f64),
    #[error("empty tail grid")]
    EmptyGrid,
    #[error("tail grid must be positive and strictly increasing")]
    BadGrid,
    #[error("invalid source: {0}")]
    Source(String),
}

/// What is simulated.
#[derive(Debug, Clone, PartialEq)]
pub enum Source {
    Instance(UStatInstance),
    /// `sum_ij x_ij g_i g'_j` with independent standard normal `g`, `g'`.
    GaussianChaos { coeffs: Vec<Vec<f64>> },
    /// `sum_ij X_i Y_j` over centered Bernoulli(1/n) coordinates, a product of
    /// two independent centered Binomial(n, 1/n) variables.
    BernoulliProduct { n: usize },
}

impl Source {
    pub fn name(&self) -> String {
        match self {
            Source::Instance(inst) => format!("instance(m={}, n={})", inst.m(), inst.n()),
            Source::GaussianChaos { coeffs } => format!("gaussian-chaos(n={})", coeffs.len()),
            Source::BernoulliProduct { n } => format!("bernoulli-product(n={n})"),
        }
    }
}

/// Draws of `|U|` in ascending order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleSummary {
    pub source: String,
    pub seed: u64,
    pub reps: u64,
    pub mean: f64,
    #[serde(skip)]
    abs_sorted: Vec<f64>,
}

impl SampleSummary {
    pub fn abs_sorted(&self) -> &[f64] {
        &self.abs_sorted
    }

    /// Nearest-rank quantile of `|U|` at `level` in `[0, 1]`.
    pub fn quantile(&self, level: f64) -> f64 {
        let n = self.abs_sorted.len();
        let rank = ((level.clamp(0.0, 1.0) * n as f64).ceil() as usize).clamp(1, n);
        self.abs_sorted[rank - 1]
    }

    /// `#{|U| >= x}`, with draws within rounding distance of `x` counted as equal.
    pub fn count_ge(&self, x: f64) -> u64 {
        let cut = x - threshold_slack(x);
        (self.abs_sorted.len() - self.abs_sorted.partition_point(|&v| v < cut)) as u64
    }

    pub fn is_point_mass(&self) -> bool {
        self.abs_sorted.first() == self.abs_sorted.last()
    }
}

/// Per-replicate sampler for a finite instance: inverse-CDF draws of every
/// live coordinate, then a fixed-order sum over the kernel tables.
struct InstanceSampler<'a> {
    cdfs: Vec<Vec<f64>>,
    /// For each multi-index: table data, coordinate of each slot, stride of each slot.
    terms: Vec<(&'a [f64], Vec<usize>, Vec<usize>)>,
}

impl<'a> InstanceSampler<'a> {
    fn new(inst: &'a UStatInstance) -> Self {
        let (m, n) = (inst.m(), inst.n());
        let cdfs = inst
            .coordinate_laws()
            .iter()
            .map(|law| {
                let mut acc = 0.0;
                law.probs()
                    .iter()
                    .map(|p| {
                        acc += p;
                        acc
                    })
                    .collect()
            })
            .collect();
        let undecoupled = inst.mode() == Mode::Undecoupled;
        let terms = multi_indices(m, n)
            .zip(inst.kernel().tables())
            .map(|(mi, t)| {
                let coords = mi
                    .iter()
                    .enumerate()
                    .map(|(j, &i)| if undecoupled { i } else { j * n + i })
                    .collect();
                let shape = t.shape();
                let mut strides = vec![1; m];
                for j in (0..m.saturating_sub(1)).rev() {
                    strides[j] = strides[j + 1] * shape[j + 1];
                }
                (t.data(), coords, strides)
            })
            .collect();
        Self { cdfs, terms }
    }

    fn draw(&self, rng: &mut ChaCha8Rng, digits: &mut [usize]) -> f64 {
        for (d, cdf) in digits.iter_mut().zip(&self.cdfs) {
            let u: f64 = rng.random();
            *d = cdf.partition_point(|&c| c <= u).min(cdf.len() - 1);
        }
        let mut sum = 0.0;
        for (data, coords, strides) in &self.terms {
            let off: usize = coords.iter().zip(strides).map(|(&c, &s)| digits[c] * s).sum();
            sum += data[off];
        }
        sum
    }
}

/// Uniform draw in the open interval `(0, 1)`.
fn open_unit(rng: &mut ChaCha8Rng) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) / (1u64 << 53) as f64
}

/// Simulates `reps` replicates of `|U|`.
pub fn sample_ustat(source: &Source, reps: u64, seed: u64) -> Result<SampleSummary, McError> {
    if reps == 0 {
        return Err(McError::NoReplicates);
    }
    match source {
        Source::GaussianChaos { coeffs } if coeffs.is_empty() || coeffs.iter().any(|r| r.len() != coeffs.len()) => {
            return Err(McError::Source("coefficient matrix must be square and nonempty".into()))
        }
        Source::BernoulliProduct { n } if *n == 0 => return Err(McError::Source("n must be positive".into())),
        _ => {}
    }
    let sampler = match source {
        Source::Instance(inst) => Some(InstanceSampler::new(inst)),
        _ => None,
    };
    let normal = Normal::standard();
    let chunks = reps.div_ceil(CHUNK) as usize;
    let parts = par::map_indexed(chunks, |c| {
        let start = c as u64 * CHUNK;
        let len = (reps - start).min(CHUNK) as usize;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(c as u64);
        let mut out = Vec::with_capacity(len);
        match source {
            Source::Instance(_) => {
                let s = sampler.as_ref().expect("instance sampler");
                let mut digits = vec![0; s.cdfs.len()];
                for _ in 0..len {
                    out.push(s.draw(&mut rng, &mut digits));
                }
            }
            Source::GaussianChaos { coeffs } => {
                let n = coeffs.len();
                let mut g = vec![0.0; n];
                let mut h = vec![0.0; n];
                for _ in 0..len {
                    for v in g.iter_mut().chain(h.iter_mut()) {
                        *v = normal.inverse_cdf(open_unit(&mut rng));
                    }
                    let mut sum = 0.0;
                    for (row, gi) in coeffs.iter().zip(&g) {
                        let inner: f64 = row.iter().zip(&h).map(|(x, hj)| x * hj).sum();
                        sum += gi * inner;
                    }
                    out.push(sum);
                }
            }
            Source::BernoulliProduct { n } => {
                let binom = Binomial::new(*n as u64, 1.0 / *n as f64).expect("valid binomial");
                for _ in 0..len {
                    let a = binom.sample(&mut rng) as f64 - 1.0;
                    let b = binom.sample(&mut rng) as f64 - 1.0;
                    out.push(a * b);
                }
            }
        }
        out
    });
    let mut mean = crate::numeric::NeumaierSum::new();
    let mut abs_sorted = Vec::with_capacity(reps as usize);
    for part in parts {
        for v in part {
            mean.add(v);
            abs_sorted.push(v.abs());
        }
    }
    abs_sorted.sort_by(f64::total_cmp);
    Ok(SampleSummary {
        source: source.name(),
        seed,
        reps,
        mean: mean.value() / reps as f64,
        abs_sorted,
    })
}

/// `DEFAULT_GRID_POINTS` log-spaced points from the median of `|U|` (or its
/// smallest positive draw, if the median is 0) to the `1 - 10/reps` quantile.
pub fn default_grid(summary: &SampleSummary) -> Result<Vec<f64>, McError> {
    let top = summary.quantile(1.0 - 10.0 / summary.reps as f64);
    let median = summary.quantile(0.5);
    let bottom = if median > 0.0 {
        median
    } else {
        let sorted = summary.abs_sorted();
        match sorted.iter().find(|&&v| v > 0.0) {
            Some(&v) => v,
            None => return Err(McError::EmptyGrid),
        }
    };
    if !(top > bottom) {
        return Ok(vec![bottom]);
    }
    let (lo, hi) = (bottom.ln(), top.ln());
    let k = DEFAULT_GRID_POINTS - 1;
    Ok((0..=k).map(|i| (lo + (hi - lo) * i as f64 / k as f64).exp()).collect())
}

/// Empirical `P(|U| >= x)` with Wilson score intervals, before any bound is attached.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailCurve {
    pub x: Vec<f64>,
    pub counts: Vec<u64>,
    pub reps: u64,
    pub confidence: f64,
    pub tail: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub bound: Option<Vec<f64>>,
    pub regime: Option<Vec<Option<Regime>>>,
}

/// Two-sided Wilson score interval for `count` successes in `n` trials.
pub fn wilson_interval(count: u64, n: u64, z: f64) -> (f64, f64) {
    let n = n as f64;
    let p = count as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((center - half).max(0.0), (center + half).min(1.0))
}

pub fn empirical_tail(summary: &SampleSummary, grid: &[f64], confidence: f64) -> Result<TailCurve, McError> {
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(McError::Confidence(confidence));
    }
    if grid.is_empty() {
        return Err(McError::EmptyGrid);
    }
    if grid.iter().any(|&x| !(x > 0.0 && x.is_finite())) || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(McError::BadGrid);
    }
    let z = Normal::standard().inverse_cdf(1.0 - (1.0 - confidence) / 2.0);
    let counts: Vec<u64> = grid.iter().map(|&x| summary.count_ge(x)).collect();
    let (lower, upper) = counts.iter().map(|&c| wilson_interval(c, summary.reps, z)).unzip();
    Ok(TailCurve {
        x: grid.to_vec(),
        tail: counts.iter().map(|&c| c as f64 / summary.reps as f64).collect(),
        counts,
        reps: summary.reps,
        confidence,
        lower,
        upper,
        bound: None,
        regime: None,
    })
}

/// A tail curve with a bound attached.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundComparison {
    pub curve: TailCurve,
    pub form: ExpForm,
    pub params: BoundParams,
    pub constant: f64,
    /// True when the constant was fitted rather than supplied.
    pub fitted: bool,
    /// The bound is at least the upper confidence limit at every grid point.
    pub majorizes: bool,
}

/// Attaches `form` with `params` to `curve`. Without a constant, fits the
/// smallest one whose bound majorizes the upper confidence limit at every
/// grid point; the fit is the largest per-point minimum, so adding grid
/// points never lowers it.
pub fn tail_vs_bound(curve: &TailCurve, params: &BoundParams, form: ExpForm, constant: Option<f64>) -> Result<BoundComparison, McError> {
    if curve.x.is_empty() {
        return Err(McError::EmptyGrid);
    }
    let eval = |k: f64, x: f64| exp_bound_eval(form, params, k, x).unwrap_or(f64::NAN);
    let (constant, fitted) = match constant {
        Some(c) => (c, false),
        None => {
            let c = curve
                .x
                .iter()
                .zip(&curve.upper)
                .map(|(&x, &up)| monotone_root(up, &|k| eval(k, x)))
                .fold(0.0, f64::max);
            (c, true)
        }
    };
    let at = if constant.is_finite() && constant > 0.0 { constant } else { 1.0 };
    let bound: Vec<f64> = curve.x.iter().map(|&x| eval(at, x)).collect();
    let majorizes = constant.is_finite() && bound.iter().zip(&curve.upper).all(|(b, u)| b >= u);
    let regime = curve.x.iter().map(|&x| active_regime(form, params, at, x)).collect();
    let mut curve = curve.clone();
    curve.bound = Some(bound);
    curve.regime = Some(regime);
    Ok(BoundComparison {
        curve,
        form,
        params: *params,
        constant,
        fitted,
        majorizes,
    })
}

/// Least-squares slope of `log P(|U| >= x)` against `x^{1/2} log x` over grid
/// points with `x > 1` and a positive count. Report-only.
pub fn log_tail_slope(curve: &TailCurve) -> Option<f64> {
    let pts: Vec<(f64, f64)> = curve
        .x
        .iter()
        .zip(&curve.tail)
        .filter(|(&x, &t)| x > 1.0 && t > 0.0)
        .map(|(&x, &t)| (x.sqrt() * x.ln(), t.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Serialized simulation output: everything needed to re-derive the
/// comparison without resampling.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationReport {
    pub sample: SampleSummary,
    pub curve: TailCurve,
    pub form: Option<ExpForm>,
    pub params: Option<BoundParams>,
    pub constant: Option<f64>,
    pub fitted: Option<bool>,
    pub majorizes: Option<bool>,
    pub log_tail_slope: Option<f64>,
}

impl SimulationReport {
    pub fn new(sample: SampleSummary, curve: TailCurve, comparison: Option<BoundComparison>) -> Self {
        let slope = log_tail_slope(&curve);
        match comparison {
            Some(c) => Self {
                sample,
                log_tail_slope: slope,
                curve: c.curve,
                form: Some(c.form),
                params: Some(c.params),
                constant: Some(c.constant),
                fitted: Some(c.fitted),
                majorizes: Some(c.majorizes),
            },
            None => Self {
                sample,
                curve,
                form: None,
                params: None,
                constant: None,
                fitted: None,
                majorizes: None,
                log_tail_slope: slope,
            },
        }
    }
}

#[cfg(test)]
mod tests;
