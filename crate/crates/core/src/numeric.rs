//! Small numeric helpers shared by the engines.

/// Compensated (Neumaier) accumulator.
///
/// Every reduction in the crate feeds values in a fixed order, so results are
/// reproducible bit-for-bit regardless of how work was scheduled.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    sum: f64,
    compensation: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn merge(&mut self, other: &NeumaierSum) {
        self.add(other.sum);
        self.add(other.compensation);
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

/// Compensated sum of an iterator.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut acc = NeumaierSum::new();
    for v in values {
        acc.add(v);
    }
    acc.value()
}

/// Absolute tolerance under which two real values are treated as the same
/// support point.
pub const VALUE_TOL: f64 = 1e-12;

/// Slack used when comparing a value against a threshold that may itself be
/// a rounded support point.
#[inline]
pub(crate) fn threshold_slack(x: f64) -> f64 {
    VALUE_TOL * x.abs().max(1.0)
}

/// `|x|^p` with the convention `0^p = 0` for `p > 0`.
#[inline]
pub fn abs_pow(x: f64, p: f64) -> f64 {
    let a = x.abs();
    if a == 0.0 {
        0.0
    } else if p == 1.0 {
        a
    } else if p == 2.0 {
        a * a
    } else {
        a.powf(p)
    }
}

/// True when `p` is a positive integer (within 1e-12).
pub fn is_positive_integer(p: f64) -> bool {
    p > 0.0 && (p - p.round()).abs() < 1e-12
}

/// Pow with the semantics used by the moment engines: absolute values when
/// `absolute` is set, signed integer powers otherwise. Returns `None` for a
/// negative base with a non-integer exponent in signed mode.
#[inline]
pub(crate) fn moment_pow(x: f64, p: f64, absolute: bool) -> Option<f64> {
    if absolute || x >= 0.0 {
        Some(abs_pow(x, p))
    } else if is_positive_integer(p) {
        Some(x.powi(p.round() as i32))
    } else {
        None
    }
}

/// Smallest `c` with `f(c) >= target` for nondecreasing `f`, by doubling and
/// bisection to a relative width of `1e-13`.
pub fn monotone_root(target: f64, f: &dyn Fn(f64) -> f64) -> f64 {
    if target <= 0.0 {
        return 0.0;
    }
    let mut lo = 0.0;
    let mut hi = 1.0;
    let mut steps = 0;
    while f(hi) < target {
        lo = hi;
        hi *= 2.0;
        steps += 1;
        if steps > 1100 || !hi.is_finite() {
            return f64::INFINITY;
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) >= target {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 1e-13 * hi {
            break;
        }
    }
    hi
}
