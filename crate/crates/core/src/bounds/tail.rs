//! Closed-form tail levels and thresholds.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use super::{BoundParams, BoundsError};

/// Paley–Zygmund lower bound for `P(A > lambda ||A||_r)` in the form
/// `[(1 - lambda^r) ||A||_r / ||A||_p]^{p/(p-r)}`.
///
/// This form drops the exponent `r` on the norm ratio. It is implied by the
/// standard bound when `r <= 1` but can fail for `r > 1`; see
/// [`paley_zygmund_standard`].
pub fn paley_zygmund_bound(lambda: f64, r: f64, p: f64, norm_r: f64, norm_p: f64) -> Result<f64, BoundsError> {
    check_pz(lambda, r, p, norm_r, norm_p)?;
    Ok(((1.0 - lambda.powf(r)) * norm_r / norm_p).powf(p / (p - r)))
}

/// `[(1 - lambda^r) (||A||_r / ||A||_p)^r]^{p/(p-r)}`, the bound that follows
/// from Hölder's inequality for every `0 < r < p`.
pub fn paley_zygmund_standard(lambda: f64, r: f64, p: f64, norm_r: f64, norm_p: f64) -> Result<f64, BoundsError> {
    check_pz(lambda, r, p, norm_r, norm_p)?;
    Ok(((1.0 - lambda.powf(r)) * (norm_r / norm_p).powf(r)).powf(p / (p - r)))
}

fn check_pz(lambda: f64, r: f64, p: f64, norm_r: f64, norm_p: f64) -> Result<(), BoundsError> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(BoundsError::Domain(format!("lambda must lie in (0, 1), got {lambda}")));
    }
    if !(r > 0.0 && r < p) {
        return Err(BoundsError::Domain(format!("need 0 < r < p, got r = {r}, p = {p}")));
    }
    if !(norm_r > 0.0 && norm_p > 0.0) {
        return Err(BoundsError::Domain("norms must be positive".into()));
    }
    if norm_r > norm_p * (1.0 + 1e-12) {
        return Err(BoundsError::Domain(format!(
            "norm of order r exceeds norm of order p ({norm_r} > {norm_p})"
        )));
    }
    Ok(())
}

/// `2 E|S| + sigma sqrt(8x) + 34.5 a x`.
pub fn talagrand_threshold(mean_abs_s: f64, sigma: f64, a: f64, x: f64) -> f64 {
    2.0 * mean_abs_s + sigma * (8.0 * x).sqrt() + 34.5 * a * x
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExpForm {
    /// `e^2 exp(-min(x/(K e A), (x/(K e C))^2))` for sums of bounded centered variables.
    Bernstein,
    /// `K exp(-min(x/C, (x/B)^{2/3}, (x/A)^{1/2}) / K)`.
    ThreeRegime,
    /// `L exp(-min(x^2/C^2, x/D, x^{2/3}/B^{2/3}, x^{1/2}/A^{1/2}) / L)`.
    FourRegime,
    /// Four-regime form evaluated with the identically distributed parameters.
    Iid,
}

impl ExpForm {
    pub const ALL: [ExpForm; 4] = [ExpForm::Bernstein, ExpForm::ThreeRegime, ExpForm::FourRegime, ExpForm::Iid];

    pub fn name(self) -> &'static str {
        match self {
            ExpForm::Bernstein => "bernstein",
            ExpForm::ThreeRegime => "three-regime",
            ExpForm::FourRegime => "four-regime",
            ExpForm::Iid => "iid",
        }
    }
}

impl fmt::Display for ExpForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExpForm {
    type Err = BoundsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ExpForm::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| BoundsError::UnknownForm(s.to_string()))
    }
}

/// Which power of `x` a regime term carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Regime {
    /// `x^2`
    Quadratic,
    /// `x`
    Linear,
    /// `x^{2/3}`
    TwoThirds,
    /// `x^{1/2}`
    Half,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::Quadratic => "x^2",
            Regime::Linear => "x",
            Regime::TwoThirds => "x^(2/3)",
            Regime::Half => "x^(1/2)",
        })
    }
}

/// Regime terms of the exponent with a positive parameter; zero parameters
/// make their term infinite, so they are left out.
pub fn regime_terms(form: ExpForm, params: &BoundParams, constant: f64, x: f64) -> Vec<(Regime, f64)> {
    let mut out = Vec::with_capacity(4);
    let mut push = |regime, param: f64, value: f64| {
        if param > 0.0 {
            out.push((regime, value));
        }
    };
    let BoundParams { a, b, c, d } = *params;
    match form {
        ExpForm::Bernstein => {
            let e = std::f64::consts::E;
            push(Regime::Linear, a, x / (constant * e * a));
            push(Regime::Quadratic, c, (x / (constant * e * c)).powi(2));
        }
        ExpForm::ThreeRegime => {
            // The x/C term is linear in x; B and A terms carry 2/3 and 1/2.
            push(Regime::Linear, c, x / c);
            push(Regime::TwoThirds, b, (x / b).powf(2.0 / 3.0));
            push(Regime::Half, a, (x / a).sqrt());
        }
        ExpForm::FourRegime | ExpForm::Iid => {
            push(Regime::Quadratic, c, (x / c).powi(2));
            push(Regime::Linear, d, x / d);
            push(Regime::TwoThirds, b, (x / b).powf(2.0 / 3.0));
            push(Regime::Half, a, (x / a).sqrt());
        }
    }
    out
}

/// The regime attaining the minimum in the exponent, if any term is present.
pub fn active_regime(form: ExpForm, params: &BoundParams, constant: f64, x: f64) -> Option<Regime> {
    regime_terms(form, params, constant, x)
        .into_iter()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(r, _)| r)
}

/// Evaluates an exponential tail bound at `x > 0` with the given constant
/// (`K` or `L`; for the Bernstein form the `K` inside the exponent).
///
/// With every parameter zero the statistic vanishes and the bound is 0.
pub fn exp_bound_eval(form: ExpForm, params: &BoundParams, constant: f64, x: f64) -> Result<f64, BoundsError> {
    if !(x > 0.0) {
        return Err(BoundsError::Domain(format!("x must be positive, got {x}")));
    }
    if !(constant > 0.0) {
        return Err(BoundsError::Domain(format!("constant must be positive, got {constant}")));
    }
    let terms = regime_terms(form, params, constant, x);
    let Some(exponent) = terms.iter().map(|t| t.1).reduce(f64::min) else {
        return Ok(0.0);
    };
    Ok(match form {
        ExpForm::Bernstein => std::f64::consts::E.powi(2) * (-exponent).exp(),
        _ => constant * (-exponent / constant).exp(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn talagrand_examples() {
        assert!((talagrand_threshold(1.0, 2.0, 0.5, 1.0) - 24.906_854_249_492_38).abs() < 1e-12);
        assert_eq!(talagrand_threshold(0.0, 0.0, 0.0, 3.0), 0.0);
        assert_eq!(talagrand_threshold(1.0, 0.0, 0.0, 4.0), 2.0);
    }

    #[test]
    fn paley_zygmund_examples() {
        assert!((paley_zygmund_bound(0.5, 1.0, 2.0, 1.0, 1.0).unwrap() - 0.25).abs() < 1e-15);
        assert!((paley_zygmund_bound(0.5, 2.0, 4.0, 1.0, 2.0).unwrap() - 9.0 / 64.0).abs() < 1e-15);
        assert!(paley_zygmund_bound(1.0 - 1e-12, 1.0, 2.0, 1.0, 1.0).unwrap() < 1e-10);
        assert!(paley_zygmund_bound(0.5, 2.0, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn four_regime_examples() {
        let ones = BoundParams { a: 1.0, b: 1.0, c: 1.0, d: 1.0 };
        let v = exp_bound_eval(ExpForm::FourRegime, &ones, 1.0, 1.0).unwrap();
        assert!((v - (-1.0f64).exp()).abs() < 1e-15);
        let cd = BoundParams { a: 0.0, b: 0.0, c: 1.0, d: 1.0 };
        let v = exp_bound_eval(ExpForm::FourRegime, &cd, 1.0, 2.0).unwrap();
        assert!((v - (-2.0f64).exp()).abs() < 1e-15);
        assert_eq!(active_regime(ExpForm::FourRegime, &cd, 1.0, 2.0), Some(Regime::Linear));
        let zero = BoundParams::default();
        assert_eq!(exp_bound_eval(ExpForm::FourRegime, &zero, 1.0, 2.0).unwrap(), 0.0);
    }

    #[test]
    fn leading_constants_near_zero() {
        let p = BoundParams { a: 1.0, b: 2.0, c: 3.0, d: 1.5 };
        let tiny = 1e-14;
        let e2 = std::f64::consts::E.powi(2);
        assert!((exp_bound_eval(ExpForm::Bernstein, &p, 2.0, tiny).unwrap() - e2).abs() < 1e-9);
        assert!((exp_bound_eval(ExpForm::ThreeRegime, &p, 3.0, tiny).unwrap() - 3.0).abs() < 1e-5);
        assert!((exp_bound_eval(ExpForm::FourRegime, &p, 4.0, tiny).unwrap() - 4.0).abs() < 1e-5);
    }
}
