//! The registered inequalities.

use std::f64::consts::E;
use std::sync::{Arc, OnceLock};

use super::context::max_law;
use super::{
    AuxParam, CaseMode, CheckArgs, Context, Evaluation, InequalityCase, Level, Shape, Side, SuiteError, Term,
    Traits,
};
use crate::bounds::{
    abcd_params, delta0, exp_bound_eval, iid_params, paley_zygmund_bound, paley_zygmund_standard,
    sum_params, talagrand_threshold, v0, BoundParams, ExpForm, TailTable,
};
use crate::exact::{empirical_sup_moment, moment, FiniteDistribution, IndexSubset, MixedMomentQuery, MomentKind};
use crate::model::{decouple, UStatInstance};
use crate::numeric::{abs_pow, compensated_sum};

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum SubjectNeed {
    /// A decoupled U-statistic instance.
    Decoupled,
    /// An undecoupled (single-sample) instance.
    Undecoupled,
    /// A class of centered functions.
    Class,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum KernelNeed {
    Any,
    Nonnegative,
    Canonical,
    SeparatelySymmetric,
    /// Canonical, one kernel table for every index pair and one law throughout.
    CanonicalIid,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum PNeed {
    /// The case has no moment order.
    Unused,
    Positive,
    AtLeast(f64),
    Above(f64),
    /// `0 < p <= 1`.
    AtMostOne,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum RNeed {
    Unused,
    /// `0 < r < p`.
    Below,
    /// `0 < r < p` and `r <= 1`.
    BelowAndAtMostOne,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Need {
    pub subject: SubjectNeed,
    pub order: Option<usize>,
    pub kernel: KernelNeed,
    pub p: PNeed,
    pub r: RNeed,
}

impl Need {
    pub(crate) fn uses_p(&self) -> bool {
        self.p != PNeed::Unused
    }

    pub(crate) fn check(&self, case: &InequalityCase, t: &Traits, args: &CheckArgs) -> Result<(), String> {
        let id = case.id;
        match self.subject {
            SubjectNeed::Class if !t.is_class => return Err(format!("{id} needs a function class")),
            SubjectNeed::Decoupled if t.is_class || !t.decoupled => {
                return Err(format!("{id} needs a decoupled instance"))
            }
            SubjectNeed::Undecoupled if t.is_class || t.decoupled => {
                return Err(format!("{id} needs an undecoupled instance"))
            }
            _ => {}
        }
        if let Some(m) = self.order {
            if t.m != m {
                return Err(format!("{id} needs order {m}, got order {}", t.m));
            }
        }
        let kernel_ok = match self.kernel {
            KernelNeed::Any => true,
            KernelNeed::Nonnegative => t.nonnegative,
            KernelNeed::Canonical => t.canonical,
            KernelNeed::SeparatelySymmetric => t.separately_symmetric,
            KernelNeed::CanonicalIid => t.canonical && t.iid,
        };
        if !kernel_ok {
            let what = match self.kernel {
                KernelNeed::Nonnegative => "a nonnegative kernel",
                KernelNeed::Canonical => "a canonical kernel",
                KernelNeed::SeparatelySymmetric => "a separately symmetric kernel",
                _ => "a canonical kernel shared by all index pairs with one common law",
            };
            return Err(format!("{id} needs {what}"));
        }
        let p = args.p;
        match (self.p, p) {
            (PNeed::Unused, _) => {}
            (_, None) => return Err(format!("{id} needs a moment order p")),
            (need, Some(p)) => {
                let ok = p.is_finite()
                    && match need {
                        PNeed::Positive => p > 0.0,
                        PNeed::AtLeast(a) => p >= a,
                        PNeed::Above(a) => p > a,
                        PNeed::AtMostOne => p > 0.0 && p <= 1.0,
                        PNeed::Unused => true,
                    };
                if !ok {
                    let range = match need {
                        PNeed::Positive => "p > 0".to_string(),
                        PNeed::AtLeast(a) => format!("p >= {a}"),
                        PNeed::Above(a) => format!("p > {a}"),
                        _ => "0 < p <= 1".to_string(),
                    };
                    return Err(format!("{id} needs {range}, got p = {p}"));
                }
            }
        }
        match (self.r, args.r) {
            (RNeed::Unused, _) => {}
            (_, None) => return Err(format!("{id} needs an exponent r")),
            (need, Some(r)) => {
                let p = p.unwrap_or(f64::INFINITY);
                if !(r > 0.0 && r < p) {
                    return Err(format!("{id} needs 0 < r < p, got r = {r}"));
                }
                if need == RNeed::BelowAndAtMostOne && r > 1.0 {
                    return Err(format!("{id} needs r <= 1, got r = {r}"));
                }
            }
        }
        match (case.aux, args.aux) {
            (None, _) => {}
            (Some(a), None) => return Err(format!("{id} needs the parameter {a}")),
            (Some(AuxParam::X), Some(x)) if !(x > 0.0 && x.is_finite()) => {
                return Err(format!("{id} needs x > 0, got {x}"))
            }
            (Some(AuxParam::Alpha), Some(a)) if !(a >= 0.0 && a.is_finite()) => {
                return Err(format!("{id} needs alpha >= 0, got {a}"))
            }
            (Some(AuxParam::Lambda), Some(l)) if !(l > 0.0 && l < 1.0) => {
                return Err(format!("{id} needs 0 < lambda < 1, got {l}"))
            }
            _ => {}
        }
        Ok(())
    }
}

const fn need(subject: SubjectNeed, order: Option<usize>, kernel: KernelNeed, p: PNeed, r: RNeed) -> Need {
    Need {
        subject,
        order,
        kernel,
        p,
        r,
    }
}

use KernelNeed as K;
use PNeed as P;
use RNeed as R;
use SubjectNeed as S;

const ONE_NONNEG: fn(PNeed) -> Need = |p| need(S::Decoupled, Some(1), K::Nonnegative, p, R::Unused);

fn p_of(args: &CheckArgs) -> f64 {
    args.p.expect("applicability guarantees p")
}

fn r_of(args: &CheckArgs) -> f64 {
    args.r.expect("applicability guarantees r")
}

fn aux_of(args: &CheckArgs) -> f64 {
    args.aux.expect("applicability guarantees the extra parameter")
}

/// `K` used where a shape without a free constant depends on one.
fn configured(args: &CheckArgs) -> f64 {
    args.constant.unwrap_or(1.0)
}

/// `t0` at level `q`, zero once the level reaches 1.
fn t0_at(tails: &TailTable, q: f64) -> Result<f64, SuiteError> {
    if q >= 1.0 {
        Ok(0.0)
    } else {
        Ok(tails.t0(q)?)
    }
}

fn sum_moments(laws: &[FiniteDistribution], p: f64) -> f64 {
    compensated_sum(laws.iter().map(|l| l.expect(|x| abs_pow(x, p))))
}

/// `E max_i |xi_i|^p`.
fn max_moment(laws: &[FiniteDistribution], p: f64) -> f64 {
    let abs: Vec<FiniteDistribution> = laws.iter().map(FiniteDistribution::abs).collect();
    max_law(&abs).expect(|x| abs_pow(x, p))
}

fn subset_label(s: IndexSubset) -> String {
    format!("J={s}")
}

fn hoffmann_constant(p: f64) -> f64 {
    2f64.powf(p - 2.0) * 2f64.powf((p - 1.0).max(0.0)) * (p + 1.0).powf(p + 1.0)
}

// ---- order one, nonnegative ----

fn rosenthal_explicit(ctx: &Context, args: &CheckArgs) -> Result<Evaluation, SuiteError> {
    let p = p_of(args);
    let laws = ctx.summand_laws()?;
    let lhs = ctx.moment(p)?;
    let sum_p = sum_moments(&laws, p);
    let sum_1 = sum_moments(&laws, 1.0);
    let moment_term = E / p * p.powf(p) * sum_p;
    let mean_term = E.powf(p) * sum_1.powf(p);
    Ok(Evaluation::new(Shape::Upper {
        lhs,
        structure: moment_term.max(mean_term),
        power: 1.0,
    })
    .constant((2.0 * E).powf(p))
    .terms(vec![Term::new("moments", moment_term), Term::new("mean", mean_term)]))
}

fn rosenthal_log(ctx: &Context, args: &CheckArgs) -> Result<Evaluation, SuiteError> {
    let p = p_of(args);
    let laws = ctx.summand_laws()?;
    let sum_p = sum_moments(&laws, p);
    let mean_p = sum_moments(&laws, 1.0).powf(p);
    Ok(Evaluation::new(Shape::Upper {
        lhs: ctx.moment(p)?,
        structure: (p / p.ln()).powf(p) * sum_p.max(mean_p),
        power: p,
    })
    .terms(vec![Term::new("moments", sum_p), Term::new("mean", mean_p)]))
}

fn hoffmann_quantile(ctx: &Context, args: &CheckArgs) -> Result<Evaluation, SuiteError> {
    let p = p_of(args);
    let laws = ctx.summand_laws()?;
    let t0 = t0_at(&*ctx.tails()?, 0.5)?;
    let emax = max_moment(&laws, p);
    Ok(Evaluation::new(Shape::Upper {
        lhs: ctx.moment(p)?,
        structure: t0.powf(p) + emax,
        power: 1.0,
    })
    .constant(hoffmann_constant(p))
    .level(Level::Fixed(0.5))
    .terms(vec![Term::new("t0^p", t0.powf(p)), Term::new("max", emax)]))
}

fn hoffmann_lr(ctx: &Context, args: &CheckArgs) -> Result<Evaluation, SuiteError> {
    let (p, r) = (p_of(args), r_of(args));
    let laws = ctx.summand_laws()?;
    let low = 2f64.powf(p / r) * ctx.moment(r)?.powf(p / r);
    let emax = max_moment(&laws, p);
    Ok(Evaluation::new(Shape::Upper {
        lhs: ctx.moment(p)?,
        structure: low + emax,
        power: 1.0,
    })
    .constant(hoffmann_constant(p))
    .terms(vec![Term::new("low moment", low), Term::new("max", emax)]))
}

/// `(delta0^p, sum_i E xi_i^p 1{xi_i > delta0}, E max xi_i^p)`.
fn maxima_parts(ctx: &Context, p: f64) -> Result<(f64, f64, f64), SuiteError> {
    let laws = ctx.summand_laws()?;
    let d0 = delta0(&laws)?;
    let slack = crate::numeric::VALUE_TOL * d0.abs().max(1.0);
    let excess = compensated_sum(laws.iter().map(|l| l.expect(|x| if x > d0 + slack { abs_pow(x, p) } else { 0.0 })));
    Ok((d0.powf(p), excess, max_moment(&laws, p)))
}

fn maxima_lower(ctx: &Context, args: &CheckArgs) -> Result<Evaluation, SuiteError> {
    let (d, excess, emax) = maxima_parts(ctx, p_of(args))?;
    Ok(Evaluation::new(Shape::Lower {
        structure: d.max(excess),
        rhs: emax,
        power: 1.0,
    })
    .constant(2.0)
    .terms(vec![Term::new("delta0^p", d), Term::new("excess", excess)]))
}

fn maxima_upper(ctx: &Context, args: &CheckArgs) -> Result<Evaluation, SuiteError> {
    let (d, excess, emax) = maxima_parts(ctx, p_of(args))?;
    Ok(Evaluation::new(Shape::Upper {
        lhs: emax,
        structure: d + excess,
        power: 1.0,
    })
    .constant(1.0)
    .terms(vec![Term::new("delta0^p", d), Term::new("excess", excess)]))
}

fn sum_to_max(ctx: &Context, args: &CheckArgs) -> Result<Evaluation, SuiteError> {
    let (p, r) = (p_of(args), r_of(args));
    let laws = ctx.summand_laws()?;
    let emax = max_moment(&laws, p);
    let sum_r = sum_moments(&laws, r);
    let cross = sum_r * emax.powf((p - r) / p);
    Ok(Evaluation::new(Shape::Upper {
        lhs: sum_moments(&laws, p),
        structure: emax + cross,
        power: 1.0,
    })
    .constant(2.0)
    .terms(vec![Term::new("max", emax), Term::new("cross", cross)]))
}

fn sum_to_max_power(ctx: &Context, args: &CheckArgs) -> Result<Evaluation, SuiteError> {
    let (p, alpha) = (p_of(args), aux_of(args));
    let laws = ctx.summand_laws()?;
    let scale = p.powf(alpha * p);
    let max_term = scale * max_moment(&laws, p);
    let mean_term = sum_moments(&laws, 1.0).powf(p);
    Ok(Evaluation::new(Shape::Upper {
        lhs: scale * sum_moments(&laws, p),
        structure: (1.0 + p.powf(alpha)) * max_term.max(mean_term),
        power: 1.0,
    })
    .constant(2.0)
    .terms(vec![Term::new("max", max_term), Term::new("mean", mean_term)]))
}

fn paley_zygmund_with(
    ctx: &Context,
    args: &CheckArgs,
    bound: fn(f64, f64, f64, f64, f64) -> Result<f64, crate::bounds::BoundsError>,
) -> Result<Evaluation, SuiteError> {
    let (p, r, lambda) = (p_of(args), r_of(args), aux_of(args));
    let dist = ctx.dist()?;
    let norm_r = moment(dist, r, MomentKind::Absolute)?.powf(1.0 / r);
    let norm_p = moment(dist, p, MomentKind::Absolute)?.powf(1.0 / p);
    if norm_r <= 0.0 {
        return Ok(Evaluation::new(Shape::Fixed { lhs: 0.0, rhs: 0.0 }).note("statistic vanishes"));
    }
    // norm_r <= norm_p holds mathematically; clamp rounding noise.
    let norm_r = norm_r.min(norm_p);
    let lhs = bound(lambda, r, p, norm_r, norm_p)?;
    let rhs = dist.tail_gt(lambda * norm_r);
    Ok(Evaluation::new(Shape::Fixed { lhs, rhs }).terms(vec![
        Term::new("norm_r", norm_r),
        Term::new("norm_p", norm_p),
    ]))
}

fn paley_zygmund(ctx: &Context, args: &CheckArgs) -> Result<Evaluation, SuiteError> {
    paley_zygmund_with(ctx, args, paley_zygmund_bound)
}

fn paley_zygmund_std(ctx: &Context, args: &CheckArgs) -> Result<Evaluation, SuiteError> {
    paley_zygmund_with(ctx, args, paley_zygmund_standard)
}

/// `(E(sum xi)^p, E max xi^p, v^p)` with `v` the fixed point, optionally for
/// the summands truncated at the median-type quantile of the sum.
fn klass_nowicki_parts(ctx: &Context, p: f64, truncated: bool) -> Result<(f64, f64, f64, Option<f64>), SuiteError> {
    let laws = ctx.summand_laws()?;
    let t0 = if truncated { Some(t0_at(&*ctx.tails()?, 0.5)?) } else { None };
    let v = v0(&laws, t0)?;
    Ok((ctx.moment(p)?, max_moment(&laws, p), v.powf(p), t0))
}

fn klass_nowicki(ctx: &Context, args: &CheckArgs, truncated: bool, upper: bool) -> Result<Evaluation, SuiteError> {
    let (sum, emax, vp, t0) = klass_nowicki_parts(ctx, p_of(args), truncated)?;
    let shape = if upper {
        Shape::Upper {
            lhs: sum,
            structure: emax + vp,
            power: 1.0,
        }
    } else {
        Shape::Upper {
            lhs: emax + vp,
            structure: sum,
            power: 1.0,
        }
    };
    let mut ev = Evaluation::new(shape).terms(vec![Term::new("max", emax), Term::new("v0^p", vp)]);
    if let Some(t) = t0 {
        ev = ev.level(Level::Fixed(0.5)).note(format!("truncation level t0 = {t}"));
    }
    Ok(ev)
}

fn kn_upper(ctx: &Context, args: &CheckArgs) -> Result<Evaluation, SuiteError> {
    klass_nowicki(ctx, args, false, true)
}

fn kn_lower(ctx: &Context, args: &CheckArgs) -> Result<Evaluation, SuiteError> {
    klass_nowicki(ctx, args, false, false)
}

fn kn_truncated_upper(ctx: &Context, args: &CheckArgs) -> Result<Evaluation, SuiteError> {
    klass_nowicki(ctx, args, true, true)
}

fn kn_truncated_lower(ctx: &Context, args: &CheckArgs) -> Result<Evaluation, SuiteError> {
    klass_nowicki(ctx, args, true, false)
}

// ---- order one, centered ----

fn pinelis(ctx: &Context, args: &CheckArgs) -> Result<Evaluation, SuiteError> {
    let p = p_of(args);
    let laws = ctx.summand_laws()?;
    let max_term = p.powf(p) * max_moment(&laws, p);
    let var_term = p.powf(p / 2.0) * sum_moments(&laws, 2.0).powf(p / 2.0);
    Ok(Evaluation::new(Shape::Upper {
        lhs: ctx.moment(p)?,
        structure: max_term.max(var_term),
        power: p,
    })
    .terms(vec![Term::new("max", max_term), Term::new("variance", var_term)]))
}

fn exp_tail(lhs: f64, form: ExpForm, params: BoundParams, x: f64) -> Result<Evaluation, SuiteError> {
    exp_bound_eval(form, &params, 1.0, x)?;
    let f = Arc::new(move |k: f64| {
        if k <= 0.0 {
            0.0
        } else {
            exp_bound_eval(form, &params, k, x).unwrap_or(f64::NAN)
        }
    });
    Ok(Evaluation::new(Shape::Monotone { lhs, f }).terms(vec![
        Term::new("A", params.a),
        Term::new("B", params.b),
        Term::new("C", params.c),
        Term::new("D", params.d),
    ]))
}

fn bernstein_tail(ctx: &Context, args: &CheckArgs) -> Result<Evaluation, SuiteError> {
    let x = aux_of(args);
    let lhs = ctx.dist()?.abs().tail_gt(x);
    exp_tail(lhs, ExpForm::Bernstein, sum_params(ctx.inst()?)?, x)
}

// ---- nonnegative kernels of any order ----

fn sum_terms(ctx: &Context, p: f64) -> Result<Vec<(IndexSubset, f64)>, SuiteError> {
    ctx.mixed_all(false, |s| MixedMomentQuery::sum(s, p))
}

fn max_terms(ctx: &Context, p: f64) -> Result<Vec<(IndexSubset, f64)>, SuiteError> {
    ctx.mixed_all(false, |s| MixedMomentQuery::max(s, p))
}

fn square_terms(ctx: &Context, p: f64) -> Result<Vec<(IndexSubset, f64)>, SuiteError> {
    ctx.mixed_all(true, |s| MixedMomentQuery::max(s, p / 2.0))
}

fn lr_terms(ctx: &Context, p: f64, r: f64) -> Result<Vec<(IndexSubset, f64)>, SuiteError> {
    ctx.mixed_all(false, |s| MixedMomentQuery::lr_max(s, p, r))
}

fn labelled(terms: &[(IndexSubset, f64)]) -> Vec<Term> {
    terms.iter().map(|(s, v)| Term::new(subset_label(*s), *v)).collect()
}

fn largest(terms: &[(IndexSubset, f64)], skip_empty: bool) -> f64 {
    terms
        .iter()
        .filter(|(s, _)| !(skip_empty && s.is_empty()))
        .map(|t| t.1)
        .fold(0.0, f64::max)
}

fn weighted_sum(terms: &[(IndexSubset, f64)], skip_empty: bool, weight: impl Fn(IndexSubset) -> f64) -> f64 {
    compensated_sum(
        terms
            .iter()
            .filter(|(s, _)| !(skip_empty && s.is_empty()))
            .map(|(s, v)| weight(*s) * v),
    )
}

fn mixed_sum_lower(ctx: &Context, args: &CheckArgs) -> Result<Evaluation, SuiteError> {
    let p = p_of(args);
    let terms = sum_terms(ctx, p)?;
    Ok(Evaluation::new(Shape::Lower {
        structure: largest(&terms, false),
        rhs: ctx.moment(p)?,
        power: 1.0,
    })
    .constant(1.0)
    .terms(labelled(&terms)))
}

fn mixed_sum_upper(ctx: &Context, args: &CheckArgs) -> Result<Evaluation, SuiteError> {
    let p = p_of(args);
    let m = ctx.inst()?.m() as f64;
    let terms = sum_terms(ctx, p)?;
    Ok(Evaluation::new(Shape::Upper {
        lhs: ctx.moment(p)?,
        structure: weighted_sum(&terms, false, |s| p.powf(s.len() as f64 * p)),
        power: 1.0,
    })
    .constant((2.0 * E * E).powf(m * p))
    .terms(labelled(&terms)))
}

fn mixed_sum_log(ctx: &Context, args: &CheckArgs) -> Result<Evaluation, SuiteError> {
    let p = p_of(args);
    let m = ctx.inst()?.m() as f64;
    let terms = sum_terms(ctx, p)?;
    Ok(Evaluation::new(Shape::Upper {
        lhs: ctx.moment(p)?,
        structure: (p / p.ln()).powf(m * p) * largest(&terms, false),
        power: m * p,
    })
    .terms(labelled(&terms)))
}

/// The four order-2 sum-form terms computed directly from the tables:
/// `(sum E h)^p`, `sum_i E_1 (sum_j E_2 h)^p`, `sum_j E_2 (sum_i E_1 h)^p`, `sum E h^p`.
pub(crate) fn order2_sum_terms(inst: &UStatInstance, p: f64) -> [f64; 4] {
    let n = inst.n();
    let mut total = Vec::with_capacity(n * n);
    let mut full = Vec::with_capacity(n * n);
    let mut rows = Vec::with_capacity(n);
    let mut cols = vec![vec![0.0; 0]; n];
    for (j, col) in cols.iter_mut().enumerate() {
        *col = vec![0.0; inst.law(1, j).len()];
    }
    for i in 0..n {
        let pi = inst.law(0, i).probs();
        let mut row = vec![0.0; pi.len()];
        for (j, col) in cols.iter_mut().enumerate() {
            let qj = inst.law(1, j).probs();
            let t = inst.kernel().table(&[i, j]);
            for (a, &pa) in pi.iter().enumerate() {
                for (b, &qb) in qj.iter().enumerate() {
                    let v = t.get(&[a, b]);
                    total.push(pa * qb * v);
                    full.push(pa * qb * v.powf(p));
                    row[a] += qb * v;
                    col[b] += pa * v;
                }
            }
        }
        rows.push(compensated_sum(row.iter().zip(pi).map(|(g, pa)| pa * g.powf(p))));
    }
    let col_terms = compensated_sum(
        cols.iter()
            .enumerate()
            .map(|(j, col)| compensated_sum(col.iter().zip(inst.law(1, j).probs()).map(|(g, qb)| qb * g.powf(p)))),
    );
    [
        compensated_sum(total).powf(p),
        compensated_sum(rows),
        col_terms,
        compensated_sum(full),
    ]
}

fn mixed_sum_order2(ctx: &Context, args: &CheckArgs) -> Result<Evaluation, SuiteError> {
    let p = p_of(args);
    let [t0, t1, t2, t3] = order2_sum_terms(ctx.inst()?, p);
    let pp = p.powf(p);
    Ok(Evaluation::new(Shape::Upper {
        lhs: ctx.moment(p)?,
        structure: t0 + pp * t1 + pp * t2 + pp * pp * t3,
        power: 1.0,
    })
    .constant((2.0 * E * E).powf(2.0 * p))
    .terms(vec![
        Term::new("mean", t0),
        Term::new("rows", t1),
        Term::new("columns", t2),
        Term::new("entries", t3),
    ]))
}

fn mixed_max_order2(ctx: &Context, args: &CheckArgs) -> Result<Evaluation, SuiteError> {
    let p = p_of(args);
    let terms = max_terms(ctx, p)?;
    let pp = p.powf(p);
    let bracket = weighted_sum(&terms, false, |s| pp.powi(s.len() as i32));
    Ok(Evaluation::new(Shape::Upper {
        lhs: ctx.moment(p)?,
        structure: (2.0 * E * E).powf(p) * p.powi(4) * bracket,
        power: p,
    })
    .terms(labelled(&terms)))
}

fn mixed_max_lower(ctx: &Context, args: &CheckArgs) -> Result<Evaluation, SuiteError> {
    let p = p_of(args);
    let terms = max_terms(ctx, p)?;
    Ok(Evaluation::new(Shape::Lower {
        structure: largest(&terms, false),
        rhs: ctx.moment(p)?,
        power: 1.0,
    })
    .constant(1.0)
    .terms(labelled(&terms)))
}

fn mixed_max_upper(ctx: &Context, args: &CheckArgs) -> Result<Evaluation, SuiteError> {
    let p = p_of(args);
    let terms = max_terms(ctx, p)?;
    Ok(Evaluation::new(Shape::Upper {
        lhs: ctx.moment(p)?,
        structure: weighted_sum(&terms, false, |s| p.powf(s.len() as f64 * p)),
        power: p,
    })
    .terms(labelled(&terms)))
}

fn mixed_max_log(ctx: &Context, args: &CheckArgs) -> Result<Evaluation, SuiteError> {
    let p = p_of(args);
    let m = ctx.inst()?.m() as f64;
    let terms = max_terms(ctx, p)?;
    Ok(Evaluation::new(Shape::Upper {
        lhs: ctx.moment(p)?,
        structure: (p / p.ln()).powf(m * p) * largest(&terms, false),
        power: p,
    })
    .terms(labelled(&terms)))
}

/// Quantile level `2^{-(p+1)/(p-1)} K^{-p/(p-1)}` for the nonnegative case.
fn nonneg_level(p: f64, k: f64) -> f64 {
    2f64.powf(-(p + 1.0) / (p - 1.0)) * k.powf(-p / (p - 1.0))
}

fn quantile_max_lower(ctx: &Context, args: &CheckArgs) -> Result<Evaluation, SuiteError> {
    let p = p_of(args);
    let k = configured(args);
    let q = nonneg_level(p, k);
    let t0 = t0_at(&*ctx.tails()?, q)?;
    let terms = max_terms(ctx, p)?;
    let quantile_term = t0.powf(p) / (4.0 * k).powf(p / (p - 1.0));
    let mut all = labelled(&terms);
    all.push(Term::new("quantile", quantile_term));
    Ok(Evaluation::new(Shape::Fixed {
        lhs: quantile_term.max(largest(&terms, true)),
        rhs: ctx.moment(p)?,
    })
    .constant(k)
    .level(Level::Fixed(q))
    .terms(all))
}

fn quantile_max_upper(ctx: &Context, args: &CheckArgs) -> Result<Evaluation, SuiteError> {
    let p = p_of(args);
    let terms = max_terms(ctx, p)?;
    let rest = weighted_sum(&terms, true, |s| p.powf(s.len() as f64 * p));
    let tails = ctx.tails()?;
    let f = Arc::new(move |k: f64| {
        if k <= 0.0 {
            return 0.0;
        }
        let t0 = t0_at(&tails, nonneg_level(p, k)).unwrap_or(f64::NAN);
        (4.0 * k).powf(p) * (2f64.powf(1.0 + p) * t0.powf(p) + rest)
    });
    Ok(Evaluation::new(Shape::Monotone {
        lhs: ctx.moment(p)?,
        f,
    })
    .level(Level::OfConstant(Arc::new(move |k| nonneg_level(p, k))))
    .terms(labelled(&terms)))
}

fn norm_max_fit(ctx: &Context, args: &CheckArgs) -> Result<Evaluation, SuiteError> {
    let p = p_of(args);
    let q = nonneg_level(p, 1.0);
    let t0 = t0_at(&*ctx.tails()?, q)?;
    let terms = max_terms(ctx, p)?;
    let mut all = labelled(&terms);
    all.push(Term::new("t0^p", t0.powf(p)));
    Ok(Evaluation::new(Shape::Upper {
        lhs: ctx.moment(p)?,
        structure: largest(&terms, true).max(t0.powf(p)),
        power: 1.0,
    })
    .level(Level::Fixed(q))
    .terms(all))
}

// ---- canonical kernels ----

fn khinchin_lower(ctx: &Context, args: &CheckArgs) -> Result<Evaluation, SuiteError> {
    let p = p_of(args);
    let m = ctx.inst()?.m() as f64;
    let squares = moment(ctx.square_dist()?, p / 2.0, MomentKind::Absolute)?;
    Ok(Evaluation::new(Shape::Lower {
        structure: squares,
        rhs: ctx.moment(p)?,
        power: 1.0,
    })
    .constant(2f64.powf(m * p))
    .terms(vec![Term::new("square function", squares)]))
}

fn khinchin_upper(ctx: &Context, args: &CheckArgs) -> Result<Evaluation, SuiteError> {
    let p = p_of(args);
    let m = ctx.inst()?.m() as f64;
    let squares = moment(ctx.square_dist()?, p / 2.0, MomentKind::Absolute)?;
    Ok(Evaluation::new(Shape::Upper {
        lhs: ctx.moment(p)?,
        structure: squares,
        power: 1.0,
    })
    .constant(2f64.powf(m * p) * (p - 1.0).powf(m * p / 2.0))
    .terms(vec![Term::new("square function", squares)]))
}

fn randomized_lower(ctx: &Context, args: &CheckArgs) -> Result<Evaluation, SuiteError> {
    let p = p_of(args);
    let m = ctx.inst()?.m() as f64;
    let chaos = moment(ctx.chaos_dist()?, p, MomentKind::Absolute)?;
    Ok(Evaluation::new(Shape::Lower {
        structure: chaos,
        rhs: ctx.moment(p)?,
        power: 1.0,
    })
    .constant(2f64.powf(m * p))
    .terms(vec![Term::new("randomized", chaos)]))
}

fn randomized_upper(ctx: &Context, args: &CheckArgs) -> Result<Evaluation, SuiteError> {
    let p = p_of(args);
    let m = ctx.inst()?.m() as f64;
    let chaos = moment(ctx.chaos_dist()?, p, MomentKind::Absolute)?;
    Ok(Evaluation::new(Shape::Upper {
        lhs: ctx.moment(p)?,
        structure: chaos,
        power: 1.0,
    })
    .constant(2f64.powf(m * p))
    .terms(vec![Term::new("randomized", chaos)]))
}

fn sign_randomization(ctx: &Context, args: &CheckArgs) -> Result<Evaluation, SuiteError> {
    let p = p_of(args);
    Ok(Evaluation::new(Shape::Equal {
        lhs: moment(ctx.chaos_dist()?, p, MomentKind::Absolute)?,
        rhs: ctx.moment(p)?,
    }))
}

fn square_max_lower(ctx: &Context, args: &CheckArgs) -> Result<Evaluation, SuiteError> {
    let p = p_of(args);
    let m = ctx.inst()?.m() as f64;
    let terms = square_terms(ctx, p)?;
    Ok(Evaluation::new(Shape::Lower {
        structure: largest(&terms, false),
        rhs: ctx.moment(p)?,
        power: 1.0,
    })
    .constant(2f64.powf(m * p))
    .terms(labelled(&terms)))
}

fn square_max_upper(ctx: &Context, args: &CheckArgs) -> Result<Evaluation, SuiteError> {
    let p = p_of(args);
    let m = ctx.inst()?.m() as f64;
    let terms = square_terms(ctx, p)?;
    Ok(Evaluation::new(Shape::Upper {
        lhs: ctx.moment(p)?,
        structure: weighted_sum(&terms, false, |s| p.powf((m + s.len() as f64) * p / 2.0)),
        power: p,
    })
    .terms(labelled(&terms)))
}

/// Quantile level `(3/4)^{p/(p-2)} (2 K^p p^{mp/2})^{-1/(p-2)}` for the canonical case.
fn canonical_level(p: f64, m: f64, k: f64) -> f64 {
    (0.75f64).powf(p / (p - 2.0)) * (2.0 * k.powf(p) * p.powf(m * p / 2.0)).powf(-1.0 / (p - 2.0))
}

fn square_quantile_lower(ctx: &Context, args: &CheckArgs) -> Result<Evaluation, SuiteError> {
    let p = p_of(args);
    let m = ctx.inst()?.m() as f64;
    let k = configured(args);
    let q = canonical_level(p, m, k);
    let t0 = t0_at(&*ctx.abs_tails()?, q)?;
    let terms = square_terms(ctx, p)?;
    let quantile_term = t0.powf(p) / (4.0 * k * p.powf(m / 2.0)).powf(p / (p - 2.0));
    let mixed = 2f64.powf(-m * p) * largest(&terms, true);
    let mut all = labelled(&terms);
    all.push(Term::new("quantile", quantile_term));
    Ok(Evaluation::new(Shape::Fixed {
        lhs: quantile_term.max(mixed),
        rhs: ctx.moment(p)?,
    })
    .constant(k)
    .level(Level::Fixed(q))
    .terms(all))
}

fn square_quantile_upper(ctx: &Context, args: &CheckArgs) -> Result<Evaluation, SuiteError> {
    let p = p_of(args);
    let m = ctx.inst()?.m() as f64;
    let terms = square_terms(ctx, p)?;
    let rest = weighted_sum(&terms, true, |s| p.powf((m + s.len() as f64) * p / 2.0));
    let tails = ctx.abs_tails()?;
    let f = Arc::new(move |k: f64| {
        if k <= 0.0 {
            return 0.0;
        }
        let t0 = t0_at(&tails, canonical_level(p, m, k)).unwrap_or(f64::NAN);
        2.0 * k.powf(p) * ((2.0 * p.powf(m / 2.0)).powf(p) * t0.powf(p) + rest)
    });
    Ok(Evaluation::new(Shape::Monotone {
        lhs: ctx.moment(p)?,
        f,
    })
    .level(Level::OfConstant(Arc::new(move |k| canonical_level(p, m, k))))
    .terms(labelled(&terms)))
}

/// Order-2 square terms by subset mask: `[C^p, rows, columns, E max |h|^p]`.
fn square_parts(ctx: &Context, p: f64) -> Result<[f64; 4], SuiteError> {
    let terms = square_terms(ctx, p)?;
    let mut out = [0.0; 4];
    for (s, v) in terms {
        out[s.mask() as usize] = v;
    }
    Ok(out)
}

fn square_max_order2(ctx: &Context, args: &CheckArgs) -> Result<Evaluation, SuiteError> {
    let p = p_of(args);
    let [c, rows, cols, max] = square_parts(ctx, p)?;
    let parts = [
        p.powf(p) * c,
        p.powf(1.5 * p) * rows,
        p.powf(1.5 * p) * cols,
        p.powf(2.0 * p) * max,
    ];
    Ok(Evaluation::new(Shape::Upper {
        lhs: ctx.moment(p)?,
        structure: parts.iter().copied().fold(0.0, f64::max),
        power: p,
    })
    .terms(vec![
        Term::new("C", parts[0]),
        Term::new("rows", parts[1]),
        Term::new("columns", parts[2]),
        Term::new("max", parts[3]),
    ]))
}

fn operator_moment(ctx: &Context, args: &CheckArgs) -> Result<Evaluation, SuiteError> {
    let p = p_of(args);
    let [c, rows, cols, max] = square_parts(ctx, p)?;
    let d = abcd_params(ctx.inst()?)?.d;
    let parts = [
        p.powf(p / 2.0) * c,
        p.powf(p) * d.powf(p),
        p.powf(1.5 * p) * (rows + cols),
        p.powf(2.0 * p) * max,
    ];
    Ok(Evaluation::new(Shape::Upper {
        lhs: ctx.moment(p)?,
        structure: compensated_sum(parts),
        power: p,
    })
    .terms(vec![
        Term::new("C", parts[0]),
        Term::new("D", parts[1]),
        Term::new("rows+columns", parts[2]),
        Term::new("max", parts[3]),
    ]))
}

fn param_moment_structure(params: &BoundParams, p: f64) -> ([f64; 4], f64) {
    let parts = [
        p.powf(p / 2.0) * params.c.powf(p),
        p.powf(p) * params.d.powf(p),
        p.powf(1.5 * p) * params.b.powf(p),
        p.powf(2.0 * p) * params.a.powf(p),
    ];
    (parts, compensated_sum(parts))
}

fn param_moment(ctx: &Context, p: f64, params: BoundParams) -> Result<Evaluation, SuiteError> {
    let (parts, structure) = param_moment_structure(&params, p);
    Ok(Evaluation::new(Shape::Upper {
        lhs: ctx.moment(p)?,
        structure,
        power: p,
    })
    .terms(vec![
        Term::new("C", parts[0]),
        Term::new("D", parts[1]),
        Term::new("B", parts[2]),
        Term::new("A", parts[3]),
    ]))
}

fn iid_params_of(inst: &UStatInstance) -> Result<BoundParams, SuiteError> {
    Ok(iid_params(inst.kernel().table(&[0, 0]), inst.law(0, 0), inst.n())?)
}

fn abcd_moment(ctx: &Context, args: &CheckArgs) -> Result<Evaluation, SuiteError> {
    param_moment(ctx, p_of(args), abcd_params(ctx.inst()?)?)
}

fn iid_moment(ctx: &Context, args: &CheckArgs) -> Result<Evaluation, SuiteError> {
    param_moment(ctx, p_of(args), iid_params_of(ctx.inst()?)?)
}

fn three_regime_tail(ctx: &Context, args: &CheckArgs) -> Result<Evaluation, SuiteError> {
    let x = aux_of(args);
    let lhs = ctx.dist()?.abs().tail_gt(x);
    exp_tail(lhs, ExpForm::ThreeRegime, abcd_params(ctx.inst()?)?, x)
}

fn four_regime_tail(ctx: &Context, args: &CheckArgs) -> Result<Evaluation, SuiteError> {
    let x = aux_of(args);
    let lhs = ctx.dist()?.abs().tail_ge(x);
    exp_tail(lhs, ExpForm::FourRegime, abcd_params(ctx.inst()?)?, x)
}

fn iid_tail(ctx: &Context, args: &CheckArgs) -> Result<Evaluation, SuiteError> {
    let x = aux_of(args);
    let lhs = ctx.dist()?.abs().tail_ge(x);
    exp_tail(lhs, ExpForm::Iid, iid_params_of(ctx.inst()?)?, x)
}

// ---- empirical processes ----

fn talagrand_tail(ctx: &Context, args: &CheckArgs) -> Result<Evaluation, SuiteError> {
    let x = aux_of(args);
    let class = ctx.class()?;
    let dist = ctx.dist()?;
    let mean_abs = dist.expect(f64::abs);
    let sigma = class.sigma2().sqrt();
    let a = class.sup_norm();
    let threshold = talagrand_threshold(mean_abs, sigma, a, x);
    Ok(Evaluation::new(Shape::Fixed {
        lhs: dist.abs().tail_ge(threshold),
        rhs: (-x).exp(),
    })
    .terms(vec![
        Term::new("threshold", threshold),
        Term::new("E|S|", mean_abs),
        Term::new("sigma", sigma),
        Term::new("a", a),
    ]))
}

fn talagrand_moment_with(ctx: &Context, args: &CheckArgs, envelope: bool) -> Result<Evaluation, SuiteError> {
    let p = p_of(args);
    let sup = empirical_sup_moment(&ctx.exact, ctx.class()?, p)?;
    let last = if envelope { sup.envelope_moment } else { sup.a.powf(p) };
    let parts = [sup.mean_abs.powf(p), p.powf(p / 2.0) * sup.sigma2.powf(p / 2.0), p.powf(p) * last];
    Ok(Evaluation::new(Shape::Upper {
        lhs: sup.moment_p,
        structure: compensated_sum(parts),
        power: p,
    })
    .terms(vec![
        Term::new("mean", parts[0]),
        Term::new("sigma", parts[1]),
        Term::new(if envelope { "envelope" } else { "a" }, parts[2]),
    ]))
}

fn talagrand_moment(ctx: &Context, args: &CheckArgs) -> Result<Evaluation, SuiteError> {
    talagrand_moment_with(ctx, args, false)
}

fn empirical_rosenthal(ctx: &Context, args: &CheckArgs) -> Result<Evaluation, SuiteError> {
    talagrand_moment_with(ctx, args, true)
}

// ---- single-sample statistics ----

fn decoupling(ctx: &Context, args: &CheckArgs, undecoupled_smaller: bool) -> Result<Evaluation, SuiteError> {
    let p = p_of(args);
    let undec = ctx.moment(p)?;
    let dec_inst = decouple(ctx.inst()?);
    let dec = moment(&ctx.exact.distribution(&dec_inst)?, p, MomentKind::Absolute)?;
    let (lhs, structure) = if undecoupled_smaller { (undec, dec) } else { (dec, undec) };
    Ok(Evaluation::new(Shape::Upper {
        lhs,
        structure,
        power: 1.0,
    })
    .terms(vec![Term::new("undecoupled", undec), Term::new("decoupled", dec)]))
}

fn decoupling_upper(ctx: &Context, args: &CheckArgs) -> Result<Evaluation, SuiteError> {
    decoupling(ctx, args, true)
}

fn decoupling_lower(ctx: &Context, args: &CheckArgs) -> Result<Evaluation, SuiteError> {
    decoupling(ctx, args, false)
}

// ---- nonnegative kernels, p <= 1 ----

fn lr_max_lower(ctx: &Context, args: &CheckArgs) -> Result<Evaluation, SuiteError> {
    let (p, r) = (p_of(args), r_of(args));
    let terms = lr_terms(ctx, p, r)?;
    Ok(Evaluation::new(Shape::Lower {
        structure: largest(&terms, false),
        rhs: ctx.moment(p)?,
        power: 1.0,
    })
    .constant(1.0)
    .terms(labelled(&terms)))
}

fn lr_max_upper(ctx: &Context, args: &CheckArgs) -> Result<Evaluation, SuiteError> {
    let (p, r) = (p_of(args), r_of(args));
    let terms = lr_terms(ctx, p, r)?;
    Ok(Evaluation::new(Shape::Upper {
        lhs: ctx.moment(p)?,
        structure: largest(&terms, false),
        power: 1.0,
    })
    .terms(labelled(&terms)))
}

/// Quantile level `(1/2) (2^{p+1} K)^{-1/(p-r)}` for `p <= 1`.
fn lr_level(p: f64, r: f64, k: f64) -> f64 {
    0.5 * (2f64.powf(p + 1.0) * k).powf(-1.0 / (p - r))
}

fn lr_quantile_lower(ctx: &Context, args: &CheckArgs) -> Result<Evaluation, SuiteError> {
    let (p, r) = (p_of(args), r_of(args));
    let k = configured(args);
    let q = lr_level(p, r, k);
    let t0 = t0_at(&*ctx.tails()?, q)?;
    let terms = lr_terms(ctx, p, r)?;
    let quantile_term = t0.powf(p) / (2f64.powf(p + 1.0) * k).powf(1.0 / (p - r));
    let mut all = labelled(&terms);
    all.push(Term::new("quantile", quantile_term));
    Ok(Evaluation::new(Shape::Fixed {
        lhs: quantile_term.max(largest(&terms, true)),
        rhs: ctx.moment(p)?,
    })
    .constant(k)
    .level(Level::Fixed(q))
    .terms(all))
}

fn lr_quantile_upper(ctx: &Context, args: &CheckArgs) -> Result<Evaluation, SuiteError> {
    let (p, r) = (p_of(args), r_of(args));
    let terms = lr_terms(ctx, p, r)?;
    let rest = weighted_sum(&terms, true, |_| 1.0);
    let tails = ctx.tails()?;
    let f = Arc::new(move |k: f64| {
        if k <= 0.0 {
            return 0.0;
        }
        let t0 = t0_at(&tails, lr_level(p, r, k)).unwrap_or(f64::NAN);
        2.0 * k * (2f64.powf(p / r) * t0.powf(p) + rest)
    });
    Ok(Evaluation::new(Shape::Monotone {
        lhs: ctx.moment(p)?,
        f,
    })
    .level(Level::OfConstant(Arc::new(move |k| lr_level(p, r, k))))
    .terms(labelled(&terms)))
}

macro_rules! cases {
    ($($id:literal, $mode:ident, $side:ident, $uses_r:expr, $aux:expr, $configured:expr, $need:expr, $eval:ident, $desc:literal;)*) => {
        vec![$(InequalityCase {
            id: $id,
            description: $desc,
            mode: CaseMode::$mode,
            side: Side::$side,
            uses_r: $uses_r,
            aux: $aux,
            configured: $configured,
            need: $need,
            eval: $eval,
        }),*]
    };
}

fn build() -> Vec<InequalityCase> {
    let dec = |order, kernel, p, r| need(S::Decoupled, order, kernel, p, r);
    let x = Some(AuxParam::X);
    cases![
        "ROSENTHAL_EXPLICIT", ExactConstant, Upper, false, None, None, ONE_NONNEG(P::Above(1.0)), rosenthal_explicit,
            "E(sum xi)^p <= (2e)^p max[(e/p) p^p sum E xi^p, e^p (sum E xi)^p] for nonnegative summands";
        "ROSENTHAL_LOG", FitConstant, Upper, false, None, None, ONE_NONNEG(P::Above(1.0)), rosenthal_log,
            "E(sum xi)^p <= K^p (p/log p)^p max[sum E xi^p, (sum E xi)^p]";
        "HOFFMANN_QUANTILE", ExactConstant, Upper, false, None, None, ONE_NONNEG(P::Positive), hoffmann_quantile,
            "E(sum xi)^p <= 2^{p-2} 2^{(p-1)+} (p+1)^{p+1} [t0^p + E max xi^p] with t0 at level 1/2";
        "HOFFMANN_LR", ExactConstant, Upper, true, None, None, need(S::Decoupled, Some(1), K::Nonnegative, P::Positive, R::Below), hoffmann_lr,
            "quantile form with t0 replaced by 2^{1/r} ||sum xi||_r";
        "MAXIMA_LOWER", ExactConstant, Lower, false, None, None, ONE_NONNEG(P::Positive), maxima_lower,
            "(1/2)[delta0^p v sum E xi^p 1{xi > delta0}] <= E max xi^p";
        "MAXIMA_UPPER", ExactConstant, Upper, false, None, None, ONE_NONNEG(P::Positive), maxima_upper,
            "E max xi^p <= delta0^p + sum E xi^p 1{xi > delta0}";
        "SUM_TO_MAX", ExactConstant, Upper, true, None, None, dec(Some(1), K::Any, P::Positive, R::Below), sum_to_max,
            "sum E|xi|^p <= 2 E max|xi|^p + 2 (sum E|xi|^r)(E max|xi|^p)^{(p-r)/p}";
        "SUM_TO_MAX_POWER", ExactConstant, Upper, false, Some(AuxParam::Alpha), None, dec(Some(1), K::Any, P::Above(1.0), R::Unused), sum_to_max_power,
            "p^{alpha p} sum E|xi|^p <= 2(1+p^alpha) max[p^{alpha p} E max|xi|^p, (sum E|xi|)^p]";
        "PALEY_ZYGMUND", ExactConstant, Lower, true, Some(AuxParam::Lambda), None, dec(None, K::Nonnegative, P::Positive, R::BelowAndAtMostOne), paley_zygmund,
            "[(1-lambda^r) ||A||_r/||A||_p]^{p/(p-r)} <= P(A > lambda ||A||_r), for r <= 1";
        "PALEY_ZYGMUND_STANDARD", ExactConstant, Lower, true, Some(AuxParam::Lambda), None, dec(None, K::Nonnegative, P::Positive, R::Below), paley_zygmund_std,
            "[(1-lambda^r) (||A||_r/||A||_p)^r]^{p/(p-r)} <= P(A > lambda ||A||_r)";
        "KLASS_NOWICKI_UPPER", FitConstant, Upper, false, None, None, ONE_NONNEG(P::Positive), kn_upper,
            "E(sum xi)^p <= c (E max xi^p + v0^p)";
        "KLASS_NOWICKI_LOWER", FitConstant, Lower, false, None, None, ONE_NONNEG(P::Positive), kn_lower,
            "E max xi^p + v0^p <= c E(sum xi)^p";
        "KLASS_NOWICKI_TRUNCATED_UPPER", FitConstant, Upper, false, None, None, ONE_NONNEG(P::Positive), kn_truncated_upper,
            "E(sum xi)^p <= c (E max xi^p + v~0^p), v~0 for the summands truncated at t0";
        "KLASS_NOWICKI_TRUNCATED_LOWER", FitConstant, Lower, false, None, None, ONE_NONNEG(P::Positive), kn_truncated_lower,
            "E max xi^p + v~0^p <= c E(sum xi)^p";
        "PINELIS", FitConstant, Upper, false, None, None, dec(Some(1), K::Canonical, P::AtLeast(2.0), R::Unused), pinelis,
            "E|sum xi|^p <= K^p max[p^p E max|xi|^p, p^{p/2} (sum E xi^2)^{p/2}] for centered summands";
        "BERNSTEIN_TAIL", Tail, Upper, false, x, None, dec(Some(1), K::Canonical, P::Unused, R::Unused), bernstein_tail,
            "P(|sum xi| > x) <= e^2 exp(-min(x/(KeA), (x/(KeC))^2))";
        "MIXED_SUM_LOWER", ExactConstant, Lower, false, None, None, dec(None, K::Nonnegative, P::AtLeast(1.0), R::Unused), mixed_sum_lower,
            "max_J sum_{i_J} E_J (sum_{i_J'} E_J' h)^p <= E(sum h)^p";
        "MIXED_SUM_UPPER", ExactConstant, Upper, false, None, None, dec(None, K::Nonnegative, P::Above(1.0), R::Unused), mixed_sum_upper,
            "E(sum h)^p <= (2e^2)^{mp} sum_J p^{|J|p} sum_{i_J} E_J (sum_{i_J'} E_J' h)^p";
        "MIXED_SUM_LOG", FitConstant, Upper, false, None, None, dec(None, K::Nonnegative, P::Above(1.0), R::Unused), mixed_sum_log,
            "E(sum h)^p <= K^{mp} (p/log p)^{mp} max_J sum_{i_J} E_J (sum_{i_J'} E_J' h)^p";
        "MIXED_SUM_ORDER2", ExactConstant, Upper, false, None, None, dec(Some(2), K::Nonnegative, P::Above(1.0), R::Unused), mixed_sum_order2,
            "order-2 expansion of the mixed-sum bound, computed directly from the kernel tables";
        "MIXED_MAX_ORDER2", FitConstant, Upper, false, None, None, dec(Some(2), K::Nonnegative, P::Above(1.0), R::Unused), mixed_max_order2,
            "E(sum h)^p <= K^p (2e^2)^p p^4 [sum over J of p^{|J|p} E_J max_{i_J} (sum E_J' h)^p]";
        "MIXED_MAX_LOWER", ExactConstant, Lower, false, None, None, dec(None, K::Nonnegative, P::AtLeast(1.0), R::Unused), mixed_max_lower,
            "max_J E_J max_{i_J} (sum_{i_J'} E_J' h)^p <= E(sum h)^p";
        "MIXED_MAX_UPPER", FitConstant, Upper, false, None, None, dec(None, K::Nonnegative, P::Above(1.0), R::Unused), mixed_max_upper,
            "E(sum h)^p <= K^p sum_J p^{|J|p} E_J max_{i_J} (sum_{i_J'} E_J' h)^p";
        "MIXED_MAX_LOG", FitConstant, Upper, false, None, None, dec(None, K::Nonnegative, P::Above(1.0), R::Unused), mixed_max_log,
            "E(sum h)^p <= K^p (p/log p)^{mp} max_J E_J max_{i_J} (sum_{i_J'} E_J' h)^p";
        "QUANTILE_MAX_LOWER", ExactConstant, Lower, false, None, Some(1.0), dec(None, K::Nonnegative, P::Above(1.0), R::Unused), quantile_max_lower,
            "t0^p/(4K)^{p/(p-1)} v max_{J nonempty} E_J max_{i_J} (sum E_J' h)^p <= E(sum h)^p";
        "QUANTILE_MAX_UPPER", FitConstant, Upper, false, None, None, dec(None, K::Nonnegative, P::Above(1.0), R::Unused), quantile_max_upper,
            "E(sum h)^p <= (4K)^p {2^{1+p} t0^p + sum_{J nonempty} p^{|J|p} E_J max_{i_J} (sum E_J' h)^p}";
        "NORM_MAX_FIT", FitConstant, Upper, false, None, None, dec(Some(2), K::Nonnegative, P::Above(1.0), R::Unused), norm_max_fit,
            "E(sum h)^p <= c max[row maxima, column maxima, E max h^p, t0^p]";
        "KHINCHIN_LOWER", ExactConstant, Lower, false, None, None, dec(None, K::Canonical, P::AtLeast(2.0), R::Unused), khinchin_lower,
            "2^{-mp} E(sum h^2)^{p/2} <= E|sum h|^p";
        "KHINCHIN_UPPER", ExactConstant, Upper, false, None, None, dec(None, K::Canonical, P::AtLeast(2.0), R::Unused), khinchin_upper,
            "E|sum h|^p <= 2^{mp} (p-1)^{mp/2} E(sum h^2)^{p/2}";
        "RANDOMIZED_LOWER", ExactConstant, Lower, false, None, None, dec(None, K::Canonical, P::AtLeast(1.0), R::Unused), randomized_lower,
            "2^{-mp} E|sum eps h|^p <= E|sum h|^p";
        "RANDOMIZED_UPPER", ExactConstant, Upper, false, None, None, dec(None, K::Canonical, P::AtLeast(1.0), R::Unused), randomized_upper,
            "E|sum h|^p <= 2^{mp} E|sum eps h|^p";
        "SIGN_RANDOMIZATION", ExactConstant, TwoSided, false, None, None, dec(None, K::SeparatelySymmetric, P::Positive, R::Unused), sign_randomization,
            "E|sum eps h|^p = E|sum h|^p for separately symmetric kernels";
        "SQUARE_MAX_LOWER", ExactConstant, Lower, false, None, None, dec(None, K::Canonical, P::Above(2.0), R::Unused), square_max_lower,
            "2^{-mp} max_J E_J max_{i_J} (sum E_J' h^2)^{p/2} <= E|sum h|^p";
        "SQUARE_MAX_UPPER", FitConstant, Upper, false, None, None, dec(None, K::Canonical, P::Above(2.0), R::Unused), square_max_upper,
            "E|sum h|^p <= K^p sum_J p^{(m+|J|)p/2} E_J max_{i_J} (sum E_J' h^2)^{p/2}";
        "SQUARE_QUANTILE_LOWER", ExactConstant, Lower, false, None, Some(1.0), dec(None, K::Canonical, P::Above(2.0), R::Unused), square_quantile_lower,
            "t0^p/(4K p^{m/2})^{p/(p-2)} v 2^{-mp} max_{J nonempty} (square maxima) <= E|sum h|^p";
        "SQUARE_QUANTILE_UPPER", FitConstant, Upper, false, None, None, dec(None, K::Canonical, P::Above(2.0), R::Unused), square_quantile_upper,
            "E|sum h|^p <= 2K^p {(2p^{m/2})^p t0^p + sum_{J nonempty} p^{(m+|J|)p/2} (square maxima)}";
        "SQUARE_MAX_ORDER2", FitConstant, Upper, false, None, None, dec(Some(2), K::Canonical, P::AtLeast(2.0), R::Unused), square_max_order2,
            "E|sum h|^p <= K^p max[p^p C^p, p^{3p/2} row maxima, p^{3p/2} column maxima, p^{2p} E max|h|^p]";
        "OPERATOR_MOMENT", FitConstant, Upper, false, None, None, dec(Some(2), K::Canonical, P::AtLeast(2.0), R::Unused), operator_moment,
            "E|sum h|^p <= K^p [p^{p/2} C^p + p^p D^p + p^{3p/2} (row + column maxima) + p^{2p} E max|h|^p]";
        "ABCD_MOMENT", FitConstant, Upper, false, None, None, dec(Some(2), K::Canonical, P::AtLeast(2.0), R::Unused), abcd_moment,
            "E|sum h|^p <= K^p [p^{p/2} C^p + p^p D^p + p^{3p/2} B^p + p^{2p} A^p]";
        "IID_MOMENT", FitConstant, Upper, false, None, None, dec(Some(2), K::CanonicalIid, P::AtLeast(2.0), R::Unused), iid_moment,
            "moment bound with the identically distributed parameters";
        "THREE_REGIME_TAIL", Tail, Upper, false, x, None, dec(Some(2), K::Canonical, P::Unused, R::Unused), three_regime_tail,
            "P(|sum h| > x) <= K exp(-min(x/C, (x/B)^{2/3}, (x/A)^{1/2})/K)";
        "FOUR_REGIME_TAIL", Tail, Upper, false, x, None, dec(Some(2), K::Canonical, P::Unused, R::Unused), four_regime_tail,
            "P(|sum h| >= x) <= L exp(-min(x^2/C^2, x/D, (x/B)^{2/3}, (x/A)^{1/2})/L)";
        "IID_TAIL", Tail, Upper, false, x, None, dec(Some(2), K::CanonicalIid, P::Unused, R::Unused), iid_tail,
            "four-regime tail bound with the identically distributed parameters";
        "TALAGRAND_TAIL", Tail, Upper, false, x, None, need(S::Class, None, K::Any, P::Unused, R::Unused), talagrand_tail,
            "P(|S| >= 2E|S| + sigma sqrt(8x) + 34.5 a x) <= e^{-x}";
        "TALAGRAND_MOMENT", FitConstant, Upper, false, None, None, need(S::Class, None, K::Any, P::AtLeast(1.0), R::Unused), talagrand_moment,
            "E|S|^p <= K^p [(E|S|)^p + p^{p/2} sigma^p + p^p a^p]";
        "EMPIRICAL_ROSENTHAL", FitConstant, Upper, false, None, None, need(S::Class, None, K::Any, P::AtLeast(1.0), R::Unused), empirical_rosenthal,
            "E|S|^p <= K^p [(E|S|)^p + p^{p/2} sigma^p + p^p E max_i sup_f |f(Z_i)|^p]";
        "DECOUPLING_UPPER", FitConstant, Upper, false, None, None, need(S::Undecoupled, None, K::Any, P::Positive, R::Unused), decoupling_upper,
            "E|undecoupled|^p <= c E|decoupled|^p";
        "DECOUPLING_LOWER", FitConstant, Lower, false, None, None, need(S::Undecoupled, None, K::Any, P::Positive, R::Unused), decoupling_lower,
            "E|decoupled|^p <= c E|undecoupled|^p";
        "LR_MAX_LOWER", ExactConstant, Lower, true, None, None, dec(None, K::Nonnegative, P::AtMostOne, R::Below), lr_max_lower,
            "max_J E_J max_{i_J} (E_J' (sum_{i_J'} h)^r)^{p/r} <= E(sum h)^p for r < p <= 1";
        "LR_MAX_UPPER", FitConstant, Upper, true, None, None, dec(None, K::Nonnegative, P::AtMostOne, R::Below), lr_max_upper,
            "E(sum h)^p <= K max_J E_J max_{i_J} (E_J' (sum_{i_J'} h)^r)^{p/r}";
        "LR_QUANTILE_LOWER", ExactConstant, Lower, true, None, Some(1.0), dec(None, K::Nonnegative, P::AtMostOne, R::Below), lr_quantile_lower,
            "t0^p/(2^{p+1}K)^{1/(p-r)} v max_{J nonempty} (lr maxima) <= E(sum h)^p";
        "LR_QUANTILE_UPPER", FitConstant, Upper, true, None, None, dec(None, K::Nonnegative, P::AtMostOne, R::Below), lr_quantile_upper,
            "E(sum h)^p <= 2K {2^{p/r} t0^p + sum_{J nonempty} (lr maxima)}";
    ]
}

/// Every registered case, in a fixed order.
pub fn registry() -> &'static [InequalityCase] {
    static REGISTRY: OnceLock<Vec<InequalityCase>> = OnceLock::new();
    REGISTRY.get_or_init(build)
}

pub fn case(id: &str) -> Option<&'static InequalityCase> {
    registry().iter().find(|c| c.id == id)
}
