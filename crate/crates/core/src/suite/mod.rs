//! Registry of moment and tail inequalities as checkable predicates.
//!
//! Every check reduces to a comparison `lhs <= rhs` in which `lhs` is the
//! side claimed to be smaller. Cases with explicit constants are checked at
//! those constants; cases whose constant is only known to exist are checked
//! at a supplied constant, and [`fit_constant`] finds the smallest constant
//! that makes them hold over a corpus.

mod cases;
mod context;
mod report;

pub use cases::{case, registry};
pub use context::{max_law, random_score_class, Context, CorpusItem, Subject, Traits};
pub use report::{summarize, write_csv, write_jsonl, CaseSummary, FitEntry, CSV_HEADER};

use std::fmt;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::bounds::BoundsError;
use crate::exact::{Exact, ExactError};
use crate::model::{generate_instance, Family, ModelError};
use crate::numeric::monotone_root;
use crate::par;

/// Relative slack on the larger side of every comparison.
pub const PASS_TOL: f64 = 1e-9;
/// Both sides at or below this magnitude make a check vacuous.
pub const VACUOUS_TOL: f64 = 1e-300;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SuiteError {
    #[error("unknown inequality `{0}`")]
    UnknownCase(String),
    #[error("not applicable: {0}")]
    NotApplicable(String),
    #[error(transparent)]
    Exact(#[from] ExactError),
    #[error(transparent)]
    Bounds(#[from] BoundsError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("no binding instance: every check in the corpus is vacuous")]
    NoBindingInstance,
    #[error("no finite constant makes {case} hold on instance {instance}")]
    Unbounded { case: String, instance: String },
}

/// How a case treats its constant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CaseMode {
    /// Checked at an explicit constant.
    ExactConstant,
    /// The constant is only known to exist; checked at a supplied or fitted value.
    FitConstant,
    /// A tail probability compared with a tail level.
    Tail,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Side {
    Upper,
    Lower,
    /// Equality of both sides.
    TwoSided,
}

/// Meaning of the case-specific extra parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum AuxParam {
    /// Tail argument `x`.
    X,
    /// Exponent `alpha >= 0` of the sum-to-maximum comparison.
    Alpha,
    /// Level `lambda` in `(0, 1)` of the Paley–Zygmund bound.
    Lambda,
}

impl fmt::Display for AuxParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AuxParam::X => "x",
            AuxParam::Alpha => "alpha",
            AuxParam::Lambda => "lambda",
        })
    }
}

/// Parameters of one check.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct CheckArgs {
    pub p: Option<f64>,
    pub r: Option<f64>,
    pub aux: Option<f64>,
    /// Constant to check at. Defaults to the explicit constant, the configured
    /// constant, or the instance's minimal constant, by mode.
    pub constant: Option<f64>,
}

impl CheckArgs {
    pub fn p(p: f64) -> Self {
        Self {
            p: Some(p),
            ..Self::default()
        }
    }

    pub fn with_r(mut self, r: f64) -> Self {
        self.r = Some(r);
        self
    }

    pub fn with_aux(mut self, aux: f64) -> Self {
        self.aux = Some(aux);
        self
    }

    pub fn with_constant(mut self, c: f64) -> Self {
        self.constant = Some(c);
        self
    }
}

/// One named contribution to a side of a check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Term {
    pub label: String,
    pub value: f64,
}

impl Term {
    pub fn new(label: impl Into<String>, value: f64) -> Self {
        Self {
            label: label.into(),
            value,
        }
    }
}

pub type RhsFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// How the two sides depend on the constant `c`.
#[derive(Clone)]
pub enum Shape {
    /// `lhs <= rhs`.
    Fixed { lhs: f64, rhs: f64 },
    /// `lhs <= c^power * structure`.
    Upper { lhs: f64, structure: f64, power: f64 },
    /// `structure / c^power <= rhs`.
    Lower { structure: f64, rhs: f64, power: f64 },
    /// `lhs <= f(c)` with `f` nondecreasing.
    Monotone { lhs: f64, f: RhsFn },
    /// `lhs == rhs`.
    Equal { lhs: f64, rhs: f64 },
}

impl fmt::Debug for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Shape::Fixed { lhs, rhs } => write!(f, "Fixed({lhs}, {rhs})"),
            Shape::Upper { lhs, structure, power } => write!(f, "Upper({lhs}, {structure}, {power})"),
            Shape::Lower { structure, rhs, power } => write!(f, "Lower({structure}, {rhs}, {power})"),
            Shape::Monotone { lhs, .. } => write!(f, "Monotone({lhs})"),
            Shape::Equal { lhs, rhs } => write!(f, "Equal({lhs}, {rhs})"),
        }
    }
}

impl Shape {
    fn depends_on_constant(&self) -> bool {
        matches!(self, Shape::Upper { .. } | Shape::Lower { .. } | Shape::Monotone { .. })
    }

    /// `(lhs, rhs)` at constant `c`.
    pub fn sides(&self, c: f64) -> (f64, f64) {
        match self {
            Shape::Fixed { lhs, rhs } | Shape::Equal { lhs, rhs } => (*lhs, *rhs),
            Shape::Upper { lhs, structure, power } => (*lhs, c.powf(*power) * structure),
            Shape::Lower { structure, rhs, power } => {
                let lhs = if *structure == 0.0 { 0.0 } else { structure / c.powf(*power) };
                (lhs, *rhs)
            }
            Shape::Monotone { lhs, f } => (*lhs, f(c)),
        }
    }

    /// Both sides vanish for every constant.
    fn is_vacuous(&self) -> bool {
        let tiny = |v: f64| v.abs() <= VACUOUS_TOL;
        match self {
            Shape::Fixed { lhs, rhs } | Shape::Equal { lhs, rhs } => tiny(*lhs) && tiny(*rhs),
            Shape::Upper { lhs, structure, .. } => tiny(*lhs) && tiny(*structure),
            Shape::Lower { structure, rhs, .. } => tiny(*structure) && tiny(*rhs),
            Shape::Monotone { lhs, f } => tiny(*lhs) && tiny(f(1.0)),
        }
    }

    /// Smallest `c > 0` with `lhs <= rhs` (0 when any constant works,
    /// infinite when none does). `None` for shapes without a constant.
    pub fn minimal_constant(&self) -> Option<f64> {
        match self {
            Shape::Fixed { .. } | Shape::Equal { .. } => None,
            Shape::Upper { lhs, structure, power } => Some(if *lhs <= 0.0 {
                0.0
            } else if *structure <= 0.0 {
                f64::INFINITY
            } else {
                (lhs / structure).powf(1.0 / power)
            }),
            Shape::Lower { structure, rhs, power } => Some(if *structure <= 0.0 {
                0.0
            } else if *rhs <= 0.0 {
                f64::INFINITY
            } else {
                (structure / rhs).powf(1.0 / power)
            }),
            Shape::Monotone { lhs, f } => Some(monotone_root(*lhs, f.as_ref())),
        }
    }
}

/// Result of evaluating one case on one subject, before a constant is chosen.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub shape: Shape,
    /// The explicit constant for exact-constant cases, or the configured
    /// constant that entered a fixed shape.
    pub constant: Option<f64>,
    /// Quantile level used, as a function of the constant where it depends on it.
    pub level: Option<Level>,
    pub terms: Vec<Term>,
    pub note: Option<String>,
}

#[derive(Clone)]
pub enum Level {
    Fixed(f64),
    OfConstant(RhsFn),
}

impl fmt::Debug for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Level::Fixed(q) => write!(f, "Fixed({q})"),
            Level::OfConstant(_) => f.write_str("OfConstant"),
        }
    }
}

impl Evaluation {
    pub fn new(shape: Shape) -> Self {
        Self {
            shape,
            constant: None,
            level: None,
            terms: Vec::new(),
            note: None,
        }
    }

    pub fn constant(mut self, c: f64) -> Self {
        self.constant = Some(c);
        self
    }

    pub fn level(mut self, level: Level) -> Self {
        self.level = Some(level);
        self
    }

    pub fn terms(mut self, terms: Vec<Term>) -> Self {
        self.terms = terms;
        self
    }

    pub fn note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

/// One verified comparison.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub case: String,
    pub instance: String,
    pub m: usize,
    pub n: usize,
    pub p: Option<f64>,
    pub r: Option<f64>,
    /// Case-specific extra parameter (`x`, `alpha` or `lambda`).
    pub aux: Option<f64>,
    pub aux_name: Option<String>,
    pub mode: CaseMode,
    pub side: Side,
    pub lhs: f64,
    pub rhs: f64,
    /// Constant the check was run at.
    pub constant: Option<f64>,
    /// Smallest constant that makes this single check hold.
    pub min_constant: Option<f64>,
    /// True when no constant was supplied and the check ran at `min_constant`.
    pub fitted: bool,
    pub ratio: Option<f64>,
    pub pass: bool,
    pub vacuous: bool,
    /// Quantile level of any `t0` that entered the check.
    pub q: Option<f64>,
    pub terms: Vec<Term>,
    pub note: Option<String>,
}

/// Static description of a registered inequality.
pub struct InequalityCase {
    pub id: &'static str,
    pub description: &'static str,
    pub mode: CaseMode,
    pub side: Side,
    pub uses_r: bool,
    pub aux: Option<AuxParam>,
    /// Constant used when a fixed shape depends on a configurable constant.
    pub configured: Option<f64>,
    pub(crate) need: cases::Need,
    pub(crate) eval: fn(&Context, &CheckArgs) -> Result<Evaluation, SuiteError>,
}

impl fmt::Debug for InequalityCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("InequalityCase").field("id", &self.id).finish()
    }
}

impl InequalityCase {
    /// Reason the case cannot run on `traits` with `args`, if any.
    pub fn applicability(&self, traits: &Traits, args: &CheckArgs) -> Result<(), String> {
        self.need.check(self, traits, args)
    }

    pub fn evaluate(&self, ctx: &Context, args: &CheckArgs) -> Result<Evaluation, SuiteError> {
        self.applicability(&ctx.traits(), args).map_err(SuiteError::NotApplicable)?;
        (self.eval)(ctx, args)
    }
}

/// Runs one case on one subject.
pub fn check_inequality(id: &str, item: &CorpusItem, args: &CheckArgs, exact: Exact) -> Result<VerificationReport, SuiteError> {
    let case = case(id).ok_or_else(|| SuiteError::UnknownCase(id.to_string()))?;
    let ctx = Context::new(item, exact);
    check_in_context(case, &ctx, args)
}

pub fn check_in_context(case: &InequalityCase, ctx: &Context, args: &CheckArgs) -> Result<VerificationReport, SuiteError> {
    let ev = case.evaluate(ctx, args)?;
    Ok(make_report(case, ctx.item, args, ev))
}

fn make_report(case: &InequalityCase, item: &CorpusItem, args: &CheckArgs, ev: Evaluation) -> VerificationReport {
    let (m, n) = item.dims();
    let vacuous = ev.shape.is_vacuous();
    let min_constant = ev.shape.minimal_constant();
    let mut fitted = false;
    let constant = if ev.shape.depends_on_constant() {
        match (args.constant, case.mode, ev.constant) {
            (Some(c), _, _) => Some(c),
            (None, CaseMode::ExactConstant, Some(c)) => Some(c),
            _ => {
                fitted = true;
                min_constant
            }
        }
    } else {
        ev.constant
    };
    let c_eval = constant.unwrap_or(1.0);
    let (lhs, rhs) = if fitted && !c_eval.is_finite() {
        ev.shape.sides(1.0)
    } else {
        ev.shape.sides(c_eval)
    };
    let pass = if vacuous {
        true
    } else if let Shape::Equal { .. } = ev.shape {
        (lhs - rhs).abs() <= PASS_TOL * lhs.abs().max(rhs.abs())
    } else if fitted {
        c_eval.is_finite()
    } else {
        lhs <= rhs * (1.0 + PASS_TOL)
    };
    let ratio = (!vacuous && rhs != 0.0).then(|| lhs / rhs);
    let q = ev.level.as_ref().map(|l| match l {
        Level::Fixed(q) => *q,
        Level::OfConstant(f) => f(c_eval),
    });
    VerificationReport {
        case: case.id.to_string(),
        instance: item.id.clone(),
        m,
        n,
        p: args.p,
        r: args.r,
        aux: args.aux,
        aux_name: case.aux.map(|a| a.to_string()),
        mode: case.mode,
        side: case.side,
        lhs,
        rhs,
        constant,
        min_constant,
        fitted,
        ratio,
        pass,
        vacuous,
        q,
        terms: ev.terms,
        note: ev.note,
    }
}

/// Smallest constant under which the case holds on every non-vacuous member
/// of the corpus.
pub fn fit_constant(id: &str, corpus: &[CorpusItem], args: &CheckArgs, exact: Exact) -> Result<f64, SuiteError> {
    let case = case(id).ok_or_else(|| SuiteError::UnknownCase(id.to_string()))?;
    if corpus.is_empty() {
        return Err(SuiteError::EmptyCorpus);
    }
    let per_item = par::map_slice(corpus, |item| -> Result<Option<f64>, SuiteError> {
        let ctx = Context::new(item, exact);
        let ev = case.evaluate(&ctx, args)?;
        if ev.shape.is_vacuous() {
            return Ok(None);
        }
        match ev.shape.minimal_constant() {
            Some(c) if c.is_finite() => Ok(Some(c)),
            Some(_) => Err(SuiteError::Unbounded {
                case: id.to_string(),
                instance: item.id.clone(),
            }),
            None => Err(SuiteError::NotApplicable(format!("{id} has no constant to fit"))),
        }
    });
    let mut best: Option<f64> = None;
    for r in per_item {
        if let Some(c) = r? {
            best = Some(best.map_or(c, |b| b.max(c)));
        }
    }
    best.ok_or(SuiteError::NoBindingInstance)
}

/// Parameter grids for [`run_suite`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Grids {
    pub p: Vec<f64>,
    pub r: Vec<f64>,
    pub x: Vec<f64>,
    pub alpha: Vec<f64>,
    pub lambda: Vec<f64>,
}

impl Default for Grids {
    fn default() -> Self {
        Self {
            p: vec![0.5, 1.0, 1.25, 2.0, 3.0, 4.0],
            r: vec![0.25, 0.5, 1.0, 2.0],
            x: vec![0.1, 0.2, 0.5, 1.0, 2.0, 5.0],
            alpha: vec![0.0, 1.0, 2.0, 3.0, 4.0],
            lambda: vec![0.25, 0.5, 0.75],
        }
    }
}

/// Every parameter combination a case runs at under `grids`.
pub fn case_args(case: &InequalityCase, grids: &Grids, constant: Option<f64>) -> Vec<CheckArgs> {
    let aux_grid: Vec<Option<f64>> = match case.aux {
        None => vec![None],
        Some(AuxParam::X) => grids.x.iter().copied().map(Some).collect(),
        Some(AuxParam::Alpha) => grids.alpha.iter().copied().map(Some).collect(),
        Some(AuxParam::Lambda) => grids.lambda.iter().copied().map(Some).collect(),
    };
    let p_grid: Vec<Option<f64>> = if case.need.uses_p() {
        grids.p.iter().copied().map(Some).collect()
    } else {
        vec![None]
    };
    let mut out = Vec::new();
    for &p in &p_grid {
        let r_grid: Vec<Option<f64>> = if case.uses_r {
            grids.r.iter().copied().filter(|&r| p.is_none_or(|p| r < p)).map(Some).collect()
        } else {
            vec![None]
        };
        for &r in &r_grid {
            for &aux in &aux_grid {
                out.push(CheckArgs { p, r, aux, constant });
            }
        }
    }
    out
}

/// A combination that was applicable but could not be evaluated exactly.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Skipped {
    pub case: String,
    pub instance: String,
    pub args: CheckArgs,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SuiteRun {
    pub reports: Vec<VerificationReport>,
    pub skipped: Vec<Skipped>,
}

/// Reports for every applicable (case, item, parameters) combination, in
/// case order, then corpus order, then parameter order. Combinations whose
/// enumeration exceeds the cap are listed as skipped.
pub fn run_suite(corpus: &[CorpusItem], filter: &[String], grids: &Grids, constant: Option<f64>, exact: Exact) -> Result<SuiteRun, SuiteError> {
    let selected: Vec<&InequalityCase> = if filter.is_empty() {
        registry().iter().collect()
    } else {
        filter
            .iter()
            .map(|id| case(id).ok_or_else(|| SuiteError::UnknownCase(id.clone())))
            .collect::<Result<_, _>>()?
    };
    let jobs: Vec<(&InequalityCase, &CorpusItem)> = selected
        .iter()
        .flat_map(|c| corpus.iter().map(move |item| (*c, item)))
        .collect();
    let results = par::map_slice(&jobs, |(case, item)| -> Result<SuiteRun, SuiteError> {
        let ctx = Context::new(item, exact);
        let traits = ctx.traits();
        let mut out = SuiteRun::default();
        for args in case_args(case, grids, constant) {
            if case.applicability(&traits, &args).is_err() {
                continue;
            }
            match check_in_context(case, &ctx, &args) {
                Ok(report) => out.reports.push(report),
                Err(e @ SuiteError::Exact(ExactError::Infeasible { .. })) => out.skipped.push(Skipped {
                    case: case.id.to_string(),
                    instance: item.id.clone(),
                    args,
                    reason: e.to_string(),
                }),
                Err(e) => return Err(e),
            }
        }
        Ok(out)
    });
    let mut run = SuiteRun::default();
    for r in results {
        let r = r?;
        run.reports.extend(r.reports);
        run.skipped.extend(r.skipped);
    }
    Ok(run)
}

/// Generated corpus: every family × m × n × atom count × seed.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusSpec {
    pub families: Vec<Family>,
    pub m: Vec<usize>,
    pub n: Vec<usize>,
    pub atoms: Vec<usize>,
    pub seeds: std::ops::Range<u64>,
}

impl CorpusSpec {
    /// Instances whose enumeration exceeds `exact.cap` are left out.
    pub fn generate(&self, exact: Exact) -> Result<Vec<CorpusItem>, SuiteError> {
        let mut out = Vec::new();
        for &family in &self.families {
            for &m in &self.m {
                for &n in &self.n {
                    for &atoms in &self.atoms {
                        for seed in self.seeds.clone() {
                            let inst = generate_instance(family, m, n, atoms, seed)?;
                            if inst.config_count() > exact.cap {
                                continue;
                            }
                            let id = format!("{family}-m{m}-n{n}-a{atoms}-s{seed}");
                            out.push(CorpusItem::instance(id, inst));
                        }
                    }
                }
            }
        }
        Ok(out)
    }
}
