//! Command-line front end. Every number printed comes straight from a library
//! call; this module only parses flags, loads files and formats output.

use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::bounds::{abcd_params_with, delta0, quantile_t0, sum_params, v0, AbcdOptions, BoundParams, BoundsError, ExpForm};
use crate::exact::{moment, Exact, ExactError, FiniteDistribution, MomentKind, DEFAULT_CAP};
use crate::mc::{default_grid, empirical_tail, sample_ustat, tail_vs_bound, McError, SimulationReport, Source};
use crate::model::{generate_instance, Family, ParseError, UStatInstance};
use crate::par;
use crate::suite::{case, case_args, fit_constant, run_suite, summarize, write_csv, write_jsonl, AuxParam, CheckArgs, Context, CorpusItem, CorpusSpec, Grids, SuiteError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "ustat", version, about = "Exact and Monte-Carlo checks of moment and tail inequalities for U-statistics")]
pub struct Cli {
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Largest number of configurations an exact enumeration may visit.
    #[arg(long, global = true, default_value_t = DEFAULT_CAP)]
    pub cap: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a generated instance.
    Gen(GenArgs),
    /// Print bound parameters and quantiles of one instance.
    Bounds(BoundsArgs),
    /// Check inequalities over a corpus and write reports.
    Verify(VerifyArgs),
    /// Print the smallest constant making one inequality hold over a corpus.
    Fit(FitArgs),
    /// Sample a statistic and write its empirical tail curve.
    Simulate(SimulateArgs),
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long)]
    pub family: Family,
    #[arg(long)]
    pub m: usize,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 2)]
    pub atoms: usize,
    #[arg(long)]
    pub seed: u64,
    #[arg(short = 'o', long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    pub input: PathBuf,
    /// Level of the quantile `t0 = inf{t : P(U > t) <= q}`.
    #[arg(long, default_value_t = 0.5)]
    pub q: f64,
    /// Also print `E|U|^p`.
    #[arg(long)]
    pub p: Option<f64>,
    /// Take the operator norm over centered functions only.
    #[arg(long = "centered-norm")]
    pub centered: bool,
}

/// Instance files and/or a generated corpus.
#[derive(Debug, Args)]
pub struct CorpusArgs {
    pub inputs: Vec<PathBuf>,
    #[arg(long = "family")]
    pub families: Vec<Family>,
    #[arg(long)]
    pub m: Vec<usize>,
    #[arg(long)]
    pub n: Vec<usize>,
    #[arg(long)]
    pub atoms: Vec<usize>,
    /// Seed range `a..b` for the generated corpus.
    #[arg(long, value_parser = parse_range)]
    pub seeds: Option<std::ops::Range<u64>>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    /// Inequality ids; all of them when absent.
    #[arg(long)]
    pub ineq: Vec<String>,
    #[arg(long)]
    pub p: Vec<f64>,
    #[arg(long)]
    pub r: Vec<f64>,
    #[arg(long)]
    pub x: Vec<f64>,
    #[arg(long)]
    pub alpha: Vec<f64>,
    #[arg(long)]
    pub lambda: Vec<f64>,
    /// Constant for cases without an explicit one; fitted per check otherwise.
    #[arg(long)]
    pub constant: Option<f64>,
    /// JSON-lines report; standard output when neither report path is given.
    #[arg(long)]
    pub jsonl: Option<PathBuf>,
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[arg(long)]
    pub ineq: String,
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub r: Option<f64>,
    #[arg(long)]
    pub x: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Instance file to sample.
    #[arg(long, conflicts_with_all = ["coeffs", "bernoulli_product"])]
    pub input: Option<PathBuf>,
    /// JSON matrix of coefficients `x_ij` for `sum x_ij g_i g'_j`.
    #[arg(long, conflicts_with = "bernoulli_product")]
    pub coeffs: Option<PathBuf>,
    /// `n` for the product of two centered Binomial(n, 1/n) variables.
    #[arg(long)]
    pub bernoulli_product: Option<usize>,
    #[arg(long, default_value_t = 100_000)]
    pub reps: u64,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.95)]
    pub confidence: f64,
    /// Comma-separated thresholds; log-spaced over the sample when absent.
    #[arg(long, value_delimiter = ',')]
    pub grid: Vec<f64>,
    /// Bound to compare against.
    #[arg(long)]
    pub form: Option<ExpForm>,
    /// Constant of the bound; fitted when absent.
    #[arg(long, requires = "form")]
    pub constant: Option<f64>,
    #[arg(short = 'o', long)]
    pub output: Option<PathBuf>,
}

fn parse_range(s: &str) -> Result<std::ops::Range<u64>, String> {
    let (a, b) = s.split_once("..").ok_or("expected a..b")?;
    let a: u64 = a.parse().map_err(|e| format!("{a}: {e}"))?;
    let b: u64 = b.parse().map_err(|e| format!("{b}: {e}"))?;
    if a >= b {
        return Err(format!("empty range {s}"));
    }
    Ok(a..b)
}

/// An error with the exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn usage(message: impl ToString) -> Self {
        Self { code: EXIT_USAGE, message: message.to_string() }
    }
}

impl From<SuiteError> for Failure {
    fn from(e: SuiteError) -> Self {
        let code = match e {
            SuiteError::Exact(ExactError::Infeasible { .. }) => EXIT_INFEASIBLE,
            _ => EXIT_USAGE,
        };
        Self { code, message: e.to_string() }
    }
}

impl From<ExactError> for Failure {
    fn from(e: ExactError) -> Self {
        SuiteError::from(e).into()
    }
}

impl From<BoundsError> for Failure {
    fn from(e: BoundsError) -> Self {
        Self::usage(e)
    }
}

impl From<ParseError> for Failure {
    fn from(e: ParseError) -> Self {
        Self::usage(e)
    }
}

impl From<McError> for Failure {
    fn from(e: McError) -> Self {
        Self::usage(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Self::usage(e)
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { err.write_all(text.as_bytes()) } else { out.write_all(text.as_bytes()) };
            return code;
        }
    };
    match execute(&cli, out, err) {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

pub fn execute(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, Failure> {
    let exact = Exact::new(cli.cap);
    let work = || -> Result<(i32, Vec<u8>, Vec<u8>), Failure> {
        let (mut o, mut e) = (Vec::new(), Vec::new());
        let code = match &cli.command {
            Command::Gen(a) => gen(a, &mut o)?,
            Command::Bounds(a) => bounds(a, exact, &mut o)?,
            Command::Verify(a) => verify(a, exact, &mut o, &mut e)?,
            Command::Fit(a) => fit(a, exact, &mut o)?,
            Command::Simulate(a) => simulate(a, &mut o)?,
        };
        Ok((code, o, e))
    };
    let (code, o, e) = match cli.threads {
        Some(t) => par::with_threads(t, work),
        None => work(),
    }?;
    out.write_all(&o)?;
    err.write_all(&e)?;
    Ok(code)
}

fn write_to(path: Option<&Path>, out: &mut dyn Write, bytes: &[u8]) -> Result<(), Failure> {
    match path {
        Some(p) => std::fs::write(p, bytes).map_err(|e| Failure::usage(format!("cannot write {}: {e}", p.display()))),
        None => Ok(out.write_all(bytes)?),
    }
}

fn gen(a: &GenArgs, out: &mut dyn Write) -> Result<i32, Failure> {
    let inst = generate_instance(a.family, a.m, a.n, a.atoms, a.seed).map_err(Failure::usage)?;
    let mut text = inst.to_json_string();
    text.push('\n');
    write_to(a.output.as_deref(), out, text.as_bytes())?;
    Ok(EXIT_OK)
}

/// Laws of the summands `h_i(X_i)` of an order-1 instance.
fn summand_laws(inst: &UStatInstance) -> Vec<FiniteDistribution> {
    (0..inst.n())
        .map(|i| {
            let t = inst.kernel().table(&[i]);
            FiniteDistribution::from_pairs(t.data().iter().copied().zip(inst.law(0, i).probs().iter().copied()).collect())
        })
        .collect()
}

fn params_json(p: &BoundParams) -> serde_json::Value {
    json!({ "A": p.a, "B": p.b, "C": p.c, "D": p.d })
}

fn bounds(a: &BoundsArgs, exact: Exact, out: &mut dyn Write) -> Result<i32, Failure> {
    let inst = UStatInstance::from_path(&a.input)?;
    let dist = exact.distribution(&inst)?;
    let mut doc = serde_json::Map::new();
    doc.insert("m".into(), json!(inst.m()));
    doc.insert("n".into(), json!(inst.n()));
    match inst.m() {
        1 => {
            if let Ok(p) = sum_params(&inst) {
                doc.insert("params".into(), params_json(&p));
            }
        }
        2 => {
            let opts = AbcdOptions { centered: a.centered, ..Default::default() };
            if let Ok(p) = abcd_params_with(&inst, opts) {
                doc.insert("params".into(), params_json(&p));
            }
        }
        _ => {}
    }
    doc.insert("q".into(), json!(a.q));
    doc.insert("t0".into(), json!(quantile_t0(&dist, a.q)?));
    doc.insert("t0_abs".into(), json!(quantile_t0(&dist.abs(), a.q)?));
    if inst.m() == 1 {
        let laws = summand_laws(&inst);
        if let Ok(d) = delta0(&laws) {
            doc.insert("delta0".into(), json!(d));
        }
        if let Ok(v) = v0(&laws, None) {
            doc.insert("v0".into(), json!(v));
        }
    }
    if let Some(p) = a.p {
        doc.insert("p".into(), json!(p));
        doc.insert("moment".into(), json!(moment(&dist, p, MomentKind::Absolute)?));
    }
    let mut text = serde_json::to_string_pretty(&serde_json::Value::Object(doc)).expect("json");
    text.push('\n');
    out.write_all(text.as_bytes())?;
    Ok(EXIT_OK)
}

fn load_corpus(a: &CorpusArgs, exact: Exact) -> Result<Vec<CorpusItem>, Failure> {
    let mut items = Vec::new();
    for path in &a.inputs {
        let inst = UStatInstance::from_path(path)?;
        items.push(CorpusItem::instance(path.display().to_string(), inst));
    }
    let generated = !a.families.is_empty() || !a.m.is_empty() || !a.n.is_empty() || a.seeds.is_some();
    if generated {
        let (Some(seeds), false, false) = (a.seeds.clone(), a.m.is_empty(), a.n.is_empty()) else {
            return Err(Failure::usage("a generated corpus needs --m, --n and --seeds"));
        };
        let spec = CorpusSpec {
            families: if a.families.is_empty() { Family::ALL.to_vec() } else { a.families.clone() },
            m: a.m.clone(),
            n: a.n.clone(),
            atoms: if a.atoms.is_empty() { vec![2] } else { a.atoms.clone() },
            seeds,
        };
        items.extend(spec.generate(exact)?);
    }
    if items.is_empty() {
        return Err(Failure::usage("no instances: give instance files or a generated corpus"));
    }
    Ok(items)
}

fn grids(a: &VerifyArgs) -> Grids {
    let mut g = Grids::default();
    for (dst, src) in [(&mut g.p, &a.p), (&mut g.r, &a.r), (&mut g.x, &a.x), (&mut g.alpha, &a.alpha), (&mut g.lambda, &a.lambda)] {
        if !src.is_empty() {
            dst.clone_from(src);
        }
    }
    g
}

fn verify(a: &VerifyArgs, exact: Exact, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, Failure> {
    let corpus = load_corpus(&a.corpus, exact)?;
    let grids = grids(a);
    // Explicitly requested cases must apply to every instance at some parameter.
    for id in &a.ineq {
        let c = case(id).ok_or_else(|| SuiteError::UnknownCase(id.clone()))?;
        let args = case_args(c, &grids, a.constant);
        for item in &corpus {
            let traits = Context::new(item, exact).traits();
            let reasons: Vec<String> = args.iter().filter_map(|x| c.applicability(&traits, x).err()).collect();
            if reasons.len() == args.len() {
                let why = reasons.into_iter().next().unwrap_or_else(|| "no parameter combination".into());
                return Err(Failure::usage(format!("{id} does not apply to {}: {why}", item.id)));
            }
        }
    }
    let run = run_suite(&corpus, &a.ineq, &grids, a.constant, exact)?;
    let mut jsonl = Vec::new();
    write_jsonl(&mut jsonl, &run.reports)?;
    if a.jsonl.is_none() && a.csv.is_none() {
        out.write_all(&jsonl)?;
    }
    if let Some(p) = &a.jsonl {
        write_to(Some(p), out, &jsonl)?;
    }
    if let Some(p) = &a.csv {
        let mut buf = Vec::new();
        write_csv(&mut buf, &run.reports)?;
        write_to(Some(p), out, &buf)?;
    }
    for s in summarize(&run.reports) {
        let max = s.max_ratio.map(|r| format!(" max_ratio={r}")).unwrap_or_default();
        writeln!(err, "{}: {}/{} passed, {} vacuous{max}", s.case, s.passed, s.checks, s.vacuous)?;
    }
    for s in &run.skipped {
        writeln!(err, "skipped {} on {}: {}", s.case, s.instance, s.reason)?;
    }
    let failed = run.reports.iter().any(|r| !r.vacuous && !r.pass);
    Ok(if !run.skipped.is_empty() {
        EXIT_INFEASIBLE
    } else if failed {
        EXIT_FAILED
    } else {
        EXIT_OK
    })
}

fn fit(a: &FitArgs, exact: Exact, out: &mut dyn Write) -> Result<i32, Failure> {
    let c = case(&a.ineq).ok_or_else(|| SuiteError::UnknownCase(a.ineq.clone()))?;
    let corpus = load_corpus(&a.corpus, exact)?;
    let aux = match c.aux {
        None => None,
        Some(AuxParam::X) => a.x,
        Some(AuxParam::Alpha) => a.alpha,
        Some(AuxParam::Lambda) => a.lambda,
    };
    let args = CheckArgs { p: a.p, r: a.r, aux, constant: None };
    let k = fit_constant(&a.ineq, &corpus, &args, exact)?;
    writeln!(out, "{k}")?;
    Ok(EXIT_OK)
}

fn simulate(a: &SimulateArgs, out: &mut dyn Write) -> Result<i32, Failure> {
    let (source, inst) = if let Some(path) = &a.input {
        let inst = UStatInstance::from_path(path)?;
        (Source::Instance(inst.clone()), Some(inst))
    } else if let Some(path) = &a.coeffs {
        let text = std::fs::read_to_string(path).map_err(|e| Failure::usage(format!("cannot read {}: {e}", path.display())))?;
        let coeffs: Vec<Vec<f64>> = serde_json::from_str(&text).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
        (Source::GaussianChaos { coeffs }, None)
    } else if let Some(n) = a.bernoulli_product {
        let inst = generate_instance(Family::BernoulliProduct, 2, n, 2, 0).map_err(Failure::usage)?;
        (Source::BernoulliProduct { n }, Some(inst))
    } else {
        return Err(Failure::usage("give one of --input, --coeffs or --bernoulli-product"));
    };
    let sample = sample_ustat(&source, a.reps, a.seed)?;
    let grid = if a.grid.is_empty() { default_grid(&sample)? } else { a.grid.clone() };
    let curve = empirical_tail(&sample, &grid, a.confidence)?;
    let comparison = match a.form {
        None => None,
        Some(form) => {
            let inst = inst.ok_or_else(|| Failure::usage("a bound comparison needs --input or --bernoulli-product"))?;
            let params = match inst.m() {
                1 => sum_params(&inst)?,
                _ => abcd_params_with(&inst, AbcdOptions::default())?,
            };
            Some(tail_vs_bound(&curve, &params, form, a.constant)?)
        }
    };
    let report = SimulationReport::new(sample, curve, comparison);
    let mut text = serde_json::to_string_pretty(&report).expect("json");
    text.push('\n');
    write_to(a.output.as_deref(), out, text.as_bytes())?;
    Ok(EXIT_OK)
}

/// Runs on the process arguments and standard streams.
pub fn main_exit_code() -> i32 {
    let stdout = io::stdout();
    let stderr = io::stderr();
    let mut out = BufWriter::new(stdout.lock());
    let mut err = stderr.lock();
    let code = run(std::env::args_os(), &mut out, &mut err);
    let _ = out.flush();
    code
}
