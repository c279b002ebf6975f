//! Subjects of checks and the per-subject cache of exact quantities.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::SuiteError;
use crate::bounds::TailTable;
use crate::exact::{
    moment, sup_distribution, Exact, FiniteDistribution, IndexSubset, MixedMomentQuery, MomentKind, ScoreClass,
};
use crate::model::{DiscreteDistribution, UStatInstance, DEFAULT_CANONICAL_TOL};

/// What a check is evaluated on.
#[derive(Debug, Clone, PartialEq)]
pub enum Subject {
    Instance(UStatInstance),
    /// A finite class of centered functions for the empirical-process cases.
    Class(ScoreClass),
}

/// A named member of a corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusItem {
    pub id: String,
    pub subject: Subject,
}

impl CorpusItem {
    pub fn instance(id: impl Into<String>, inst: UStatInstance) -> Self {
        Self {
            id: id.into(),
            subject: Subject::Instance(inst),
        }
    }

    pub fn class(id: impl Into<String>, class: ScoreClass) -> Self {
        Self {
            id: id.into(),
            subject: Subject::Class(class),
        }
    }

    /// `(m, n)` of an instance; `(1, number of variables)` for a class.
    pub fn dims(&self) -> (usize, usize) {
        match &self.subject {
            Subject::Instance(inst) => (inst.m(), inst.n()),
            Subject::Class(c) => (1, c.laws.len()),
        }
    }
}

/// Structural facts used by applicability predicates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Traits {
    pub is_class: bool,
    pub m: usize,
    pub n: usize,
    pub decoupled: bool,
    pub nonnegative: bool,
    pub canonical: bool,
    pub separately_symmetric: bool,
    pub iid: bool,
}

/// Lazily computed exact quantities for one subject.
pub struct Context<'a> {
    pub item: &'a CorpusItem,
    pub exact: Exact,
    traits: OnceLock<Traits>,
    dist: OnceLock<Result<FiniteDistribution, SuiteError>>,
    chaos: OnceLock<Result<FiniteDistribution, SuiteError>>,
    squares: OnceLock<UStatInstance>,
    square_dist: OnceLock<Result<FiniteDistribution, SuiteError>>,
    tails: OnceLock<Arc<TailTable>>,
    abs_tails: OnceLock<Arc<TailTable>>,
    mixed: Mutex<HashMap<(bool, u32, u64, u8, u64), f64>>,
}

impl<'a> Context<'a> {
    pub fn new(item: &'a CorpusItem, exact: Exact) -> Self {
        Self {
            item,
            exact,
            traits: OnceLock::new(),
            dist: OnceLock::new(),
            chaos: OnceLock::new(),
            squares: OnceLock::new(),
            square_dist: OnceLock::new(),
            tails: OnceLock::new(),
            abs_tails: OnceLock::new(),
            mixed: Mutex::new(HashMap::new()),
        }
    }

    pub fn traits(&self) -> Traits {
        *self.traits.get_or_init(|| match &self.item.subject {
            Subject::Instance(inst) => Traits {
                is_class: false,
                m: inst.m(),
                n: inst.n(),
                decoupled: inst.mode() == crate::model::Mode::Decoupled,
                nonnegative: inst.is_nonnegative(),
                canonical: inst.is_canonical(DEFAULT_CANONICAL_TOL),
                separately_symmetric: inst.is_separately_symmetric(DEFAULT_CANONICAL_TOL),
                iid: inst.is_iid(0.0),
            },
            Subject::Class(c) => Traits {
                is_class: true,
                m: 1,
                n: c.laws.len(),
                decoupled: true,
                nonnegative: false,
                canonical: false,
                separately_symmetric: false,
                iid: false,
            },
        })
    }

    pub fn inst(&self) -> Result<&'a UStatInstance, SuiteError> {
        match &self.item.subject {
            Subject::Instance(inst) => Ok(inst),
            Subject::Class(_) => Err(SuiteError::NotApplicable("case needs a U-statistic instance".into())),
        }
    }

    pub fn class(&self) -> Result<&'a ScoreClass, SuiteError> {
        match &self.item.subject {
            Subject::Class(c) => Ok(c),
            Subject::Instance(_) => Err(SuiteError::NotApplicable("case needs a function class".into())),
        }
    }

    /// Exact law of the statistic (of `S` for a class).
    pub fn dist(&self) -> Result<&FiniteDistribution, SuiteError> {
        self.dist
            .get_or_init(|| match &self.item.subject {
                Subject::Instance(inst) => self.exact.distribution(inst).map_err(SuiteError::from),
                Subject::Class(c) => sup_distribution(&self.exact, c).map_err(SuiteError::from),
            })
            .as_ref()
            .map_err(Clone::clone)
    }

    /// Tail table of the statistic, for repeated quantile queries.
    pub fn tails(&self) -> Result<Arc<TailTable>, SuiteError> {
        let dist = self.dist()?;
        Ok(self.tails.get_or_init(|| Arc::new(TailTable::new(dist))).clone())
    }

    /// Tail table of `|U|`.
    pub fn abs_tails(&self) -> Result<Arc<TailTable>, SuiteError> {
        let dist = self.dist()?;
        Ok(self.abs_tails.get_or_init(|| Arc::new(TailTable::new(&dist.abs()))).clone())
    }

    /// Law of the sign-randomized statistic.
    pub fn chaos_dist(&self) -> Result<&FiniteDistribution, SuiteError> {
        self.chaos
            .get_or_init(|| self.exact.chaos_distribution(self.inst()?).map_err(SuiteError::from))
            .as_ref()
            .map_err(Clone::clone)
    }

    /// `E|U|^p`.
    pub fn moment(&self, p: f64) -> Result<f64, SuiteError> {
        Ok(moment(self.dist()?, p, MomentKind::Absolute)?)
    }

    /// The instance with squared kernels.
    pub fn squares(&self) -> Result<&UStatInstance, SuiteError> {
        let inst = self.inst()?;
        Ok(self.squares.get_or_init(|| inst.map_kernel(|v| v * v)))
    }

    /// Law of `sum_i h_i^2`.
    pub fn square_dist(&self) -> Result<&FiniteDistribution, SuiteError> {
        self.square_dist
            .get_or_init(|| self.exact.distribution(self.squares()?).map_err(SuiteError::from))
            .as_ref()
            .map_err(Clone::clone)
    }

    /// Cached mixed moment of the instance (or of its squared kernels).
    pub fn mixed(&self, squared: bool, query: MixedMomentQuery) -> Result<f64, SuiteError> {
        let (form, r) = match query.form {
            crate::exact::MixedForm::Sum => (0u8, 0.0),
            crate::exact::MixedForm::Max => (1, 0.0),
            crate::exact::MixedForm::LrMax { r } => (2, r),
        };
        let key = (squared, query.subset.mask(), query.p.to_bits(), form, r.to_bits());
        if let Some(v) = self.mixed.lock().expect("cache lock").get(&key) {
            return Ok(*v);
        }
        let inst = if squared { self.squares()? } else { self.inst()? };
        let v = self.exact.mixed_moment(inst, &query.absolute())?;
        self.mixed.lock().expect("cache lock").insert(key, v);
        Ok(v)
    }

    /// Mixed moments for every subset, in mask order.
    pub fn mixed_all(&self, squared: bool, make: impl Fn(IndexSubset) -> MixedMomentQuery) -> Result<Vec<(IndexSubset, f64)>, SuiteError> {
        let m = self.inst()?.m();
        IndexSubset::all(m).map(|s| Ok((s, self.mixed(squared, make(s))?))).collect()
    }

    /// Laws of `xi_i = h_i(X_i)` for an order-1 instance.
    pub fn summand_laws(&self) -> Result<Vec<FiniteDistribution>, SuiteError> {
        let inst = self.inst()?;
        if inst.m() != 1 {
            return Err(SuiteError::NotApplicable(format!("case needs order 1, got order {}", inst.m())));
        }
        Ok((0..inst.n())
            .map(|i| {
                let t = inst.kernel().table(&[i]);
                let law = inst.law(0, i);
                FiniteDistribution::from_pairs(t.data().iter().copied().zip(law.probs().iter().copied()).collect())
            })
            .collect())
    }
}

/// Law of `max_i xi_i` for independent summands.
pub fn max_law(laws: &[FiniteDistribution]) -> FiniteDistribution {
    laws.iter()
        .cloned()
        .reduce(|a, b| a.max_independent(&b))
        .unwrap_or_else(|| FiniteDistribution::point_mass(0.0))
}

/// A random class of `members` centered functions of `vars` independent
/// binary variables with success probabilities in `[0.1, 0.9]`.
pub fn random_score_class(vars: usize, members: usize, seed: u64) -> ScoreClass {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let laws: Vec<DiscreteDistribution> = (0..vars)
        .map(|_| {
            let q: f64 = rng.random_range(0.1..0.9);
            DiscreteDistribution::new(vec![0.0, 1.0], vec![1.0 - q, q]).expect("valid Bernoulli law")
        })
        .collect();
    let functions = (0..members)
        .map(|_| {
            laws.iter()
                .map(|law| {
                    let raw: Vec<f64> = (0..law.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
                    let mean: f64 = raw.iter().zip(law.probs()).map(|(v, p)| v * p).sum();
                    raw.iter().map(|v| v - mean).collect()
                })
                .collect()
        })
        .collect();
    ScoreClass { laws, functions }
}
