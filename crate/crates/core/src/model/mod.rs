//! Discrete probability models, kernel tensors and U-statistic instances.
//!
//! An instance is an order `m`, an index range `n`, an `m x n` grid of
//! finite laws (slot `j`, index `i`) and one kernel table per multi-index
//! `i in {0..n}^m`. The kernel for `i` is tabulated over the atoms of the laws
//! `(0, i_0), ..., (m-1, i_{m-1})`.
//!
//! Indices are zero-based in the API. The JSON file format keeps kernel
//! multi-indices one-based.

mod generate;
mod io;
mod table;

pub use generate::{generate_instance, rademacher_chaos, sum_instance, Family};
pub use io::ParseError;
pub use table::Table;
pub(crate) use table::increment as increment_digits;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default absolute tolerance for canonicality checks.
pub const DEFAULT_CANONICAL_TOL: f64 = 1e-10;
/// Probabilities of a law must sum to one within this absolute tolerance.
pub const PROB_SUM_TOL: f64 = 1e-12;
/// Tolerance for symmetry and zero-diagonal checks on undecoupled kernels.
pub const SYMMETRY_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid law: {0}")]
    InvalidLaw(String),
    #[error("unknown family `{0}`")]
    UnknownFamily(String),
    #[error("atom count must be at least 2, got {0}")]
    TooFewAtoms(usize),
    #[error("instance violates its invariants: {}", join_violations(.0))]
    Violations(Vec<Violation>),
    #[error("kernel is not symmetric at index {0:?}")]
    Asymmetric(Vec<usize>),
    #[error("kernel with repeated indices {0:?} is not identically zero")]
    NonzeroDiagonal(Vec<usize>),
    #[error("laws differ across slots for variable {0}")]
    LawsDiffer(usize),
    #[error("{0}")]
    Unsupported(String),
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

/// One failed invariant, located by a path into the instance file layout.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub path: String,
    pub message: String,
}

impl Violation {
    fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

/// Finite law of one coordinate variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteDistribution {
    atoms: Vec<f64>,
    probs: Vec<f64>,
}

impl DiscreteDistribution {
    /// Validated constructor. Zero-mass atoms are dropped.
    pub fn new(atoms: Vec<f64>, probs: Vec<f64>) -> Result<Self, ModelError> {
        let law = Self::from_raw(atoms, probs).without_null_atoms();
        match law.problems().into_iter().next() {
            None => Ok(law),
            Some(msg) => Err(ModelError::InvalidLaw(msg)),
        }
    }

    /// Unchecked constructor used by parsers; pair with [`validate_instance`].
    pub fn from_raw(atoms: Vec<f64>, probs: Vec<f64>) -> Self {
        Self { atoms, probs }
    }

    pub fn uniform(atoms: Vec<f64>) -> Result<Self, ModelError> {
        let k = atoms.len();
        Self::new(atoms, vec![1.0 / k as f64; k])
    }

    pub fn point_mass(value: f64) -> Self {
        Self {
            atoms: vec![value],
            probs: vec![1.0],
        }
    }

    pub fn rademacher() -> Self {
        Self {
            atoms: vec![-1.0, 1.0],
            probs: vec![0.5, 0.5],
        }
    }

    /// `B - q` for `B ~ Bernoulli(q)`: atoms `{-q, 1-q}` with probabilities `{1-q, q}`.
    pub fn centered_bernoulli(q: f64) -> Result<Self, ModelError> {
        Self::new(vec![-q, 1.0 - q], vec![1.0 - q, q])
    }

    pub fn atoms(&self) -> &[f64] {
        &self.atoms
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn mean(&self) -> f64 {
        crate::numeric::compensated_sum(self.atoms.iter().zip(&self.probs).map(|(a, p)| a * p))
    }

    /// Indices of atoms carrying positive mass.
    fn live_indices(&self) -> Vec<usize> {
        (0..self.probs.len()).filter(|&k| self.probs[k] != 0.0).collect()
    }

    fn without_null_atoms(self) -> Self {
        if self.probs.iter().all(|&p| p != 0.0) || self.atoms.len() != self.probs.len() {
            return self;
        }
        let keep = self.live_indices();
        Self {
            atoms: keep.iter().map(|&k| self.atoms[k]).collect(),
            probs: keep.iter().map(|&k| self.probs[k]).collect(),
        }
    }

    /// Invariant failures, as plain messages.
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.atoms.len() != self.probs.len() {
            out.push(format!(
                "atoms and probs lengths differ ({} vs {})",
                self.atoms.len(),
                self.probs.len()
            ));
            return out;
        }
        if self.atoms.is_empty() {
            out.push("law has no atoms".into());
            return out;
        }
        if self.atoms.iter().any(|a| !a.is_finite()) {
            out.push("non-finite atom".into());
        }
        if self.probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
            out.push("probability outside [0, 1]".into());
        }
        if self.probs.iter().any(|&p| p == 0.0) {
            out.push("zero-mass atom".into());
        }
        let total: f64 = crate::numeric::compensated_sum(self.probs.iter().copied());
        if !((total - 1.0).abs() <= PROB_SUM_TOL) {
            out.push(format!("probs sum ≠ 1 (sum = {total})"));
        }
        let mut sorted = self.atoms.clone();
        sorted.sort_by(f64::total_cmp);
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            out.push("atoms are not distinct".into());
        }
        out
    }

    /// Symmetric about zero: for every atom `a`, `-a` is an atom of equal mass.
    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.atoms.iter().zip(&self.probs).all(|(&a, &p)| {
            self.atoms
                .iter()
                .zip(&self.probs)
                .any(|(&b, &q)| (a + b).abs() <= tol && (p - q).abs() <= tol)
        })
    }

    /// Index of the mirrored atom `-a`, if the law is symmetric.
    pub(crate) fn mirror_index(&self, k: usize, tol: f64) -> Option<usize> {
        let a = self.atoms[k];
        (0..self.atoms.len()).find(|&l| (a + self.atoms[l]).abs() <= tol)
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.atoms.len() == other.atoms.len()
            && self.atoms.iter().zip(&other.atoms).all(|(a, b)| (a - b).abs() <= tol)
            && self.probs.iter().zip(&other.probs).all(|(a, b)| (a - b).abs() <= tol)
    }
}

/// The `m x n` table of coordinate laws, indexed `(slot, index)`.
#[derive(Debug, Clone, PartialEq)]
pub struct VariableGrid {
    m: usize,
    n: usize,
    laws: Vec<Vec<DiscreteDistribution>>,
}

impl VariableGrid {
    /// Unchecked; shape problems are reported by [`validate_instance`].
    pub fn new(m: usize, n: usize, laws: Vec<Vec<DiscreteDistribution>>) -> Self {
        Self { m, n, laws }
    }

    /// Same law for every slot and index.
    pub fn iid(m: usize, n: usize, law: DiscreteDistribution) -> Self {
        Self::new(m, n, vec![vec![law; n]; m])
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn law(&self, slot: usize, index: usize) -> &DiscreteDistribution {
        &self.laws[slot][index]
    }

    pub fn rows(&self) -> &[Vec<DiscreteDistribution>] {
        &self.laws
    }

    /// Atom counts `(law(0, i_0).len(), ..., law(m-1, i_{m-1}).len())`.
    pub fn shape_for(&self, multi_index: &[usize]) -> Vec<usize> {
        multi_index
            .iter()
            .enumerate()
            .map(|(j, &i)| self.laws[j][i].len())
            .collect()
    }
}

/// Kernel tables for every multi-index, stored in row-major multi-index order.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelTensor {
    m: usize,
    n: usize,
    tables: Vec<Table>,
}

impl KernelTensor {
    pub fn new(m: usize, n: usize, tables: Vec<Table>) -> Self {
        Self { m, n, tables }
    }

    /// Builds every table from `f(multi_index, atom_indices)`.
    pub fn from_fn(grid: &VariableGrid, mut f: impl FnMut(&[usize], &[usize]) -> f64) -> Self {
        let tables = multi_indices(grid.m, grid.n)
            .map(|mi| Table::from_fn(grid.shape_for(&mi), |atoms| f(&mi, atoms)))
            .collect();
        Self::new(grid.m, grid.n, tables)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn tables(&self) -> &[Table] {
        &self.tables
    }

    #[inline]
    pub fn table(&self, multi_index: &[usize]) -> &Table {
        &self.tables[flat_index(multi_index, self.n)]
    }

    #[inline]
    pub fn table_flat(&self, flat: usize) -> &Table {
        &self.tables[flat]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64 + Copy) -> Self {
        Self::new(self.m, self.n, self.tables.iter().map(|t| t.map(f)).collect())
    }
}

/// Flat position of a multi-index in `{0..n}^m`, first slot most significant.
#[inline]
pub fn flat_index(multi_index: &[usize], n: usize) -> usize {
    multi_index.iter().fold(0, |acc, &i| acc * n + i)
}

/// Inverse of [`flat_index`].
pub fn unflatten(mut flat: usize, m: usize, n: usize) -> Vec<usize> {
    let mut out = vec![0; m];
    for k in (0..m).rev() {
        out[k] = flat % n;
        flat /= n;
    }
    out
}

/// All multi-indices of `{0..n}^m` in row-major order.
pub fn multi_indices(m: usize, n: usize) -> impl Iterator<Item = Vec<usize>> {
    let count = n.checked_pow(m as u32).unwrap_or(0);
    (0..count).map(move |k| unflatten(k, m, n))
}

fn has_repeated(idx: &[usize]) -> bool {
    (0..idx.len()).any(|a| (a + 1..idx.len()).any(|b| idx[a] == idx[b]))
}

fn permutations(m: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for k in 0..used.len() {
            if !used[k] {
                used[k] = true;
                prefix.push(k);
                rec(prefix, used, out);
                prefix.pop();
                used[k] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; m], &mut out);
    out
}

/// How the coordinate variables enter the statistic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// `sum_i h_i(X^{(1)}_{i_1}, ..., X^{(m)}_{i_m})` with an independent sample per slot.
    Decoupled,
    /// `sum_i h_i(X_{i_1}, ..., X_{i_m})` over a single sample; kernels symmetric with zero diagonal.
    Undecoupled,
}

/// Declared structural properties, each verified at construction.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Flags {
    #[serde(default)]
    pub nonnegative: bool,
    #[serde(default)]
    pub canonical: bool,
    #[serde(default)]
    pub separately_symmetric: bool,
}

/// A generalized U-statistic over finite laws.
#[derive(Debug, Clone, PartialEq)]
pub struct UStatInstance {
    grid: VariableGrid,
    kernel: KernelTensor,
    mode: Mode,
    flags: Flags,
}

impl UStatInstance {
    /// Validated constructor. Zero-mass atoms are dropped (together with the
    /// matching kernel slices) before validation.
    pub fn new(
        grid: VariableGrid,
        kernel: KernelTensor,
        mode: Mode,
        flags: Flags,
    ) -> Result<Self, ModelError> {
        let inst = Self::from_parts(grid, kernel, mode, flags).drop_null_atoms();
        let violations = validate_instance(&inst);
        if violations.is_empty() {
            Ok(inst)
        } else {
            Err(ModelError::Violations(violations))
        }
    }

    /// Unchecked constructor.
    pub fn from_parts(grid: VariableGrid, kernel: KernelTensor, mode: Mode, flags: Flags) -> Self {
        Self {
            grid,
            kernel,
            mode,
            flags,
        }
    }

    pub fn m(&self) -> usize {
        self.grid.m
    }

    pub fn n(&self) -> usize {
        self.grid.n
    }

    pub fn grid(&self) -> &VariableGrid {
        &self.grid
    }

    pub fn kernel(&self) -> &KernelTensor {
        &self.kernel
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn flags(&self) -> Flags {
        self.flags
    }

    #[inline]
    pub fn law(&self, slot: usize, index: usize) -> &DiscreteDistribution {
        self.grid.law(slot, index)
    }

    /// Laws of the live coordinate variables: `m * n` for decoupled
    /// instances (slot-major), `n` for undecoupled ones.
    pub fn coordinate_laws(&self) -> Vec<&DiscreteDistribution> {
        match self.mode {
            Mode::Decoupled => self.grid.laws.iter().flatten().collect(),
            Mode::Undecoupled => self.grid.laws[0].iter().collect(),
        }
    }

    /// Number of joint atom configurations of the live coordinates
    /// (saturating).
    pub fn config_count(&self) -> u64 {
        self.coordinate_laws()
            .iter()
            .fold(1u64, |acc, l| acc.saturating_mul(l.len() as u64))
    }

    pub fn is_nonnegative(&self) -> bool {
        self.kernel.tables.iter().all(|t| t.data().iter().all(|&v| v >= 0.0))
    }

    pub fn is_canonical(&self, tol: f64) -> bool {
        is_canonical(self, tol)
    }

    /// Every law symmetric about zero and every kernel odd in each argument,
    /// so flipping the sign of one coordinate variable preserves its law and
    /// negates exactly the terms it enters.
    pub fn is_separately_symmetric(&self, tol: f64) -> bool {
        let rows = &self.grid.laws;
        if rows.iter().flatten().any(|l| !l.is_symmetric(tol)) {
            return false;
        }
        multi_indices(self.m(), self.n()).all(|mi| {
            let t = self.kernel.table(&mi);
            let mirrors: Vec<Vec<usize>> = mi
                .iter()
                .enumerate()
                .map(|(j, &i)| {
                    let law = self.law(j, i);
                    (0..law.len())
                        .map(|k| law.mirror_index(k, tol).unwrap_or(k))
                        .collect()
                })
                .collect();
            let mut idx = vec![0usize; t.rank()];
            (0..t.len()).all(|off| {
                let v = t.data()[off];
                let ok = (0..t.rank()).all(|axis| {
                    let mut flipped = idx.clone();
                    flipped[axis] = mirrors[axis][idx[axis]];
                    (t.get(&flipped) + v).abs() <= tol
                });
                table::increment(&mut idx, t.shape());
                ok
            })
        })
    }

    /// Same kernel table for every multi-index and one law shared by all coordinates.
    pub fn is_iid(&self, tol: f64) -> bool {
        let first_law = self.law(0, 0);
        let laws_same = self.grid.laws.iter().flatten().all(|l| l.approx_eq(first_law, tol));
        let first = &self.kernel.tables[0];
        laws_same
            && self.kernel.tables.iter().all(|t| {
                t.shape() == first.shape()
                    && t.data().iter().zip(first.data()).all(|(a, b)| (a - b).abs() <= tol)
            })
    }

    /// Copy with every kernel entry mapped through `f`; flags are recomputed
    /// conservatively (only nonnegativity is kept when it still holds).
    pub fn map_kernel(&self, f: impl Fn(f64) -> f64 + Copy) -> Self {
        let kernel = self.kernel.map(f);
        let mut out = Self::from_parts(self.grid.clone(), kernel, self.mode, Flags::default());
        out.flags.nonnegative = self.flags.nonnegative && out.is_nonnegative();
        out
    }

    /// Kernels multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        let mut out = self.map_kernel(move |v| c * v);
        if c > 0.0 {
            out.flags = self.flags;
        }
        out
    }

    /// Relabels the index set by `perm` (index `i` becomes `perm[i]`).
    pub fn relabel(&self, perm: &[usize]) -> Self {
        let n = self.n();
        let mut inverse = vec![0; n];
        for (i, &p) in perm.iter().enumerate() {
            inverse[p] = i;
        }
        let laws = self
            .grid
            .laws
            .iter()
            .map(|row| (0..n).map(|k| row[inverse[k]].clone()).collect())
            .collect();
        let tables = multi_indices(self.m(), n)
            .map(|mi| {
                let src: Vec<usize> = mi.iter().map(|&k| inverse[k]).collect();
                self.kernel.table(&src).clone()
            })
            .collect();
        Self::from_parts(
            VariableGrid::new(self.m(), n, laws),
            KernelTensor::new(self.m(), n, tables),
            self.mode,
            self.flags,
        )
    }

    pub fn with_flags(mut self, flags: Flags) -> Result<Self, ModelError> {
        self.flags = flags;
        let violations = validate_instance(&self);
        if violations.is_empty() {
            Ok(self)
        } else {
            Err(ModelError::Violations(violations))
        }
    }

    /// Structural flags computed from the data rather than declared.
    pub fn detected_flags(&self, tol: f64) -> Flags {
        Flags {
            nonnegative: self.is_nonnegative(),
            canonical: self.is_canonical(tol),
            separately_symmetric: self.is_separately_symmetric(tol),
        }
    }

    fn drop_null_atoms(mut self) -> Self {
        let structurally_ok = self.grid.laws.len() == self.grid.m
            && self.grid.laws.iter().all(|r| r.len() == self.grid.n)
            && self.grid.laws.iter().flatten().all(|l| l.atoms.len() == l.probs.len())
            && self.kernel.tables.len() == self.grid.n.pow(self.grid.m as u32);
        let has_null = self.grid.laws.iter().flatten().any(|l| l.probs.contains(&0.0));
        if !structurally_ok || !has_null {
            return self;
        }
        let keeps: Vec<Vec<Vec<usize>>> = self
            .grid
            .laws
            .iter()
            .map(|row| row.iter().map(DiscreteDistribution::live_indices).collect())
            .collect();
        let (m, n) = (self.grid.m, self.grid.n);
        let tables: Vec<Table> = multi_indices(m, n)
            .zip(&self.kernel.tables)
            .map(|(mi, t)| {
                if t.shape() != self.grid.shape_for(&mi).as_slice() {
                    return t.clone();
                }
                let keep: Vec<Vec<usize>> = mi.iter().enumerate().map(|(j, &i)| keeps[j][i].clone()).collect();
                t.select(&keep)
            })
            .collect();
        self.kernel = KernelTensor::new(m, n, tables);
        for row in self.grid.laws.iter_mut() {
            for law in row.iter_mut() {
                *law = law.clone().without_null_atoms();
            }
        }
        self
    }
}

/// Every invariant violation, located by path. Empty iff the instance is well formed.
pub fn validate_instance(inst: &UStatInstance) -> Vec<Violation> {
    let mut out = Vec::new();
    let (m, n) = (inst.grid.m, inst.grid.n);
    if m == 0 {
        out.push(Violation::new("m", "order must be positive"));
    }
    if n == 0 {
        out.push(Violation::new("n", "index range must be positive"));
    }
    if inst.kernel.m != m || inst.kernel.n != n {
        out.push(Violation::new("kernels", "kernel dimensions differ from the grid"));
    }
    if !out.is_empty() {
        return out;
    }
    if inst.grid.laws.len() != m {
        out.push(Violation::new(
            "variables",
            format!("expected {m} slots, found {}", inst.grid.laws.len()),
        ));
        return out;
    }
    for (j, row) in inst.grid.laws.iter().enumerate() {
        if row.len() != n {
            out.push(Violation::new(
                format!("variables[{j}]"),
                format!("expected {n} laws, found {}", row.len()),
            ));
            continue;
        }
        for (i, law) in row.iter().enumerate() {
            for msg in law.problems() {
                let field = if msg.contains("atom") && !msg.contains("mass") {
                    "atoms"
                } else {
                    "probs"
                };
                out.push(Violation::new(format!("variables[{j}][{i}].{field}"), msg));
            }
        }
    }
    if !out.is_empty() {
        return out;
    }
    let expected = n.pow(m as u32);
    if inst.kernel.tables.len() != expected {
        out.push(Violation::new(
            "kernels",
            format!("expected {expected} kernel tables, found {}", inst.kernel.tables.len()),
        ));
        return out;
    }
    for (flat, t) in inst.kernel.tables.iter().enumerate() {
        let mi = unflatten(flat, m, n);
        let shape = inst.grid.shape_for(&mi);
        if t.shape() != shape.as_slice() {
            out.push(Violation::new(
                format!("kernels[{}]", one_based(&mi)),
                format!("table shape {:?} does not match atom counts {:?}", t.shape(), shape),
            ));
        } else if t.data().iter().any(|v| !v.is_finite()) {
            out.push(Violation::new(format!("kernels[{}]", one_based(&mi)), "non-finite entry"));
        }
    }
    if !out.is_empty() {
        return out;
    }

    if inst.mode == Mode::Undecoupled {
        out.extend(undecoupled_violations(inst));
    }
    let flags = inst.flags;
    if flags.nonnegative && !inst.is_nonnegative() {
        out.push(Violation::new("flags.nonnegative", "kernel has a negative entry"));
    }
    if flags.canonical && !inst.is_canonical(DEFAULT_CANONICAL_TOL) {
        out.push(Violation::new("flags.canonical", "kernel is not canonical"));
    }
    if flags.separately_symmetric && !inst.is_separately_symmetric(SYMMETRY_TOL) {
        out.push(Violation::new(
            "flags.separately_symmetric",
            "kernel is not separately symmetric",
        ));
    }
    out
}

fn one_based(mi: &[usize]) -> String {
    let parts: Vec<String> = mi.iter().map(|i| (i + 1).to_string()).collect();
    format!("({})", parts.join(","))
}

fn undecoupled_violations(inst: &UStatInstance) -> Vec<Violation> {
    let mut out = Vec::new();
    let (m, n) = (inst.m(), inst.n());
    for i in 0..n {
        let base = inst.law(0, i);
        if (1..m).any(|j| !inst.law(j, i).approx_eq(base, 0.0)) {
            out.push(Violation::new(
                format!("variables[*][{i}]"),
                "undecoupled laws differ across slots",
            ));
        }
    }
    if !out.is_empty() {
        return out;
    }
    let perms = permutations(m);
    for mi in multi_indices(m, n) {
        let t = inst.kernel.table(&mi);
        if has_repeated(&mi) {
            if t.max_abs() > SYMMETRY_TOL {
                out.push(Violation::new(
                    format!("kernels[{}]", one_based(&mi)),
                    "diagonal kernel nonzero",
                ));
            }
            continue;
        }
        for s in &perms {
            let permuted: Vec<usize> = s.iter().map(|&k| mi[k]).collect();
            let other = inst.kernel.table(&permuted);
            let expected = t.permute_axes(s);
            let bad = other
                .data()
                .iter()
                .zip(expected.data())
                .any(|(a, b)| (a - b).abs() > SYMMETRY_TOL);
            if bad {
                out.push(Violation::new(
                    format!("kernels[{}]", one_based(&mi)),
                    format!("kernel not symmetric under index permutation {:?}", s),
                ));
                break;
            }
        }
    }
    out
}

/// True iff every single-coordinate conditional expectation of every kernel
/// vanishes within `tol`.
pub fn is_canonical(inst: &UStatInstance, tol: f64) -> bool {
    multi_indices(inst.m(), inst.n()).all(|mi| {
        let t = inst.kernel.table(&mi);
        (0..inst.m()).all(|j| {
            t.expect_axis(j, inst.law(j, mi[j]).probs())
                .data()
                .iter()
                .all(|v| v.abs() <= tol)
        })
    })
}

/// Applies `prod_j (I - E_j)` to every kernel table.
pub fn hoeffding_projection(inst: &UStatInstance) -> UStatInstance {
    let tables = multi_indices(inst.m(), inst.n())
        .map(|mi| {
            let mut t = inst.kernel.table(&mi).clone();
            for (j, &i) in mi.iter().enumerate() {
                t.center_axis(j, inst.law(j, i).probs());
            }
            t
        })
        .collect();
    let mut out = UStatInstance::from_parts(
        inst.grid.clone(),
        KernelTensor::new(inst.m(), inst.n(), tables),
        inst.mode,
        Flags::default(),
    );
    out.flags.canonical = true;
    out
}

/// Converts a decoupled instance with symmetric zero-diagonal kernels and
/// slot-independent laws into the undecoupled statistic over `X_1..X_n`.
pub fn undecouple(inst: &UStatInstance) -> Result<UStatInstance, ModelError> {
    let (m, n) = (inst.m(), inst.n());
    for i in 0..n {
        if (1..m).any(|j| !inst.law(j, i).approx_eq(inst.law(0, i), 0.0)) {
            return Err(ModelError::LawsDiffer(i));
        }
    }
    let perms = permutations(m);
    for mi in multi_indices(m, n) {
        let t = inst.kernel.table(&mi);
        if has_repeated(&mi) {
            if t.max_abs() > SYMMETRY_TOL {
                return Err(ModelError::NonzeroDiagonal(mi));
            }
            continue;
        }
        for s in &perms {
            let permuted: Vec<usize> = s.iter().map(|&k| mi[k]).collect();
            let expected = t.permute_axes(s);
            let other = inst.kernel.table(&permuted);
            if other
                .data()
                .iter()
                .zip(expected.data())
                .any(|(a, b)| (a - b).abs() > SYMMETRY_TOL)
            {
                return Err(ModelError::Asymmetric(mi));
            }
        }
    }
    let mut out = inst.clone();
    out.mode = Mode::Undecoupled;
    Ok(out)
}

/// The decoupled counterpart of an instance: same kernels, an independent
/// copy of the sample for every slot.
pub fn decouple(inst: &UStatInstance) -> UStatInstance {
    let mut out = inst.clone();
    out.mode = Mode::Decoupled;
    out
}
