//! Mixed moments over a subset `J` of the slots.
//!
//! For a subset `J` with complement `J'`:
//!
//! * sum form: `sum_{i_J} E_J ( sum_{i_J'} E_J' h_i )^p`
//! * max form: `E_J max_{i_J} ( sum_{i_J'} E_J' h_i )^p`
//! * lr form:  `E_J max_{i_J} ( E_J' |sum_{i_J'} h_i|^r )^{p/r}`
//!
//! `E_J` integrates over the coordinates of the slots in `J`. In the sum and
//! max forms the inner expectation is taken term by term before summing; in
//! the lr form the power `r` is applied to the inner sum first.

use std::fmt;

use serde::Serialize;

use super::{Exact, ExactError, MomentKind};
use crate::model::{multi_indices, Table, UStatInstance};
use crate::numeric::{moment_pow, NeumaierSum};

/// A subset of the slots `{0..m}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct IndexSubset {
    mask: u32,
    m: usize,
}

impl IndexSubset {
    pub fn empty(m: usize) -> Self {
        Self { mask: 0, m }
    }

    pub fn full(m: usize) -> Self {
        Self {
            mask: (1u32 << m) - 1,
            m,
        }
    }

    /// Subset from zero-based slot numbers.
    pub fn from_slots(m: usize, slots: &[usize]) -> Self {
        let mask = slots.iter().filter(|&&j| j < m).fold(0, |acc, &j| acc | 1 << j);
        Self { mask, m }
    }

    pub fn from_mask(m: usize, mask: u32) -> Self {
        Self {
            mask: mask & ((1u32 << m) - 1),
            m,
        }
    }

    /// All `2^m` subsets in mask order (the empty set first).
    pub fn all(m: usize) -> impl Iterator<Item = IndexSubset> {
        (0..1u32 << m).map(move |mask| Self { mask, m })
    }

    pub fn mask(&self) -> u32 {
        self.mask
    }

    pub fn order(&self) -> usize {
        self.m
    }

    pub fn contains(&self, slot: usize) -> bool {
        self.mask >> slot & 1 == 1
    }

    pub fn len(&self) -> usize {
        self.mask.count_ones() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.mask == 0
    }

    pub fn complement(&self) -> Self {
        Self::from_mask(self.m, !self.mask)
    }

    pub fn slots(&self) -> Vec<usize> {
        (0..self.m).filter(|&j| self.contains(j)).collect()
    }
}

impl fmt::Display for IndexSubset {
    /// One-based slot list, e.g. `{1,3}`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.slots().iter().map(|j| (j + 1).to_string()).collect();
        write!(f, "{{{}}}", parts.join(","))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum MixedForm {
    Sum,
    Max,
    LrMax { r: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixedMomentQuery {
    pub subset: IndexSubset,
    pub p: f64,
    pub form: MixedForm,
    /// Power semantics in the sum and max forms. The lr form always uses
    /// absolute values.
    pub kind: MomentKind,
}

impl MixedMomentQuery {
    pub fn sum(subset: IndexSubset, p: f64) -> Self {
        Self {
            subset,
            p,
            form: MixedForm::Sum,
            kind: MomentKind::Raw,
        }
    }

    pub fn max(subset: IndexSubset, p: f64) -> Self {
        Self {
            form: MixedForm::Max,
            ..Self::sum(subset, p)
        }
    }

    pub fn lr_max(subset: IndexSubset, p: f64, r: f64) -> Self {
        Self {
            form: MixedForm::LrMax { r },
            ..Self::sum(subset, p)
        }
    }

    pub fn absolute(mut self) -> Self {
        self.kind = MomentKind::Absolute;
        self
    }
}

pub(super) fn evaluate(ex: &Exact, inst: &UStatInstance, q: &MixedMomentQuery) -> Result<f64, ExactError> {
    if !(q.p > 0.0 && q.p.is_finite()) {
        return Err(ExactError::InvalidQuery(format!("p must be positive, got {}", q.p)));
    }
    if q.subset.order() != inst.m() {
        return Err(ExactError::InvalidQuery(format!(
            "subset of {} slots used with an order-{} instance",
            q.subset.order(),
            inst.m()
        )));
    }
    let layout = Layout::new(inst, q.subset);
    let (inner, power, absolute) = match q.form {
        MixedForm::Sum | MixedForm::Max => (conditional_sums(inst, &layout), q.p, q.kind == MomentKind::Absolute),
        MixedForm::LrMax { r } => {
            if !(r > 0.0 && r < q.p) {
                return Err(ExactError::InvalidQuery(format!("need 0 < r < p, got r = {r}, p = {}", q.p)));
            }
            (lr_inner(ex, inst, &layout, r)?, q.p / r, true)
        }
    };
    let mut powered = Vec::with_capacity(inner.len());
    for t in &inner {
        let mut data = Vec::with_capacity(t.len());
        for &v in t.data() {
            data.push(moment_pow(v, power, absolute).ok_or(ExactError::SignedPower { p: power })?);
        }
        powered.push(Table::new(t.shape().to_vec(), data).expect("same shape"));
    }
    match q.form {
        MixedForm::Sum => Ok(sum_outer(inst, &layout, &powered)),
        _ => max_outer(ex, inst, &layout, &powered),
    }
}

/// Index bookkeeping for one subset.
struct Layout {
    n: usize,
    inside: Vec<usize>,
    outside: Vec<usize>,
    /// Multi-indices over the inside slots, in flat order.
    inside_indices: Vec<Vec<usize>>,
    outside_indices: Vec<Vec<usize>>,
}

impl Layout {
    fn new(inst: &UStatInstance, subset: IndexSubset) -> Self {
        let n = inst.n();
        let inside = subset.slots();
        let outside = subset.complement().slots();
        Self {
            n,
            inside_indices: multi_indices(inside.len(), n).collect(),
            outside_indices: multi_indices(outside.len(), n).collect(),
            inside,
            outside,
        }
    }

    fn combine(&self, inside: &[usize], outside: &[usize]) -> Vec<usize> {
        let mut mi = vec![0; self.inside.len() + self.outside.len()];
        for (k, &j) in self.inside.iter().enumerate() {
            mi[j] = inside[k];
        }
        for (k, &j) in self.outside.iter().enumerate() {
            mi[j] = outside[k];
        }
        mi
    }

    fn inside_shape(&self, inst: &UStatInstance, i_in: &[usize]) -> Vec<usize> {
        self.inside
            .iter()
            .zip(i_in)
            .map(|(&j, &i)| inst.law(j, i).len())
            .collect()
    }

    /// Radices of every coordinate of the listed slots, slot-major.
    fn radices(&self, inst: &UStatInstance, slots: &[usize]) -> Vec<usize> {
        slots
            .iter()
            .flat_map(|&j| (0..self.n).map(move |i| inst.law(j, i).len()))
            .collect()
    }

    fn config_prob(&self, inst: &UStatInstance, slots: &[usize], digits: &[usize]) -> f64 {
        let mut prob = 1.0;
        for (k, &j) in slots.iter().enumerate() {
            for i in 0..self.n {
                prob *= inst.law(j, i).probs()[digits[k * self.n + i]];
            }
        }
        prob
    }
}

/// `g(i_J, a_J) = sum_{i_J'} E_J' h_i(a_J, .)`, one table per `i_J`.
fn conditional_sums(inst: &UStatInstance, layout: &Layout) -> Vec<Table> {
    let m = inst.m();
    let mut reduce = vec![true; m];
    for &j in &layout.inside {
        reduce[j] = false;
    }
    layout
        .inside_indices
        .iter()
        .map(|i_in| {
            let shape = layout.inside_shape(inst, i_in);
            let len: usize = shape.iter().product();
            let mut acc = vec![NeumaierSum::new(); len];
            for i_out in &layout.outside_indices {
                let mi = layout.combine(i_in, i_out);
                let probs: Vec<&[f64]> = (0..m).map(|j| inst.law(j, mi[j]).probs()).collect();
                let cond = inst.kernel().table(&mi).expect_axes(&reduce, &probs);
                for (a, &v) in acc.iter_mut().zip(cond.data()) {
                    a.add(v);
                }
            }
            Table::new(shape, acc.iter().map(NeumaierSum::value).collect()).expect("shape")
        })
        .collect()
}

/// `g(i_J, a_J) = E_J' |sum_{i_J'} h_i(a_J, .)|^r` over all coordinates of the slots outside `J`.
fn lr_inner(ex: &Exact, inst: &UStatInstance, layout: &Layout, r: f64) -> Result<Vec<Table>, ExactError> {
    let m = inst.m();
    let n = layout.n;
    let shapes: Vec<Vec<usize>> = layout
        .inside_indices
        .iter()
        .map(|i_in| layout.inside_shape(inst, i_in))
        .collect();
    // For each (i_J, i_J') the kernel table and its strides.
    let terms: Vec<Vec<(&[f64], Vec<usize>)>> = layout
        .inside_indices
        .iter()
        .map(|i_in| {
            layout
                .outside_indices
                .iter()
                .map(|i_out| {
                    let mi = layout.combine(i_in, i_out);
                    let shape = inst.grid().shape_for(&mi);
                    let mut strides = vec![1; m];
                    for j in (0..m.saturating_sub(1)).rev() {
                        strides[j] = strides[j + 1] * shape[j + 1];
                    }
                    (inst.kernel().table(&mi).data(), strides)
                })
                .collect()
        })
        .collect();
    let radices = layout.radices(inst, &layout.outside);
    let init = || -> Vec<Vec<NeumaierSum>> {
        shapes
            .iter()
            .map(|s| vec![NeumaierSum::new(); s.iter().product()])
            .collect()
    };
    let chunks = ex.enumerate(&radices, init, |acc, digits| {
        let prob = layout.config_prob(inst, &layout.outside, digits);
        for f in 0..layout.inside_indices.len() {
            let shape = &shapes[f];
            let mut a_in = vec![0usize; shape.len()];
            for entry in acc[f].iter_mut() {
                let mut s = NeumaierSum::new();
                for (t, (data, strides)) in terms[f].iter().enumerate() {
                    let i_out = &layout.outside_indices[t];
                    let mut off = 0;
                    for (k, &j) in layout.inside.iter().enumerate() {
                        off += a_in[k] * strides[j];
                    }
                    for (k, &j) in layout.outside.iter().enumerate() {
                        off += digits[k * n + i_out[k]] * strides[j];
                    }
                    s.add(data[off]);
                }
                entry.add(prob * crate::numeric::abs_pow(s.value(), r));
                crate::model::increment_digits(&mut a_in, shape);
            }
        }
    })?;
    let mut total = init();
    for chunk in &chunks {
        for (tf, cf) in total.iter_mut().zip(chunk) {
            for (t, c) in tf.iter_mut().zip(cf) {
                t.merge(c);
            }
        }
    }
    Ok(total
        .iter()
        .zip(shapes)
        .map(|(acc, shape)| Table::new(shape, acc.iter().map(NeumaierSum::value).collect()).expect("shape"))
        .collect())
}

/// `sum_{i_J} E_J g(i_J, .)`.
fn sum_outer(inst: &UStatInstance, layout: &Layout, powered: &[Table]) -> f64 {
    let mut total = NeumaierSum::new();
    for (f, i_in) in layout.inside_indices.iter().enumerate() {
        let t = &powered[f];
        let probs: Vec<&[f64]> = layout
            .inside
            .iter()
            .zip(i_in)
            .map(|(&j, &i)| inst.law(j, i).probs())
            .collect();
        let mut idx = vec![0usize; t.rank()];
        for &v in t.data() {
            let w: f64 = idx.iter().enumerate().map(|(k, &a)| probs[k][a]).product();
            total.add(w * v);
            crate::model::increment_digits(&mut idx, t.shape());
        }
    }
    total.value()
}

/// `E_J max_{i_J} g(i_J, .)` over all coordinates of the slots in `J`.
fn max_outer(ex: &Exact, inst: &UStatInstance, layout: &Layout, powered: &[Table]) -> Result<f64, ExactError> {
    let n = layout.n;
    let radices = layout.radices(inst, &layout.inside);
    let strides: Vec<Vec<usize>> = powered
        .iter()
        .map(|t| {
            let rank = t.rank();
            let mut s = vec![1; rank];
            for k in (0..rank.saturating_sub(1)).rev() {
                s[k] = s[k + 1] * t.shape()[k + 1];
            }
            s
        })
        .collect();
    let chunks = ex.enumerate(&radices, NeumaierSum::new, |acc, digits| {
        let prob = layout.config_prob(inst, &layout.inside, digits);
        let mut best = f64::NEG_INFINITY;
        for (f, i_in) in layout.inside_indices.iter().enumerate() {
            let mut off = 0;
            for (k, &i) in i_in.iter().enumerate() {
                off += digits[k * n + i] * strides[f][k];
            }
            best = best.max(powered[f].data()[off]);
        }
        acc.add(prob * best);
    })?;
    let mut total = NeumaierSum::new();
    for c in &chunks {
        total.merge(c);
    }
    Ok(total.value())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{exact_distribution, moment, mixed_moment};
    use crate::model::{generate_instance, DiscreteDistribution, Family, Flags, KernelTensor, Mode, VariableGrid};

    fn product_instance(law: DiscreteDistribution, m: usize, n: usize, f: impl Fn(&[f64]) -> f64) -> UStatInstance {
        let grid = VariableGrid::iid(m, n, law);
        let kernel = KernelTensor::from_fn(&grid, |mi, atoms| {
            let xs: Vec<f64> = atoms
                .iter()
                .enumerate()
                .map(|(j, &a)| grid.law(j, mi[j]).atoms()[a])
                .collect();
            f(&xs)
        });
        UStatInstance::new(grid, kernel, Mode::Decoupled, Flags::default()).unwrap()
    }

    fn bern() -> DiscreteDistribution {
        DiscreteDistribution::new(vec![0.0, 1.0], vec![0.5, 0.5]).unwrap()
    }

    #[test]
    fn sum_form_examples() {
        let inst = product_instance(bern(), 2, 1, |x| x[0] * x[1]);
        let q = |slots: &[usize]| MixedMomentQuery::sum(IndexSubset::from_slots(2, slots), 2.0);
        assert_eq!(mixed_moment(&inst, &q(&[])).unwrap(), 1.0 / 16.0);
        assert_eq!(mixed_moment(&inst, &q(&[0])).unwrap(), 1.0 / 8.0);
        assert_eq!(mixed_moment(&inst, &q(&[0, 1])).unwrap(), 1.0 / 4.0);
    }

    #[test]
    fn max_form_examples() {
        // E max(xi_1, xi_2) = 3/4
        let inst = product_instance(bern(), 1, 2, |x| x[0]);
        let full = IndexSubset::full(1);
        assert_eq!(mixed_moment(&inst, &MixedMomentQuery::max(full, 1.0)).unwrap(), 0.75);
        // J empty: same as the sum form
        let nn = generate_instance(Family::Nonneg, 2, 3, 2, 1).unwrap();
        let e = IndexSubset::empty(2);
        assert_eq!(
            mixed_moment(&nn, &MixedMomentQuery::max(e, 2.5)).unwrap(),
            mixed_moment(&nn, &MixedMomentQuery::sum(e, 2.5)).unwrap()
        );
        // n = 1: max and sum agree for every J
        let single = generate_instance(Family::Nonneg, 3, 1, 3, 2).unwrap();
        for j in IndexSubset::all(3) {
            let a = mixed_moment(&single, &MixedMomentQuery::max(j, 1.5)).unwrap();
            let b = mixed_moment(&single, &MixedMomentQuery::sum(j, 1.5)).unwrap();
            assert!((a - b).abs() <= 1e-14 * b.max(1.0), "{j}: {a} vs {b}");
        }
    }

    #[test]
    fn lr_form_examples() {
        // m = 1, J empty, r = 1/2, p = 1: (E xi^{1/2})^2
        let law = DiscreteDistribution::new(vec![0.0, 1.0, 4.0], vec![0.5, 0.25, 0.25]).unwrap();
        let inst = product_instance(law, 1, 1, |x| x[0]);
        let got = mixed_moment(&inst, &MixedMomentQuery::lr_max(IndexSubset::empty(1), 1.0, 0.5)).unwrap();
        assert!((got - 0.75f64.powi(2)).abs() < 1e-15);
        // |h| = 1 on Rademacher^2
        let ones = product_instance(DiscreteDistribution::rademacher(), 2, 1, |x| (x[0] * x[1]).abs());
        for j in IndexSubset::all(2) {
            for (p, r) in [(1.0, 0.5), (0.8, 0.3)] {
                let v = mixed_moment(&ones, &MixedMomentQuery::lr_max(j, p, r)).unwrap();
                assert!((v - 1.0).abs() < 1e-15);
            }
        }
        // J full: E max_i h_i^p
        let nn = generate_instance(Family::Nonneg, 2, 2, 2, 3).unwrap();
        let full = IndexSubset::full(2);
        let lr = mixed_moment(&nn, &MixedMomentQuery::lr_max(full, 0.9, 0.4)).unwrap();
        let mx = mixed_moment(&nn, &MixedMomentQuery::max(full, 0.9)).unwrap();
        assert!((lr - mx).abs() <= 1e-13 * mx.max(1.0));
        assert!(matches!(
            mixed_moment(&nn, &MixedMomentQuery::lr_max(full, 0.5, 0.5)),
            Err(ExactError::InvalidQuery(_))
        ));
    }

    #[test]
    fn lr_empty_subset_is_moment_power() {
        let nn = generate_instance(Family::Nonneg, 2, 2, 2, 9).unwrap();
        let d = exact_distribution(&nn).unwrap();
        let (p, r) = (0.9, 0.35);
        let expect = moment(&d, r, MomentKind::Absolute).unwrap().powf(p / r);
        let got = mixed_moment(&nn, &MixedMomentQuery::lr_max(IndexSubset::empty(2), p, r)).unwrap();
        assert!((got - expect).abs() <= 1e-12 * expect);
    }

    #[test]
    fn signed_inner_sum_needs_absolute_mode() {
        let inst = generate_instance(Family::Canonical, 2, 2, 2, 0).unwrap();
        let q = MixedMomentQuery::sum(IndexSubset::from_slots(2, &[0]), 1.5);
        assert!(matches!(mixed_moment(&inst, &q), Err(ExactError::SignedPower { .. })));
        assert!(mixed_moment(&inst, &q.absolute()).unwrap() >= 0.0);
    }

    #[test]
    fn subset_display() {
        assert_eq!(IndexSubset::from_slots(3, &[0, 2]).to_string(), "{1,3}");
        assert_eq!(IndexSubset::empty(2).to_string(), "{}");
        assert_eq!(IndexSubset::full(2).complement(), IndexSubset::empty(2));
    }
}
