//! Bound parameters and closed-form tail levels.
//!
//! For order-2 canonical kernels:
//!
//! * `A = max_ij ||h_ij||_inf`
//! * `C^2 = sum_ij E h_ij^2`
//! * `B^2 = max( sup_{j,y} sum_i E h_ij(X_i, y)^2, sup_{i,x} sum_j E h_ij(x, Y_j)^2 )`
//! * `D` the `L2 -> L2` norm of the kernel matrix (see [`operator`]).

pub mod operator;
mod quantile;
mod tail;

pub use quantile::{delta0, phi, quantile_t0, tail_sum, v0, TailTable, DELTA0_SLACK, V0_SLACK};
pub use tail::{
    active_regime, exp_bound_eval, paley_zygmund_bound, paley_zygmund_standard, regime_terms,
    talagrand_threshold, ExpForm, Regime,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{DiscreteDistribution, Table, UStatInstance, DEFAULT_CANONICAL_TOL};
use crate::numeric::{compensated_sum, NeumaierSum};
use operator::{spectral_norm, spectral_norm_dense, spectral_norm_power, WeightedMatrix};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BoundsError {
    #[error("this parameter set needs order {expected}, got order {got}")]
    Order { expected: usize, got: usize },
    #[error("kernel is not canonical (tolerance {0})")]
    NotCanonical(f64),
    #[error("{0}")]
    Domain(String),
    #[error("unknown bound form `{0}`")]
    UnknownForm(String),
}

/// The four scale parameters of the order-2 exponential bounds.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct BoundParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl BoundParams {
    pub fn scaled(&self, k: f64) -> Self {
        Self {
            a: self.a * k,
            b: self.b * k,
            c: self.c * k,
            d: self.d * k,
        }
    }
}

/// How `D` is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NormMethod {
    /// Dense decomposition for small matrices, power iteration otherwise.
    #[default]
    Auto,
    Dense,
    Power,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AbcdOptions {
    pub method: NormMethod,
    /// Restrict the supremum defining `D` to centered functions.
    pub centered: bool,
}

/// `A`, `B`, `C`, `D` for an order-2 canonical instance.
pub fn abcd_params(inst: &UStatInstance) -> Result<BoundParams, BoundsError> {
    abcd_params_with(inst, AbcdOptions::default())
}

pub fn abcd_params_with(inst: &UStatInstance, opts: AbcdOptions) -> Result<BoundParams, BoundsError> {
    if inst.m() != 2 {
        return Err(BoundsError::Order { expected: 2, got: inst.m() });
    }
    if !inst.is_canonical(DEFAULT_CANONICAL_TOL) {
        return Err(BoundsError::NotCanonical(DEFAULT_CANONICAL_TOL));
    }
    let n = inst.n();
    let mut a = 0.0f64;
    let mut c2 = NeumaierSum::new();
    // row_sums[i][a] = sum_j E_2 h_ij(x_a, Y_j)^2; col_sums[j][b] = sum_i E_1 h_ij(X_i, y_b)^2
    let mut row_sums: Vec<Vec<NeumaierSum>> = (0..n).map(|i| vec![NeumaierSum::new(); inst.law(0, i).len()]).collect();
    let mut col_sums: Vec<Vec<NeumaierSum>> = (0..n).map(|j| vec![NeumaierSum::new(); inst.law(1, j).len()]).collect();
    for i in 0..n {
        let p = inst.law(0, i).probs();
        for j in 0..n {
            let q = inst.law(1, j).probs();
            let t = inst.kernel().table(&[i, j]);
            a = a.max(t.max_abs());
            let sq = t.map(|v| v * v);
            c2.add(sq.expect_axes(&[true, true], &[p, q]).data()[0]);
            for (x, v) in sq.expect_axis(1, q).data().iter().enumerate() {
                row_sums[i][x].add(*v);
            }
            for (y, v) in sq.expect_axis(0, p).data().iter().enumerate() {
                col_sums[j][y].add(*v);
            }
        }
    }
    let sup = |sums: &[Vec<NeumaierSum>]| sums.iter().flatten().map(NeumaierSum::value).fold(0.0, f64::max);
    let b2 = sup(&row_sums).max(sup(&col_sums));
    let mut matrix = WeightedMatrix::from_instance(inst);
    if opts.centered {
        matrix = matrix.centered();
    }
    let d = match opts.method {
        NormMethod::Auto => spectral_norm(&matrix),
        NormMethod::Dense => spectral_norm_dense(&matrix),
        NormMethod::Power => spectral_norm_power(&matrix, operator::POWER_TOL, operator::POWER_MAX_ITER).value,
    };
    Ok(BoundParams {
        a,
        b: b2.sqrt(),
        c: c2.value().max(0.0).sqrt(),
        d,
    })
}

/// Parameters for an order-2 statistic whose kernel is the same table `h`
/// for every index pair and whose coordinates all follow `law`:
/// `A = ||h||_inf`, `C = n sqrt(E h^2)`,
/// `B^2 = n (||E_Y h^2||_inf + ||E_X h^2||_inf)`, `D = n ||h||_{L2 -> L2}`.
pub fn iid_params(h: &Table, law: &DiscreteDistribution, n: usize) -> Result<BoundParams, BoundsError> {
    if h.rank() != 2 {
        return Err(BoundsError::Order { expected: 2, got: h.rank() });
    }
    if h.shape() != [law.len(), law.len()] {
        return Err(BoundsError::Domain(format!(
            "kernel shape {:?} does not match a law with {} atoms",
            h.shape(),
            law.len()
        )));
    }
    let p = law.probs();
    let degenerate = (0..2).all(|axis| h.expect_axis(axis, p).data().iter().all(|v| v.abs() <= DEFAULT_CANONICAL_TOL));
    if !degenerate {
        return Err(BoundsError::NotCanonical(DEFAULT_CANONICAL_TOL));
    }
    let nf = n as f64;
    let sq = h.map(|v| v * v);
    let eh2 = sq.expect_axes(&[true, true], &[p, p]).data()[0];
    let sup_y = sq.expect_axis(1, p).max_abs();
    let sup_x = sq.expect_axis(0, p).max_abs();
    let sqrt_p: Vec<f64> = p.iter().map(|x| x.sqrt()).collect();
    let k = law.len();
    let data: Vec<f64> = (0..k * k)
        .map(|off| sqrt_p[off / k] * sqrt_p[off % k] * h.data()[off])
        .collect();
    let single = spectral_norm_dense(&WeightedMatrix::from_dense(k, k, data));
    Ok(BoundParams {
        a: h.max_abs(),
        b: (nf * (sup_y + sup_x)).sqrt(),
        c: nf * eh2.max(0.0).sqrt(),
        d: nf * single,
    })
}

/// `A = max_i ||xi_i||_inf` and `C^2 = sum_i E xi_i^2` for a centered sum
/// (an order-1 instance).
pub fn sum_params(inst: &UStatInstance) -> Result<BoundParams, BoundsError> {
    if inst.m() != 1 {
        return Err(BoundsError::Order { expected: 1, got: inst.m() });
    }
    if !inst.is_canonical(DEFAULT_CANONICAL_TOL) {
        return Err(BoundsError::NotCanonical(DEFAULT_CANONICAL_TOL));
    }
    let mut a = 0.0f64;
    let c2 = compensated_sum((0..inst.n()).map(|i| {
        let t = inst.kernel().table(&[i]);
        a = a.max(t.max_abs());
        compensated_sum(t.data().iter().zip(inst.law(0, i).probs()).map(|(v, p)| p * v * v))
    }));
    Ok(BoundParams {
        a,
        b: 0.0,
        c: c2.sqrt(),
        d: 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{generate_instance, rademacher_chaos, Family};

    #[test]
    fn single_rademacher_product() {
        let inst = rademacher_chaos(&[vec![1.0]]).unwrap();
        let p = abcd_params(&inst).unwrap();
        for v in [p.a, p.b, p.c, p.d] {
            assert!((v - 1.0).abs() < 1e-12, "{p:?}");
        }
    }

    #[test]
    fn identity_chaos() {
        let inst = rademacher_chaos(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let p = abcd_params(&inst).unwrap();
        assert!((p.d - 1.0).abs() < 1e-12);
        assert!((p.c - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn zero_kernel() {
        let inst = rademacher_chaos(&[vec![0.0, 0.0], vec![0.0, 0.0]]).unwrap();
        assert_eq!(abcd_params(&inst).unwrap(), BoundParams::default());
    }

    #[test]
    fn requires_order_two_and_canonical() {
        let nn = generate_instance(Family::Nonneg, 2, 2, 2, 0).unwrap();
        assert!(matches!(abcd_params(&nn), Err(BoundsError::NotCanonical(_))));
        let one = generate_instance(Family::Canonical, 1, 2, 2, 0).unwrap();
        assert!(matches!(abcd_params(&one), Err(BoundsError::Order { .. })));
    }

    #[test]
    fn iid_examples() {
        let xy = Table::new(vec![2, 2], vec![1.0, -1.0, -1.0, 1.0]).unwrap();
        let p = iid_params(&xy, &DiscreteDistribution::rademacher(), 5).unwrap();
        assert!((p.a - 1.0).abs() < 1e-15);
        assert!((p.c - 5.0).abs() < 1e-12);
        assert!((p.b - 10f64.sqrt()).abs() < 1e-12);
        assert!((p.d - 5.0).abs() < 1e-12);

        // centered Bernoulli(1/4): E h^2 = (Var X)^2 = (3/16)^2
        let law = DiscreteDistribution::centered_bernoulli(0.25).unwrap();
        let h = Table::from_fn(vec![2, 2], |i| law.atoms()[i[0]] * law.atoms()[i[1]]);
        let n = 7;
        let p = iid_params(&h, &law, n).unwrap();
        // oracle: direct two-atom sums
        let var: f64 = law.atoms().iter().zip(law.probs()).map(|(x, q)| q * x * x).sum();
        assert!((var - 3.0 / 16.0).abs() < 1e-15);
        assert!((p.c - n as f64 * 3.0 / 16.0).abs() < 1e-12);

        let zero = Table::zeros(vec![2, 2]);
        assert_eq!(iid_params(&zero, &law, 3).unwrap(), BoundParams::default());
    }

    #[test]
    fn sum_params_of_rademachers() {
        let inst = generate_instance(Family::GaussianChaosAnalog, 1, 3, 2, 1).unwrap();
        let p = sum_params(&inst).unwrap();
        let coeffs: Vec<f64> = (0..3).map(|i| inst.kernel().table(&[i]).data()[1]).collect();
        let c2: f64 = coeffs.iter().map(|c| c * c).sum();
        assert!((p.c - c2.sqrt()).abs() < 1e-12);
        assert_eq!(p.a, coeffs.iter().fold(0.0f64, |a, c| a.max(c.abs())));
    }
}
