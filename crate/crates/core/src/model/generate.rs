//! Seeded instance families for corpus generation.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{
    hoeffding_projection, multi_indices, DiscreteDistribution, Flags, KernelTensor, ModelError,
    Mode, Table, UStatInstance, VariableGrid,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    /// Random laws, entrywise nonnegative kernels with some exact zeros.
    Nonneg,
    /// Hoeffding projection of a random signed kernel.
    Canonical,
    /// Canonical kernels, symmetric with zero diagonal, shared laws; undecoupled mode.
    SymmetricUndecoupled,
    /// `h_i(x) = c_i * x_1 * ... * x_m` over Rademacher coordinates, `c_i ~ N(0, 1)`.
    GaussianChaosAnalog,
    /// `h_i(x) = x_1 * ... * x_m` over centered Bernoulli(1/n) coordinates.
    BernoulliProduct,
}

impl Family {
    pub const ALL: [Family; 5] = [
        Family::Nonneg,
        Family::Canonical,
        Family::SymmetricUndecoupled,
        Family::GaussianChaosAnalog,
        Family::BernoulliProduct,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Nonneg => "nonneg",
            Family::Canonical => "canonical",
            Family::SymmetricUndecoupled => "symmetric-undecoupled",
            Family::GaussianChaosAnalog => "gaussian-chaos-analog",
            Family::BernoulliProduct => "bernoulli-product",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Family::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| ModelError::UnknownFamily(s.to_string()))
    }
}

/// Builds a member of `family`. The result depends only on the arguments.
///
/// `atom_count` is ignored by the two product families, whose laws are fixed.
pub fn generate_instance(
    family: Family,
    m: usize,
    n: usize,
    atom_count: usize,
    seed: u64,
) -> Result<UStatInstance, ModelError> {
    if atom_count < 2 {
        return Err(ModelError::TooFewAtoms(atom_count));
    }
    if m == 0 || n == 0 {
        return Err(ModelError::Unsupported(format!(
            "order and index range must be positive (m = {m}, n = {n})"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match family {
        Family::Nonneg => {
            let grid = random_grid(&mut rng, m, n, atom_count, false);
            let kernel = KernelTensor::from_fn(&grid, |_, _| {
                if rng.random::<f64>() < 0.2 {
                    0.0
                } else {
                    rng.random::<f64>().powi(3)
                }
            });
            let flags = Flags {
                nonnegative: true,
                ..Flags::default()
            };
            UStatInstance::new(grid, kernel, Mode::Decoupled, flags)
        }
        Family::Canonical => {
            let grid = random_grid(&mut rng, m, n, atom_count, false);
            let kernel = KernelTensor::from_fn(&grid, |_, _| rng.random_range(-1.0..1.0));
            let raw = UStatInstance::from_parts(grid, kernel, Mode::Decoupled, Flags::default());
            let projected = hoeffding_projection(&raw);
            let flags = Flags {
                canonical: true,
                ..Flags::default()
            };
            UStatInstance::new(projected.grid, projected.kernel, Mode::Decoupled, flags)
        }
        Family::SymmetricUndecoupled => symmetric_undecoupled(&mut rng, m, n, atom_count),
        Family::GaussianChaosAnalog => {
            let grid = VariableGrid::iid(m, n, DiscreteDistribution::rademacher());
            let coeffs: Vec<f64> = (0..n.pow(m as u32))
                .map(|_| rng.sample(StandardNormal))
                .collect();
            Ok(product_kernel(grid, |flat| coeffs[flat], separately_symmetric()))
        }
        Family::BernoulliProduct => {
            let law = DiscreteDistribution::centered_bernoulli(1.0 / n as f64)?;
            let grid = VariableGrid::iid(m, n, law);
            let flags = Flags {
                canonical: true,
                ..Flags::default()
            };
            Ok(product_kernel(grid, |_| 1.0, flags))
        }
    }
}

/// Order-2 Rademacher chaos `sum_{ij} c_ij X_i Y_j` for a square coefficient matrix.
pub fn rademacher_chaos(coeffs: &[Vec<f64>]) -> Result<UStatInstance, ModelError> {
    let n = coeffs.len();
    if n == 0 || coeffs.iter().any(|row| row.len() != n) {
        return Err(ModelError::Unsupported("coefficient matrix must be square and nonempty".into()));
    }
    let grid = VariableGrid::iid(2, n, DiscreteDistribution::rademacher());
    Ok(product_kernel(grid, |flat| coeffs[flat / n][flat % n], separately_symmetric()))
}

/// Order-1 instance `sum_i X_i` whose summands are the given laws.
pub fn sum_instance(laws: Vec<DiscreteDistribution>) -> Result<UStatInstance, ModelError> {
    let n = laws.len();
    if n == 0 {
        return Err(ModelError::Unsupported("need at least one summand".into()));
    }
    let grid = VariableGrid::new(1, n, vec![laws]);
    let kernel = KernelTensor::from_fn(&grid, |mi, a| grid.law(0, mi[0]).atoms()[a[0]]);
    let flags = UStatInstance::from_parts(grid.clone(), kernel.clone(), Mode::Decoupled, Flags::default())
        .detected_flags(super::DEFAULT_CANONICAL_TOL);
    UStatInstance::new(grid, kernel, Mode::Decoupled, flags)
}

fn separately_symmetric() -> Flags {
    Flags {
        canonical: true,
        separately_symmetric: true,
        ..Flags::default()
    }
}

/// `h_i(x) = coeff(flat(i)) * prod_j x_j`.
fn product_kernel(grid: VariableGrid, coeff: impl Fn(usize) -> f64, flags: Flags) -> UStatInstance {
    let n = grid.n();
    let kernel = KernelTensor::from_fn(&grid, |mi, atoms| {
        let flat = super::flat_index(mi, n);
        atoms
            .iter()
            .enumerate()
            .fold(coeff(flat), |acc, (j, &a)| acc * grid.law(j, mi[j]).atoms()[a])
    });
    UStatInstance::from_parts(grid, kernel, Mode::Decoupled, flags)
}

fn random_law(rng: &mut ChaCha8Rng, atom_count: usize) -> DiscreteDistribution {
    let weights: Vec<f64> = (0..atom_count).map(|_| 0.05 + rng.random::<f64>()).collect();
    let total: f64 = weights.iter().sum();
    let atoms = (0..atom_count).map(|k| k as f64).collect();
    let mut probs: Vec<f64> = weights.iter().map(|w| w / total).collect();
    // Put the rounding residue on the largest atom so the sum is 1 to the ulp.
    let residue = 1.0 - probs.iter().sum::<f64>();
    probs[atom_count - 1] += residue;
    DiscreteDistribution::from_raw(atoms, probs)
}

fn random_grid(rng: &mut ChaCha8Rng, m: usize, n: usize, atom_count: usize, shared: bool) -> VariableGrid {
    if shared {
        let row: Vec<DiscreteDistribution> = (0..n).map(|_| random_law(rng, atom_count)).collect();
        VariableGrid::new(m, n, vec![row; m])
    } else {
        let laws = (0..m)
            .map(|_| (0..n).map(|_| random_law(rng, atom_count)).collect())
            .collect();
        VariableGrid::new(m, n, laws)
    }
}

fn symmetric_undecoupled(
    rng: &mut ChaCha8Rng,
    m: usize,
    n: usize,
    atom_count: usize,
) -> Result<UStatInstance, ModelError> {
    let grid = random_grid(rng, m, n, atom_count, true);
    let mut tables: Vec<Option<Table>> = vec![None; n.pow(m as u32)];
    for mi in multi_indices(m, n) {
        let flat = super::flat_index(&mi, n);
        if super::has_repeated(&mi) {
            tables[flat] = Some(Table::zeros(grid.shape_for(&mi)));
            continue;
        }
        let mut rep = mi.clone();
        rep.sort_unstable();
        let rep_flat = super::flat_index(&rep, n);
        if tables[rep_flat].is_none() {
            let mut t = Table::from_fn(grid.shape_for(&rep), |_| rng.random_range(-1.0..1.0));
            for (j, &i) in rep.iter().enumerate() {
                t.center_axis(j, grid.law(j, i).probs());
            }
            tables[rep_flat] = Some(t);
        }
        if rep_flat != flat {
            // mi[k] = rep[s[k]]
            let s: Vec<usize> = mi
                .iter()
                .map(|i| rep.iter().position(|r| r == i).unwrap_or(0))
                .collect();
            let permuted = tables[rep_flat].as_ref().map(|t| t.permute_axes(&s));
            tables[flat] = permuted;
        }
    }
    let kernel = KernelTensor::new(m, n, tables.into_iter().flatten().collect());
    let flags = Flags {
        canonical: true,
        ..Flags::default()
    };
    UStatInstance::new(grid, kernel, Mode::Undecoupled, flags)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::validate_instance;

    #[test]
    fn generation_is_deterministic() {
        let a = generate_instance(Family::Nonneg, 2, 2, 2, 7).unwrap();
        let b = generate_instance(Family::Nonneg, 2, 2, 2, 7).unwrap();
        assert_eq!(a.to_json_string(), b.to_json_string());
        let c = generate_instance(Family::Nonneg, 2, 2, 2, 8).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn every_family_validates() {
        for family in Family::ALL {
            for (m, n) in [(1, 3), (2, 2), (3, 2), (2, 3)] {
                let inst = generate_instance(family, m, n, 3, 5).unwrap();
                assert!(validate_instance(&inst).is_empty(), "{family} m={m} n={n}");
            }
        }
    }

    #[test]
    fn canonical_family_is_canonical() {
        for seed in 0..20 {
            let inst = generate_instance(Family::Canonical, 2, 3, 3, seed).unwrap();
            assert!(inst.is_canonical(1e-10));
        }
    }

    #[test]
    fn bernoulli_product_laws() {
        let inst = generate_instance(Family::BernoulliProduct, 2, 4, 2, 0).unwrap();
        let law = inst.law(1, 3);
        assert_eq!(law.atoms(), &[-0.25, 0.75]);
        assert_eq!(law.probs(), &[0.75, 0.25]);
        assert!(inst.is_canonical(1e-12));
    }

    #[test]
    fn bad_arguments() {
        assert_eq!(
            generate_instance(Family::Nonneg, 2, 2, 1, 0),
            Err(ModelError::TooFewAtoms(1))
        );
        assert!(matches!("poisson".parse::<Family>(), Err(ModelError::UnknownFamily(_))));
        assert_eq!("bernoulli-product".parse::<Family>(), Ok(Family::BernoulliProduct));
    }
}
