use approx::assert_relative_eq;

use super::*;
use crate::bounds::abcd_params;
use crate::exact::exact_distribution;
use crate::model::{generate_instance, rademacher_chaos, sum_instance, DiscreteDistribution, Family};

fn rademacher_sum() -> Source {
    Source::Instance(sum_instance(vec![DiscreteDistribution::rademacher()]).unwrap())
}

#[test]
fn zero_samples_have_zero_tail() {
    let s = sample_ustat(&Source::Instance(sum_instance(vec![DiscreteDistribution::point_mass(0.0)]).unwrap()), 100, 1).unwrap();
    let c = empirical_tail(&s, &[1.0, 2.0], 0.95).unwrap();
    assert_eq!(c.tail, vec![0.0, 0.0]);
    assert!(s.is_point_mass());
    assert_eq!(default_grid(&s), Err(McError::EmptyGrid));
}

#[test]
fn rademacher_tail_below_one_is_one() {
    let s = sample_ustat(&rademacher_sum(), 1_000_000, 3).unwrap();
    let c = empirical_tail(&s, &[0.5], 0.95).unwrap();
    assert_eq!(c.tail, vec![1.0]);
    assert!(c.lower[0] > 0.99999 && c.upper[0] == 1.0);
}

#[test]
fn one_replicate_is_a_point_mass() {
    let s = sample_ustat(&Source::GaussianChaos { coeffs: vec![vec![1.0]] }, 1, 9).unwrap();
    assert!(s.is_point_mass());
    assert_eq!(s.abs_sorted().len(), 1);
}

#[test]
fn same_seed_same_summary_any_worker_count() {
    let inst = generate_instance(Family::Canonical, 2, 3, 3, 4).unwrap();
    let src = Source::Instance(inst);
    let a = sample_ustat(&src, 20_000, 42).unwrap();
    let b = par::with_threads(1, || sample_ustat(&src, 20_000, 42).unwrap());
    let c = par::with_threads(3, || sample_ustat(&src, 20_000, 42).unwrap());
    assert_eq!(a, b);
    assert_eq!(a, c);
    let d = sample_ustat(&src, 20_000, 43).unwrap();
    assert_ne!(a, d);
}

#[test]
fn bad_inputs() {
    assert_eq!(sample_ustat(&rademacher_sum(), 0, 1), Err(McError::NoReplicates));
    assert!(matches!(sample_ustat(&Source::BernoulliProduct { n: 0 }, 1, 1), Err(McError::Source(_))));
    let s = sample_ustat(&rademacher_sum(), 10, 1).unwrap();
    assert_eq!(empirical_tail(&s, &[1.0], 1.0), Err(McError::Confidence(1.0)));
    assert_eq!(empirical_tail(&s, &[], 0.9), Err(McError::EmptyGrid));
    assert_eq!(empirical_tail(&s, &[2.0, 1.0], 0.9), Err(McError::BadGrid));
}

#[test]
fn wilson_matches_closed_form() {
    // 0 of 10 at z = 2: upper = z^2 / (n + z^2).
    let (lo, hi) = wilson_interval(0, 10, 2.0);
    assert_eq!(lo, 0.0);
    assert_relative_eq!(hi, 4.0 / 14.0, max_relative = 1e-14);
    let (lo, hi) = wilson_interval(50, 100, 1.96);
    assert_relative_eq!(0.5 - lo, hi - 0.5, max_relative = 1e-12);
}

#[test]
fn bernoulli_product_is_integer_valued() {
    let s = sample_ustat(&Source::BernoulliProduct { n: 50 }, 50_000, 5).unwrap();
    assert!(s.abs_sorted().iter().all(|v| v.fract() == 0.0));
    // E U = 0 since the two factors are independent and centered.
    assert!(s.mean.abs() < 0.05);
}

#[test]
fn gaussian_chaos_second_moment() {
    let coeffs = vec![vec![1.0, 0.5], vec![-0.5, 2.0]];
    let s = sample_ustat(&Source::GaussianChaos { coeffs }, 200_000, 8).unwrap();
    let second: f64 = s.abs_sorted().iter().map(|v| v * v).sum::<f64>() / 200_000.0;
    // E U^2 = sum x_ij^2 = 5.5.
    assert!((second - 5.5).abs() < 0.15, "{second}");
}

/// z-scores of empirical against exact tails at every support point are
/// centered with at most a few per mille beyond 3. Scores within one instance
/// are strongly correlated, so the mean is only good to about 0.1.
#[test]
fn empirical_tails_track_exact_tails() {
    let reps = 20_000;
    let (mut points, mut beyond, mut zsum) = (0usize, 0usize, 0.0);
    for seed in 0..200 {
        let inst = generate_instance(Family::Canonical, 2, 2, 3, seed).unwrap();
        let exact = exact_distribution(&inst).unwrap().abs();
        let s = sample_ustat(&Source::Instance(inst), reps, 1000 + seed).unwrap();
        for &x in exact.values().iter().filter(|&&v| v > 0.0) {
            let p = exact.tail_ge(x);
            if p >= 1.0 {
                continue;
            }
            let z = (s.count_ge(x) as f64 / reps as f64 - p) / (p * (1.0 - p) / reps as f64).sqrt();
            points += 1;
            zsum += z;
            beyond += (z.abs() > 3.0) as usize;
        }
    }
    assert!(points > 10_000);
    assert!((zsum / points as f64).abs() < 0.25, "mean z {}", zsum / points as f64);
    assert!((beyond as f64) < 0.01 * points as f64, "{beyond} of {points} beyond 3 SE");
}

#[test]
fn undecoupled_sampling_matches_exact_law() {
    let inst = generate_instance(Family::SymmetricUndecoupled, 2, 3, 2, 2).unwrap();
    let exact = exact_distribution(&inst).unwrap().abs();
    let reps = 100_000;
    let s = sample_ustat(&Source::Instance(inst), reps, 6).unwrap();
    for &x in exact.values().iter().filter(|&&v| v > 0.0) {
        let p = exact.tail_ge(x);
        let t = s.count_ge(x) as f64 / reps as f64;
        assert!((t - p).abs() <= 4.0 * (p * (1.0 - p) / reps as f64).sqrt() + 1e-12, "x {x}: {t} vs {p}");
    }
}

#[test]
fn fitted_bound_majorizes_and_is_minimal() {
    let inst = rademacher_chaos(&[vec![1.0, 0.3, 0.0], vec![0.2, -1.0, 0.5], vec![0.0, 0.4, 1.0]]).unwrap();
    let params = abcd_params(&inst).unwrap();
    let s = sample_ustat(&Source::Instance(inst), 50_000, 2).unwrap();
    let grid = default_grid(&s).unwrap();
    let curve = empirical_tail(&s, &grid, 0.99).unwrap();
    let fit = tail_vs_bound(&curve, &params, ExpForm::FourRegime, None).unwrap();
    assert!(fit.fitted && fit.majorizes);
    let below = tail_vs_bound(&curve, &params, ExpForm::FourRegime, Some(fit.constant * 0.999)).unwrap();
    assert!(!below.majorizes);
    let bound = fit.curve.bound.as_ref().unwrap();
    assert!(bound.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
    assert!(curve.tail.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn finer_grid_never_lowers_the_fit() {
    let inst = generate_instance(Family::GaussianChaosAnalog, 2, 4, 2, 1).unwrap();
    let params = abcd_params(&inst).unwrap();
    let s = sample_ustat(&Source::Instance(inst), 30_000, 3).unwrap();
    let grid = default_grid(&s).unwrap();
    let coarse: Vec<f64> = grid.iter().step_by(4).copied().collect();
    let fit = |g: &[f64]| {
        let c = empirical_tail(&s, g, 0.95).unwrap();
        tail_vs_bound(&c, &params, ExpForm::FourRegime, None).unwrap().constant
    };
    assert!(fit(&grid) >= fit(&coarse));
}

#[test]
fn unit_parameters_bound_value() {
    let s = sample_ustat(&rademacher_sum(), 1000, 1).unwrap();
    let curve = empirical_tail(&s, &[1.0], 0.95).unwrap();
    let params = BoundParams { a: 1.0, b: 1.0, c: 1.0, d: 1.0 };
    let cmp = tail_vs_bound(&curve, &params, ExpForm::FourRegime, Some(1.0)).unwrap();
    assert_relative_eq!(cmp.curve.bound.unwrap()[0], (-1.0f64).exp(), max_relative = 1e-15);
}

#[test]
fn slope_needs_two_points_above_one() {
    let curve = TailCurve {
        x: vec![0.5, 2.0, 4.0],
        counts: vec![10, 5, 1],
        reps: 10,
        confidence: 0.9,
        tail: vec![1.0, 0.5, 0.1],
        lower: vec![0.0; 3],
        upper: vec![1.0; 3],
        bound: None,
        regime: None,
    };
    let s = log_tail_slope(&curve).unwrap();
    let expect = (0.1f64.ln() - 0.5f64.ln()) / (2.0 * 4f64.ln() - 2f64.sqrt() * 2f64.ln());
    assert_relative_eq!(s, expect, max_relative = 1e-12);
}
