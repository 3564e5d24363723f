use proptest::prelude::*;
use replfdr_core::baselines::{bh, storey_pi0};
use replfdr_core::fdrctl::{critical_value, step_up, FDP_SLACK};
use replfdr_core::grenander::{
    pava_isotonic, weighted_log_likelihood, weighted_monotone_mle, Direction, WeightedSample,
};
use replfdr_core::model::{Density, MixtureModel, MonotoneStepDensity, PairedPValueSet, StateProportions};

fn proportions() -> impl Strategy<Value = StateProportions> {
    prop::array::uniform4(0.01f64..1.0).prop_map(|w| StateProportions::normalized(w).unwrap())
}

/// Random non-increasing step density with 1..6 pieces.
fn step_density() -> impl Strategy<Value = MonotoneStepDensity> {
    (prop::collection::vec(0.01f64..1.0, 1..6), prop::collection::vec(0.01f64..5.0, 1..6)).prop_map(
        |(cuts, raw)| {
            let n = cuts.len().min(raw.len());
            let mut knots: Vec<f64> = cuts[..n - 1].to_vec();
            knots.sort_by(f64::total_cmp);
            knots.dedup_by(|a, b| (*a - *b).abs() < 1e-3);
            knots.push(1.0);
            let mut heights: Vec<f64> = raw[..knots.len()].to_vec();
            heights.sort_by(|a, b| b.total_cmp(a));
            let mut prev = 0.0;
            let mass: f64 = knots
                .iter()
                .zip(&heights)
                .map(|(&k, &h)| {
                    let v = h * (k - prev);
                    prev = k;
                    v
                })
                .sum();
            MonotoneStepDensity::new(knots, heights.iter().map(|h| h / mass).collect()).unwrap()
        },
    )
}

fn weighted_sample(max: usize) -> impl Strategy<Value = WeightedSample> {
    prop::collection::vec((0.001f64..0.999, prop_oneof![Just(0.0), 0.01f64..3.0]), 1..max)
        .prop_filter("needs positive weight", |v| v.iter().any(|(_, w)| *w > 0.0))
        .prop_map(|v| {
            let (x, w): (Vec<f64>, Vec<f64>) = v.into_iter().unzip();
            WeightedSample::new(x, w).unwrap()
        })
}

/// Weighted least-squares non-decreasing fit by the max-min formula.
fn isotonic_max_min(y: &[f64], w: &[f64]) -> Vec<f64> {
    let n = y.len();
    (0..n)
        .map(|j| {
            (0..=j)
                .map(|s| {
                    (j..n)
                        .map(|t| {
                            let sw: f64 = w[s..=t].iter().sum();
                            let swy: f64 = (s..=t).map(|i| w[i] * y[i]).sum();
                            swy / sw
                        })
                        .fold(f64::INFINITY, f64::min)
                })
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn lfdr_in_unit_interval_and_nondecreasing_in_each_coordinate(
        xi in proportions(),
        f1 in step_density(),
        f2 in step_density(),
        xs in prop::collection::vec(0.001f64..0.999, 2..12),
        y in 0.001f64..0.999,
    ) {
        let model = MixtureModel::new(xi, f1, f2);
        let mut xs = xs;
        xs.sort_by(f64::total_cmp);
        let mut prev = f64::NEG_INFINITY;
        for &x in &xs {
            let l = model.lfdr(x, y).unwrap();
            prop_assert!((0.0..=1.0).contains(&l));
            prop_assert!(l >= prev - 1e-12);
            prev = l;
            let swapped = model.lfdr(y, x).unwrap();
            prop_assert!((0.0..=1.0).contains(&swapped));
        }
    }

    #[test]
    fn mixture_density_integrates_to_one(xi in proportions(), f1 in step_density(), f2 in step_density()) {
        let model = MixtureModel::new(xi, f1, f2);
        let n = 600;
        let mut total = 0.0;
        for i in 0..n {
            for j in 0..n {
                let x = (i as f64 + 0.5) / n as f64;
                let y = (j as f64 + 0.5) / n as f64;
                total += model.mixture_density(x, y).unwrap();
            }
        }
        total /= (n * n) as f64;
        // Each jump of a step density misplaces at most one grid cell of mass.
        prop_assert!((total - 1.0).abs() < 0.1, "integral {}", total);
        prop_assert!((model.f1.integral() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn grenander_is_a_monotone_density(sample in weighted_sample(40)) {
        let f = weighted_monotone_mle(&sample).unwrap();
        prop_assert!(f.heights().windows(2).all(|h| h[0] >= h[1]));
        prop_assert!((f.integral() - 1.0).abs() < 1e-9);
        prop_assert!(f.heights().iter().all(|&h| h > 0.0));
    }

    #[test]
    fn grenander_beats_perturbations(sample in weighted_sample(30), other in step_density(), t in 0.001f64..1.0) {
        let f = weighted_monotone_mle(&sample).unwrap();
        let best = weighted_log_likelihood(&f, &sample);
        let candidates = [MonotoneStepDensity::uniform(), other];
        for g in &candidates {
            // Mixtures of monotone densities are monotone densities.
            let mixed: f64 = sample
                .points()
                .iter()
                .zip(sample.weights())
                .filter(|(_, &w)| w > 0.0)
                .map(|(&x, &w)| w * ((1.0 - t) * f.value(x) + t * g.value(x)).ln())
                .sum();
            prop_assert!(best >= mixed - 1e-9, "{} < {}", best, mixed);
        }
    }

    #[test]
    fn pava_matches_max_min_formula(
        rows in prop::collection::vec((-5.0f64..5.0, 0.1f64..3.0), 1..12),
    ) {
        let (y, w): (Vec<f64>, Vec<f64>) = rows.into_iter().unzip();
        let fit = pava_isotonic(&y, &w, Direction::NonDecreasing).unwrap();
        let oracle = isotonic_max_min(&y, &w);
        for (a, b) in fit.iter().zip(&oracle) {
            prop_assert!((a - b).abs() < 1e-9);
        }
        let lhs: f64 = fit.iter().zip(&w).map(|(f, w)| f * w).sum();
        let rhs: f64 = y.iter().zip(&w).map(|(y, w)| y * w).sum();
        prop_assert!((lhs - rhs).abs() < 1e-9);

        let neg: Vec<f64> = y.iter().map(|v| -v).collect();
        let down = pava_isotonic(&neg, &w, Direction::NonIncreasing).unwrap();
        for (a, b) in down.iter().zip(&fit) {
            prop_assert!((a + b).abs() < 1e-9);
        }
    }

    #[test]
    fn step_up_invariants(values in prop::collection::vec(0.0f64..=1.0, 1..60), alpha in 0.01f64..0.5) {
        let r = step_up(&values, alpha).unwrap();
        let rejected: Vec<f64> = values.iter().zip(&r.reject).filter(|(_, &z)| z).map(|(&v, _)| v).collect();
        prop_assert_eq!(rejected.len(), r.k_rejected);
        if r.k_rejected > 0 {
            let mean = rejected.iter().sum::<f64>() / rejected.len() as f64;
            prop_assert!(mean <= alpha + FDP_SLACK);
        }
        for (&v, &z) in values.iter().zip(&r.reject) {
            prop_assert_eq!(z, r.k_rejected > 0 && v <= r.lambda_hat);
        }
        let lambda = critical_value(&values, alpha).unwrap();
        if r.k_rejected > 0 {
            prop_assert_eq!(lambda, r.lambda_hat);
        }

        let bigger = step_up(&values, (alpha * 1.5).min(0.99)).unwrap();
        prop_assert!(bigger.k_rejected >= r.k_rejected);

        let mut rev = values.clone();
        rev.reverse();
        let r2 = step_up(&rev, alpha).unwrap();
        let mut back = r2.reject.clone();
        back.reverse();
        prop_assert_eq!(back, r.reject);
    }

    #[test]
    fn bh_rejects_a_prefix_of_sorted_pvalues(p in prop::collection::vec(0.0f64..=1.0, 1..80), alpha in 0.01f64..0.3) {
        let rej = bh(&p, alpha).unwrap();
        let worst_rejected = p.iter().zip(&rej).filter(|(_, &z)| z).map(|(&v, _)| v).fold(f64::NEG_INFINITY, f64::max);
        let best_kept = p.iter().zip(&rej).filter(|(_, &z)| !z).map(|(&v, _)| v).fold(f64::INFINITY, f64::min);
        prop_assert!(worst_rejected < best_kept || rej.iter().all(|&z| !z) || rej.iter().all(|&z| z));
        let k = rej.iter().filter(|&&z| z).count();
        if k > 0 {
            prop_assert!(worst_rejected <= alpha * k as f64 / p.len() as f64 + 1e-15);
        }
    }

    #[test]
    fn lfdr_values_follow_feature_permutations(
        xi in proportions(),
        f1 in step_density(),
        pairs in prop::collection::vec((0.001f64..0.999, 0.001f64..0.999), 2..20),
    ) {
        let model = MixtureModel::new(xi, f1.clone(), f1);
        let (p1, p2): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let data = PairedPValueSet::from_pvalues(p1, p2).unwrap();
        let order: Vec<usize> = (0..data.len()).rev().collect();
        let permuted = data.permuted(&order).unwrap();
        let a = model.lfdr_values(&data).unwrap();
        let b = model.lfdr_values(&permuted).unwrap();
        for (k, &i) in order.iter().enumerate() {
            prop_assert_eq!(a[i], b[k]);
        }
    }
}

#[test]
fn storey_pi0_is_near_one_for_uniform_pvalues() {
    // Deterministic low-discrepancy sample of U(0, 1).
    let m = 10_000;
    let golden = 0.618_033_988_749_895;
    let p: Vec<f64> = (1..=m).map(|i| (i as f64 * golden).fract()).collect();
    let pi0 = storey_pi0(&p, 0.5);
    assert!((pi0 - 1.0).abs() < 4.0 / (m as f64).sqrt(), "{pi0}");
}
