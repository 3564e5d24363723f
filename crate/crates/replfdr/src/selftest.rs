//! Embedded oracle suite behind `replfdr selftest`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use replfdr_core::em::{fit, FitConfig};
use replfdr_core::fdrctl::{critical_value, step_up};
use replfdr_core::grenander::{weighted_log_likelihood, weighted_monotone_mle, WeightedSample};
use replfdr_core::model::Density;
use replfdr_core::simkit::{generate_replicate, SimConfig};

use crate::oracle;

pub const PAVA_TOLERANCE: f64 = 1e-9;
pub const ASCENT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub cases: usize,
    pub failures: usize,
    pub detail: String,
}

impl CheckOutcome {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

/// Random weighted sample with at most `max_points` points, some weights zero.
pub fn random_weighted_sample(rng: &mut impl Rng, max_points: usize) -> WeightedSample {
    loop {
        let n = rng.random_range(1..=max_points);
        let points: Vec<f64> = (0..n).map(|_| rng.random_range(0.001..0.999)).collect();
        let weights: Vec<f64> =
            (0..n).map(|_| if rng.random_bool(0.15) { 0.0 } else { rng.random_range(0.01..2.0) }).collect();
        if weights.iter().any(|&w| w > 0.0) {
            return WeightedSample::new(points, weights).expect("points lie inside (0, 1)");
        }
    }
}

/// Compares the fast weighted MLE against both oracles; returns the largest
/// log-likelihood gap and the largest componentwise height gap.
pub fn pava_discrepancy(sample: &WeightedSample) -> (f64, f64) {
    let fitted = weighted_monotone_mle(sample).expect("sample has positive weight");
    let (oracle_ll, oracle_heights) = oracle::partition_mle(sample.points(), sample.weights());
    let formula = oracle::max_min_density(sample.points(), sample.weights());
    let ll_gap = (weighted_log_likelihood(&fitted, sample) - oracle_ll).abs();
    let height_gap = oracle::support(sample.points())
        .iter()
        .zip(formula.iter().zip(&oracle_heights))
        .map(|(&x, (&f, &o))| {
            let v = fitted.value(x);
            (v - f).abs().max((v - o).abs())
        })
        .fold(0.0, f64::max);
    (ll_gap, height_gap)
}

fn pava_check(seed: u64, cases: usize) -> CheckOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0;
    let mut worst = (0.0f64, 0.0f64);
    for _ in 0..cases {
        let sample = random_weighted_sample(&mut rng, 6);
        let (ll, h) = pava_discrepancy(&sample);
        worst = (worst.0.max(ll), worst.1.max(h));
        if ll > PAVA_TOLERANCE || h > PAVA_TOLERANCE {
            failures += 1;
        }
    }
    CheckOutcome {
        name: "pava-brute-force",
        cases,
        failures,
        detail: format!("max loglik gap {:.3e}, max height gap {:.3e}", worst.0, worst.1),
    }
}

/// Visits every non-decreasing index sequence of length `1..=max_len` over `0..grid`.
pub fn for_each_multiset(grid: usize, max_len: usize, mut visit: impl FnMut(&[usize])) {
    fn rec(grid: usize, max_len: usize, start: usize, cur: &mut Vec<usize>, visit: &mut impl FnMut(&[usize])) {
        if !cur.is_empty() {
            visit(cur);
        }
        if cur.len() == max_len {
            return;
        }
        for k in start..grid {
            cur.push(k);
            rec(grid, max_len, k, cur, visit);
            cur.pop();
        }
    }
    rec(grid, max_len, 0, &mut Vec::with_capacity(max_len), &mut visit);
}

/// `true` when `step_up` agrees with the threshold oracle and with thresholding
/// at `critical_value`.
pub fn step_up_agrees(values: &[f64], alpha: f64) -> bool {
    let fast = step_up(values, alpha).expect("valid Lfdr vector");
    let lambda = critical_value(values, alpha).expect("valid Lfdr vector");
    let thresholded: Vec<bool> = values.iter().map(|&v| fast.k_rejected > 0 && v <= lambda).collect();
    fast.reject == oracle::step_up_by_thresholds(values, alpha) && fast.reject == thresholded
}

fn step_up_check(max_len: usize) -> CheckOutcome {
    let mut cases = 0;
    let mut failures = 0;
    for alpha in [0.05, 0.1, 0.2] {
        for_each_multiset(21, max_len, |idx| {
            // Reverse order so the fast path has to sort.
            let values: Vec<f64> = idx.iter().rev().map(|&k| k as f64 * 0.05).collect();
            cases += 1;
            if !step_up_agrees(&values, alpha) {
                failures += 1;
            }
        });
    }
    CheckOutcome { name: "step-up-brute-force", cases, failures, detail: format!("all multisets up to length {max_len}") }
}

/// Largest decrease between consecutive full-EM log-likelihoods (0 if none).
pub fn worst_ascent_violation(config: &SimConfig, replicate: u64) -> f64 {
    let sim = generate_replicate(config, replicate).expect("valid simulation config");
    let res = fit(&sim.data, &FitConfig::full_em()).expect("simulated data fit");
    res.log_likelihood_trace.windows(2).map(|w| w[0] - w[1]).fold(0.0, f64::max)
}

fn em_check(seed: u64, datasets: usize) -> CheckOutcome {
    let config = SimConfig::symmetric(300, 0.7, 0.1, 2.5, seed).expect("valid proportions");
    let mut failures = 0;
    let mut worst = 0.0f64;
    for r in 0..datasets as u64 {
        let v = worst_ascent_violation(&config, r);
        worst = worst.max(v);
        if v > ASCENT_TOLERANCE {
            failures += 1;
        }
    }
    CheckOutcome { name: "em-ascent", cases: datasets, failures, detail: format!("max decrease {worst:.3e}") }
}

pub fn run_all(seed: u64) -> Vec<CheckOutcome> {
    vec![pava_check(seed, 300), step_up_check(5), em_check(seed, 10)]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn multiset_enumeration_counts() {
        let mut n = 0;
        for_each_multiset(3, 2, |_| n += 1);
        // 3 singletons + 6 pairs.
        assert_eq!(n, 9);
    }

    #[test]
    fn suite_passes() {
        for outcome in run_all(1) {
            assert!(outcome.passed(), "{outcome:?}");
        }
    }
}
