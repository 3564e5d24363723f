use replfdr_core::model::{Density, MixtureModel, StateProportions};
use replfdr_core::normal;
use replfdr_core::simkit::{generate_replicate, hellinger, Dependence, SimConfig};

fn ks_uniform(sample: &[f64]) -> f64 {
    let mut s = sample.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, &x)| (x - i as f64 / n).abs().max(((i + 1) as f64 / n - x).abs()))
        .fold(0.0, f64::max)
}

#[test]
fn null_pvalues_are_uniform() {
    let config = SimConfig::symmetric(20_000, 0.5, 0.2, 2.5, 42).unwrap();
    let sim = generate_replicate(&config, 0).unwrap();
    for (p, theta) in [(sim.data.p1(), &sim.truth.theta1), (sim.data.p2(), &sim.truth.theta2)] {
        let nulls: Vec<f64> = p.iter().zip(theta).filter(|(_, &t)| !t).map(|(&v, _)| v).collect();
        // 1% critical value of the Kolmogorov distribution.
        let crit = 1.63 / (nulls.len() as f64).sqrt();
        assert!(ks_uniform(&nulls) < crit);
        let signals: Vec<f64> = p.iter().zip(theta).filter(|(_, &t)| t).map(|(&v, _)| v).collect();
        let mean = signals.iter().sum::<f64>() / signals.len() as f64;
        assert!(mean < 0.1, "signal p-values should concentrate near zero: {mean}");
    }
}

#[test]
fn state_frequencies_match_proportions() {
    let xi = StateProportions::new(0.55, 0.2, 0.15, 0.1).unwrap();
    let m = 50_000;
    let config = SimConfig { proportions: xi, ..SimConfig::symmetric(m, 0.8, 0.1, 2.0, 7).unwrap() };
    let sim = generate_replicate(&config, 3).unwrap();
    let mut counts = [0usize; 4];
    for (&a, &b) in sim.truth.theta1.iter().zip(&sim.truth.theta2) {
        counts[2 * a as usize + b as usize] += 1;
    }
    for (c, p) in counts.iter().zip(xi.to_array()) {
        let se = (p * (1.0 - p) / m as f64).sqrt();
        assert!((*c as f64 / m as f64 - p).abs() < 4.0 * se, "{counts:?}");
    }
}

fn null_z(config: &SimConfig) -> Vec<f64> {
    let sim = generate_replicate(config, 0).unwrap();
    sim.data.p1().iter().map(|&p| normal::upper_quantile(p)).collect()
}

fn corr(pairs: &[(f64, f64)]) -> f64 {
    let n = pairs.len() as f64;
    let (ma, mb) = pairs.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x / n, b + y / n));
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in pairs {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    sab / (saa * sbb).sqrt()
}

#[test]
fn block_design_has_the_requested_correlations() {
    let base = SimConfig::symmetric(40_000, 1.0, 0.0, 0.0, 99).unwrap();
    let block = |rho| base.with_dependence(Dependence::Block { block_size: 4, rho });
    let z = null_z(&block(0.2));
    let within: Vec<(f64, f64)> = z.chunks(4).map(|c| (c[0], c[1])).collect();
    let across: Vec<(f64, f64)> = z.chunks(4).map(|c| (c[1], c[2])).collect();
    let se = 4.0 / (within.len() as f64).sqrt();
    assert!((corr(&within) - 0.2).abs() < se, "{}", corr(&within));
    assert!((corr(&across) + 0.2).abs() < se, "{}", corr(&across));

    let z0 = null_z(&block(0.0));
    let independent: Vec<(f64, f64)> = z0.chunks(4).map(|c| (c[0], c[3])).collect();
    assert!(corr(&independent).abs() < se);
}

#[test]
fn invalid_block_designs_are_rejected() {
    let base = SimConfig::symmetric(1000, 0.8, 0.1, 2.0, 0).unwrap();
    assert!(base.with_dependence(Dependence::Block { block_size: 3, rho: 0.2 }).validate().is_err());
    assert!(base.with_dependence(Dependence::Block { block_size: 30, rho: 0.2 }).validate().is_err());
    assert!(base.with_dependence(Dependence::Block { block_size: 100, rho: 0.2 }).validate().is_ok());
}

#[test]
fn replicates_are_reproducible_and_distinct() {
    let config = SimConfig::symmetric(500, 0.8, 0.05, 2.0, 123).unwrap();
    let a = generate_replicate(&config, 4).unwrap();
    let b = generate_replicate(&config, 4).unwrap();
    let c = generate_replicate(&config, 5).unwrap();
    assert_eq!(a, b);
    assert_ne!(a.data.p1(), c.data.p1());
}

struct Triangle;

impl Density for Triangle {
    fn value(&self, x: f64) -> f64 {
        2.0 - 2.0 * x
    }
}

struct Flat;

impl Density for Flat {
    fn value(&self, _: f64) -> f64 {
        1.0
    }
}

#[test]
fn hellinger_matches_brute_force_integral() {
    let all_null = MixtureModel::new(StateProportions::new(1.0, 0.0, 0.0, 0.0).unwrap(), Flat, Flat);
    let signal = MixtureModel::new(StateProportions::new(0.0, 0.0, 0.0, 1.0).unwrap(), Triangle, Triangle);
    let n = 1000;
    let mut brute = 0.0;
    for i in 0..n {
        for j in 0..n {
            let x = (i as f64 + 0.5) / n as f64;
            let y = (j as f64 + 0.5) / n as f64;
            let d = signal.mixture_density(x, y).unwrap().sqrt() - 1.0;
            brute += d * d;
        }
    }
    let brute = (0.5 * brute / (n * n) as f64).sqrt();
    let fast = hellinger(&all_null, &signal, 200);
    assert!((fast - brute).abs() < 1e-3, "{fast} vs {brute}");
    // Closed form: 1 - h² = (∫√(2 - 2x) dx)² = 8/9.
    assert!((brute - (1.0f64 / 9.0).sqrt()).abs() < 1e-4);
    assert_eq!(hellinger(&signal, &signal, 50), 0.0);
}

#[test]
fn true_model_density_is_normalized() {
    let config = SimConfig::symmetric(10, 0.8, 0.1, 2.5, 0).unwrap();
    let model = config.true_model();
    // The density is unbounded at 0, so integrate in z = Φ⁻¹(1 − p) instead.
    let (lo, hi, n) = (-12.0, 12.0, 200_000);
    let h = (hi - lo) / n as f64;
    let mass: f64 = (0..n)
        .map(|k| {
            let z = lo + (k as f64 + 0.5) * h;
            model.f1.value(normal::upper_tail(z)) * normal::pdf(z) * h
        })
        .sum();
    assert!((mass - 1.0).abs() < 1e-6, "{mass}");
}
