use replfdr_core::baselines::StoreyLambdas;
use replfdr_core::em::{e_step, fit, m_step_proportions, FitConfig, FitMode};
use replfdr_core::simkit::{generate_replicate, SimConfig};

#[test]
fn full_em_log_likelihood_never_decreases() {
    let config = SimConfig::symmetric(300, 0.7, 0.1, 2.5, 11).unwrap();
    for rep in 0..10 {
        let sim = generate_replicate(&config, rep).unwrap();
        let res = fit(&sim.data, &FitConfig::full_em()).unwrap();
        for w in res.log_likelihood_trace.windows(2) {
            assert!(w[1] >= w[0] - 1e-9, "rep {rep}: {} -> {}", w[0], w[1]);
        }
        assert_eq!(res.log_likelihood_trace.len(), res.iterations + 1);
    }
}

#[test]
fn converged_full_em_is_a_proportion_fixed_point() {
    let config = SimConfig::symmetric(2000, 0.6, 0.2, 3.0, 5).unwrap();
    let sim = generate_replicate(&config, 0).unwrap();
    let cfg = FitConfig { tolerance: 1e-10, max_iterations: 5000, ..FitConfig::full_em() };
    let res = fit(&sim.data, &cfg).unwrap();
    assert!(res.converged);
    let again = m_step_proportions(&e_step(&res.model, &sim.data).unwrap()).unwrap();
    for (a, b) in again.to_array().iter().zip(res.model.proportions.to_array()) {
        assert!((a - b).abs() < 1e-3, "{a} vs {b}");
    }
}

#[test]
fn conservative_fit_on_pure_nulls_puts_mass_on_the_null_state() {
    let config = SimConfig::symmetric(5000, 1.0, 0.0, 0.0, 3).unwrap();
    let sim = generate_replicate(&config, 0).unwrap();
    let res = fit(&sim.data, &FitConfig::default()).unwrap();
    assert!(res.model.proportions.xi00 > 0.95, "{:?}", res.model.proportions);
    let lfdr = res.model.lfdr_values(&sim.data).unwrap();
    let rejected = replfdr_core::fdrctl::step_up(&lfdr, 0.05).unwrap().k_rejected;
    assert!(rejected <= 5, "{rejected}");
}

#[test]
fn conservative_mode_holds_proportions_fixed() {
    let config = SimConfig::symmetric(2000, 0.8, 0.05, 2.5, 9).unwrap();
    let sim = generate_replicate(&config, 0).unwrap();
    let cfg = FitConfig { mode: FitMode::ConservativeXi, lambdas: StoreyLambdas::default(), ..FitConfig::default() };
    let res = fit(&sim.data, &cfg).unwrap();
    let expected = replfdr_core::baselines::conservative_proportions(&sim.data, cfg.lambdas).unwrap();
    assert_eq!(res.model.proportions, expected);
    for w in res.log_likelihood_trace.windows(2) {
        assert!(w[1] >= w[0] - 1e-9);
    }
}

#[test]
fn fit_is_deterministic() {
    let config = SimConfig::symmetric(1000, 0.65, 0.05, 2.0, 1).unwrap();
    let sim = generate_replicate(&config, 2).unwrap();
    let a = fit(&sim.data, &FitConfig::full_em()).unwrap();
    let b = fit(&sim.data, &FitConfig::full_em()).unwrap();
    assert_eq!(a, b);
}
