//! Simulation designs, evaluation metrics and the Hellinger diagnostic.
//!
//! # Random streams
//!
//! Every draw comes from ChaCha8 keyed by `SimConfig::seed` (expanded with
//! `SeedableRng::seed_from_u64`). The 64-bit ChaCha stream id is
//!
//! ```text
//! (replicate << 32) | (component << 24) | block
//! ```
//!
//! with component 0 for hidden states and 1 / 2 for the test statistics of
//! study 1 / 2. Independent designs use block 0. Each (replicate, component,
//! block) therefore owns a disjoint stream, so datasets are reproducible bit
//! for bit and replicates can be generated in any order.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::baselines::{self, Method};
use crate::em::{self, FitConfig};
use crate::error::{Error, Result};
use crate::fdrctl;
use crate::linalg::cholesky;
use crate::model::{clamp_p, Density, HiddenStates, MixtureModel, PairedPValueSet, StateProportions};
use crate::normal;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Dependence {
    Independent,
    /// Blocks of `block_size` features split into two equal halves: correlation
    /// `rho` within a half, `-rho` across halves, independent across blocks.
    Block { block_size: usize, rho: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub m: usize,
    pub proportions: StateProportions,
    pub mu1: f64,
    pub mu2: f64,
    pub sigma1: f64,
    pub sigma2: f64,
    pub dependence: Dependence,
    pub seed: u64,
}

impl SimConfig {
    /// Independent design with `ξ₀₁ = ξ₁₀ = (1 − ξ₀₀ − ξ₁₁)/2`, equal effects and unit scale.
    pub fn symmetric(m: usize, xi00: f64, xi11: f64, mu: f64, seed: u64) -> Result<Self> {
        let side = (1.0 - xi00 - xi11) / 2.0;
        Ok(Self {
            m,
            proportions: StateProportions::new(xi00, side, side, xi11)?,
            mu1: mu,
            mu2: mu,
            sigma1: 1.0,
            sigma2: 1.0,
            dependence: Dependence::Independent,
            seed,
        })
    }

    pub fn with_dependence(self, dependence: Dependence) -> Self {
        Self { dependence, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(Error::param("m", "must be positive"));
        }
        for (name, s) in [("sigma1", self.sigma1), ("sigma2", self.sigma2)] {
            if !(s > 0.0) || !s.is_finite() {
                return Err(Error::param(name, "must be positive"));
            }
        }
        for (name, mu) in [("mu1", self.mu1), ("mu2", self.mu2)] {
            if !mu.is_finite() {
                return Err(Error::param(name, "must be finite"));
            }
        }
        if let Dependence::Block { block_size, rho } = self.dependence {
            if block_size < 2 || block_size % 2 != 0 {
                return Err(Error::param("block_size", "must be even and at least 2"));
            }
            if self.m % block_size != 0 {
                return Err(Error::param("block_size", "must divide m"));
            }
            if !(rho > -1.0 && rho < 1.0) {
                return Err(Error::param("rho", "must lie in (-1, 1)"));
            }
            block_cholesky(block_size, rho)?;
        }
        Ok(())
    }

    /// The generating mixture: `fⱼ` is the density of `1 − Φ(Z + μⱼ/σⱼ)`.
    pub fn true_model(&self) -> MixtureModel<NormalShiftDensity> {
        MixtureModel::new(
            self.proportions,
            NormalShiftDensity::new(self.mu1 / self.sigma1),
            NormalShiftDensity::new(self.mu2 / self.sigma2),
        )
    }
}

/// Density of the one-sided p-value `1 − Φ(Z + δ)`, `Z ~ N(0, 1)`:
/// `f(p) = exp(δz − δ²/2)` with `z = Φ⁻¹(1 − p)`. Non-increasing for `δ ≥ 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalShiftDensity {
    pub shift: f64,
}

impl NormalShiftDensity {
    pub fn new(shift: f64) -> Self {
        Self { shift }
    }
}

impl Density for NormalShiftDensity {
    fn value(&self, p: f64) -> f64 {
        let z = normal::upper_quantile(p);
        libm::exp(self.shift * z - 0.5 * self.shift * self.shift)
    }
}

fn block_cholesky(block_size: usize, rho: f64) -> Result<Vec<f64>> {
    let half = block_size / 2;
    let mut cov = vec![0.0; block_size * block_size];
    for a in 0..block_size {
        for b in 0..block_size {
            cov[a * block_size + b] = if a == b {
                1.0
            } else if (a < half) == (b < half) {
                rho
            } else {
                -rho
            };
        }
    }
    cholesky(&cov, block_size)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedDataset {
    pub data: PairedPValueSet,
    pub truth: HiddenStates,
    pub config: SimConfig,
}

const COMPONENT_STATES: u64 = 0;

pub fn stream_id(replicate: u64, component: u64, block: u64) -> u64 {
    debug_assert!(replicate < 1 << 32 && component < 1 << 8 && block < 1 << 24);
    (replicate << 32) | (component << 24) | block
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Draws the first replicate of `config`.
pub fn generate(config: &SimConfig) -> Result<SimulatedDataset> {
    generate_replicate(config, 0)
}

pub fn generate_replicate(config: &SimConfig, replicate: u64) -> Result<SimulatedDataset> {
    config.validate()?;
    let m = config.m;
    let xi = config.proportions;
    let mut rng = rng_for(config.seed, stream_id(replicate, COMPONENT_STATES, 0));
    let mut theta1 = Vec::with_capacity(m);
    let mut theta2 = Vec::with_capacity(m);
    let c0 = xi.xi00;
    let c1 = c0 + xi.xi01;
    let c2 = c1 + xi.xi10;
    for _ in 0..m {
        let u: f64 = rng.random();
        // Order [00, 01, 10, 11]; the last state takes any rounding remainder.
        let (a, b) = if u < c0 {
            (false, false)
        } else if u < c1 {
            (false, true)
        } else if u < c2 {
            (true, false)
        } else {
            (true, true)
        };
        theta1.push(a);
        theta2.push(b);
    }

    let chol = match config.dependence {
        Dependence::Block { block_size, rho } => Some((block_size, block_cholesky(block_size, rho)?)),
        Dependence::Independent => None,
    };
    let draw = |component: u64, theta: &[bool], mu: f64, sigma: f64| -> Vec<f64> {
        let stats = match &chol {
            None => {
                let mut rng = rng_for(config.seed, stream_id(replicate, component, 0));
                theta
                    .iter()
                    .map(|&t| {
                        let z: f64 = rng.sample(StandardNormal);
                        (if t { mu } else { 0.0 }) + sigma * z
                    })
                    .collect::<Vec<f64>>()
            }
            Some((size, l)) => {
                let mut out = Vec::with_capacity(m);
                let mut z = vec![0.0; *size];
                for (block, chunk) in theta.chunks(*size).enumerate() {
                    let mut rng = rng_for(config.seed, stream_id(replicate, component, block as u64));
                    for v in z.iter_mut() {
                        *v = rng.sample(StandardNormal);
                    }
                    for (a, &t) in chunk.iter().enumerate() {
                        let corr: f64 = (0..=a).map(|k| l[a * size + k] * z[k]).sum();
                        out.push(if t { mu } else { 0.0 } + sigma * corr);
                    }
                }
                out
            }
        };
        stats.into_iter().map(|x| clamp_p(normal::upper_tail(x / sigma))).collect()
    };
    let p1 = draw(1, &theta1, config.mu1, config.sigma1);
    let p2 = draw(2, &theta2, config.mu2, config.sigma2);
    Ok(SimulatedDataset {
        data: PairedPValueSet::from_pvalues(p1, p2)?,
        truth: HiddenStates::new(theta1, theta2)?,
        config: *config,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalMetrics {
    pub fdp: f64,
    pub power: f64,
    pub rejections: usize,
    pub false_rejections: usize,
}

/// False discovery proportion and power against the true hidden states;
/// both ratios are 0 when their denominator is 0.
pub fn evaluate(result_flags: &[bool], truth: &HiddenStates) -> Result<EvalMetrics> {
    if result_flags.len() != truth.len() {
        return Err(Error::LengthMismatch { expected: truth.len(), found: result_flags.len() });
    }
    let mut rejections = 0;
    let mut false_rejections = 0;
    for (i, &r) in result_flags.iter().enumerate() {
        if r {
            rejections += 1;
            if !truth.is_replicable(i) {
                false_rejections += 1;
            }
        }
    }
    let signals = truth.replicable_count();
    let true_rejections = rejections - false_rejections;
    Ok(EvalMetrics {
        fdp: if rejections == 0 { 0.0 } else { false_rejections as f64 / rejections as f64 },
        power: if signals == 0 { 0.0 } else { true_rejections as f64 / signals as f64 },
        rejections,
        false_rejections,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Procedure {
    /// Plug-in Lfdr from the EM fit followed by the step-up rule.
    Proposed,
    Baseline(Method),
}

impl Procedure {
    pub const ALL: [Procedure; 6] = [
        Procedure::Proposed,
        Procedure::Baseline(Method::AdhocBh),
        Procedure::Baseline(Method::MaxP),
        Procedure::Baseline(Method::Jump),
        Procedure::Baseline(Method::Marr),
        Procedure::Baseline(Method::Radjust),
    ];

    pub fn name(self) -> &'static str {
        match self {
            Procedure::Proposed => "proposed",
            Procedure::Baseline(m) => m.name(),
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.name() == name)
    }
}

impl fmt::Display for Procedure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

pub fn run_procedure(procedure: Procedure, data: &PairedPValueSet, alpha: f64, fit: &FitConfig) -> Result<Vec<bool>> {
    match procedure {
        Procedure::Proposed => {
            let result = em::fit(data, fit)?;
            let lfdr = result.model.lfdr_values(data)?;
            Ok(fdrctl::step_up(&lfdr, alpha)?.reject)
        }
        Procedure::Baseline(method) => Ok(baselines::run(method, data, alpha, fit.lambdas)?.reject),
    }
}

/// Metrics of each procedure (in the given order) on one replicate.
pub fn run_replicate(
    config: &SimConfig,
    replicate: u64,
    procedures: &[Procedure],
    alpha: f64,
    fit: &FitConfig,
) -> Result<Vec<EvalMetrics>> {
    let sim = generate_replicate(config, replicate)?;
    procedures
        .iter()
        .map(|&p| evaluate(&run_procedure(p, &sim.data, alpha, fit)?, &sim.truth))
        .collect()
}

/// Mean and Monte Carlo standard error (sample sd over `√n`).
pub fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, libm::sqrt(var / n as f64))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProcedureSummary {
    pub procedure: Procedure,
    pub reps: usize,
    pub mean_fdp: f64,
    pub fdp_se: f64,
    pub mean_power: f64,
    pub power_se: f64,
    pub mean_rejections: f64,
}

/// Aggregates per-replicate rows (each aligned with `procedures`) in replicate order.
pub fn summarize(procedures: &[Procedure], per_replicate: &[Vec<EvalMetrics>]) -> Vec<ProcedureSummary> {
    procedures
        .iter()
        .enumerate()
        .map(|(k, &procedure)| {
            let fdp: Vec<f64> = per_replicate.iter().map(|r| r[k].fdp).collect();
            let power: Vec<f64> = per_replicate.iter().map(|r| r[k].power).collect();
            let rej: Vec<f64> = per_replicate.iter().map(|r| r[k].rejections as f64).collect();
            let (mean_fdp, fdp_se) = mean_and_se(&fdp);
            let (mean_power, power_se) = mean_and_se(&power);
            ProcedureSummary {
                procedure,
                reps: per_replicate.len(),
                mean_fdp,
                fdp_se,
                mean_power,
                power_se,
                mean_rejections: mean_and_se(&rej).0,
            }
        })
        .collect()
}

/// Runs replicates `0..n_reps` sequentially and summarizes them.
pub fn replicate_experiment(
    config: &SimConfig,
    procedures: &[Procedure],
    alpha: f64,
    n_reps: usize,
    fit: &FitConfig,
) -> Result<Vec<ProcedureSummary>> {
    let rows = (0..n_reps as u64)
        .map(|r| run_replicate(config, r, procedures, alpha, fit))
        .collect::<Result<Vec<_>>>()?;
    Ok(summarize(procedures, &rows))
}

/// Hellinger distance between two mixture densities by the midpoint rule on a
/// `grid × grid` mesh of the unit square.
pub fn hellinger<A: Density, B: Density>(a: &MixtureModel<A>, b: &MixtureModel<B>, grid: usize) -> f64 {
    let n = grid.max(1);
    let xs: Vec<f64> = (0..n).map(|k| (k as f64 + 0.5) / n as f64).collect();
    let fa1: Vec<f64> = xs.iter().map(|&x| a.f1.value(x)).collect();
    let fa2: Vec<f64> = xs.iter().map(|&x| a.f2.value(x)).collect();
    let fb1: Vec<f64> = xs.iter().map(|&x| b.f1.value(x)).collect();
    let fb2: Vec<f64> = xs.iter().map(|&x| b.f2.value(x)).collect();
    let (xa, xb) = (a.proportions, b.proportions);
    let mut total = 0.0;
    for i in 0..n {
        let mut row = 0.0;
        for j in 0..n {
            let pa = xa.xi00 + xa.xi10 * fa1[i] + xa.xi01 * fa2[j] + xa.xi11 * fa1[i] * fa2[j];
            let pb = xb.xi00 + xb.xi10 * fb1[i] + xb.xi01 * fb2[j] + xb.xi11 * fb1[i] * fb2[j];
            let d = libm::sqrt(pa.max(0.0)) - libm::sqrt(pb.max(0.0));
            row += d * d;
        }
        total += row;
    }
    let h2 = 0.5 * total / (n * n) as f64;
    libm::sqrt(h2.clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::MonotoneStepDensity;

    #[test]
    fn evaluate_examples() {
        let truth = HiddenStates::new(vec![true, true, false, true, true], vec![true, false, true, true, true]).unwrap();
        let exact = evaluate(&[true, false, false, true, true], &truth).unwrap();
        assert_eq!((exact.fdp, exact.power), (0.0, 1.0));
        let none = evaluate(&[false; 5], &truth).unwrap();
        assert_eq!((none.fdp, none.power, none.rejections), (0.0, 0.0, 0));
        let one_bad = evaluate(&[true, true, false, true, true], &truth).unwrap();
        assert_eq!(one_bad.fdp, 0.25);
        assert!(evaluate(&[true], &truth).is_err());
    }

    #[test]
    fn hellinger_identical_is_zero() {
        let xi = StateProportions::new(0.7, 0.1, 0.1, 0.1).unwrap();
        let f = MonotoneStepDensity::new(vec![0.3, 1.0], vec![2.0, 4.0 / 7.0]).unwrap();
        let m = MixtureModel::new(xi, f.clone(), f);
        assert_eq!(hellinger(&m, &m, 50), 0.0);
    }

    #[test]
    fn block_config_validation() {
        let base = SimConfig::symmetric(100, 0.8, 0.01, 2.5, 1).unwrap();
        assert!(base.with_dependence(Dependence::Block { block_size: 30, rho: 0.2 }).validate().is_err());
        assert!(base.with_dependence(Dependence::Block { block_size: 25, rho: 0.2 }).validate().is_err());
        assert!(base.with_dependence(Dependence::Block { block_size: 50, rho: 0.2 }).validate().is_ok());
        // Smallest eigenvalue 1 + ρ(B − 1) is negative here.
        assert_eq!(
            base.with_dependence(Dependence::Block { block_size: 50, rho: -0.05 }).validate(),
            Err(Error::NotPositiveDefinite)
        );
    }

    #[test]
    fn stream_ids_are_disjoint() {
        assert_ne!(stream_id(1, 0, 0), stream_id(0, 1, 0));
        assert_ne!(stream_id(0, 1, 1), stream_id(0, 2, 0));
        assert_eq!(stream_id(3, 2, 7), (3 << 32) | (2 << 24) | 7);
    }
}
