//! EM fit of the four-state mixture with non-parametric monotone densities.
//!
//! E-step: `γᵢ,uv ∝ ξ_uv f₁(p₁ᵢ)ᵘ f₂(p₂ᵢ)ᵛ`. M-step: `ξ_uv` is the column mean
//! of `γ`, `f₁` the weighted monotone MLE on `p₁` with weights `γ₁₀ + γ₁₁`, and
//! `f₂` the same on `p₂` with weights `γ₀₁ + γ₁₁`.
//!
//! In [`FitMode::ConservativeXi`] the proportions are set once from Storey-type
//! moment estimates and only the densities are iterated.

use alloc::vec::Vec;

use crate::baselines::{conservative_proportions, StoreyLambdas};
use crate::error::{Error, Result};
use crate::grenander::{weighted_monotone_mle, SortedSupport, WeightedSample};
use crate::model::{MixtureModel, MonotoneStepDensity, PairedPValueSet, StateProportions};

pub const DEFAULT_MAX_ITERATIONS: usize = 500;
pub const DEFAULT_TOLERANCE: f64 = 1e-6;

/// Starting proportions for full EM.
pub const INITIAL_PROPORTIONS: [f64; 4] = [0.85, 0.05, 0.05, 0.05];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FitMode {
    FullEm,
    #[default]
    ConservativeXi,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitConfig {
    pub mode: FitMode,
    pub max_iterations: usize,
    /// Stop once `|ℓₖ − ℓₖ₋₁| ≤ tolerance · max(|ℓₖ₋₁|, 1)` for the mean log-likelihood `ℓ`.
    pub tolerance: f64,
    pub lambdas: StoreyLambdas,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            mode: FitMode::default(),
            max_iterations: DEFAULT_MAX_ITERATIONS,
            tolerance: DEFAULT_TOLERANCE,
            lambdas: StoreyLambdas::default(),
        }
    }
}

impl FitConfig {
    pub fn full_em() -> Self {
        Self { mode: FitMode::FullEm, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::param("max_iterations", "must be at least 1"));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::param("tolerance", "must be positive"));
        }
        Ok(())
    }
}

/// Per-feature posterior probabilities of the four hidden states.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorTable {
    pub gamma00: Vec<f64>,
    pub gamma01: Vec<f64>,
    pub gamma10: Vec<f64>,
    pub gamma11: Vec<f64>,
}

impl PosteriorTable {
    pub fn new(gamma00: Vec<f64>, gamma01: Vec<f64>, gamma10: Vec<f64>, gamma11: Vec<f64>) -> Result<Self> {
        let m = gamma00.len();
        if m == 0 {
            return Err(Error::Empty);
        }
        for col in [&gamma01, &gamma10, &gamma11] {
            if col.len() != m {
                return Err(Error::LengthMismatch { expected: m, found: col.len() });
            }
        }
        let table = Self { gamma00, gamma01, gamma10, gamma11 };
        for i in 0..m {
            let row = table.row(i);
            if row.iter().any(|g| !(0.0..=1.0).contains(g)) || (row.iter().sum::<f64>() - 1.0).abs() > 1e-10 {
                return Err(Error::param("posterior", alloc::format!("row {i} is not a probability vector")));
            }
        }
        Ok(table)
    }

    pub fn len(&self) -> usize {
        self.gamma00.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gamma00.is_empty()
    }

    /// Row `i` in `[γ₀₀, γ₀₁, γ₁₀, γ₁₁]` order.
    pub fn row(&self, i: usize) -> [f64; 4] {
        [self.gamma00[i], self.gamma01[i], self.gamma10[i], self.gamma11[i]]
    }

    /// Weights `γ₁₀ + γ₁₁` (study 1 signal) or `γ₀₁ + γ₁₁` (study 2 signal).
    pub fn signal_weights(&self, which: Study) -> Vec<f64> {
        let other = match which {
            Study::First => &self.gamma10,
            Study::Second => &self.gamma01,
        };
        other.iter().zip(&self.gamma11).map(|(a, b)| a + b).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Study {
    First,
    Second,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub model: MixtureModel,
    /// Mean log-likelihood of the initial model followed by one entry per EM cycle.
    pub log_likelihood_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl FitResult {
    pub fn final_log_likelihood(&self) -> f64 {
        *self.log_likelihood_trace.last().expect("trace holds the initial value")
    }
}

/// Posterior table and mean log-likelihood `(1/m) Σ log p_w(p₁ᵢ, p₂ᵢ)` in one pass.
///
/// The sum runs in feature order so the result does not depend on scheduling.
fn expectation(model: &MixtureModel, data: &PairedPValueSet) -> Result<(PosteriorTable, f64)> {
    let m = data.len();
    let mut g = [
        Vec::with_capacity(m),
        Vec::with_capacity(m),
        Vec::with_capacity(m),
        Vec::with_capacity(m),
    ];
    let mut loglik = 0.0;
    for (&x, &y) in data.p1().iter().zip(data.p2()) {
        let w = model.state_weights(x, y);
        let total: f64 = w.iter().sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::DegenerateModel("posterior normalizer vanishes"));
        }
        for (col, wk) in g.iter_mut().zip(w) {
            col.push(wk / total);
        }
        loglik += libm::log(total);
    }
    let [gamma00, gamma01, gamma10, gamma11] = g;
    Ok((PosteriorTable { gamma00, gamma01, gamma10, gamma11 }, loglik / m as f64))
}

/// Mean observed-data log-likelihood of `model` on `data` (densities floored).
pub fn mean_log_likelihood(model: &MixtureModel, data: &PairedPValueSet) -> Result<f64> {
    expectation(model, data).map(|(_, ll)| ll)
}

pub fn e_step(model: &MixtureModel, data: &PairedPValueSet) -> Result<PosteriorTable> {
    expectation(model, data).map(|(post, _)| post)
}

pub fn m_step_proportions(post: &PosteriorTable) -> Result<StateProportions> {
    if post.is_empty() {
        return Err(Error::Empty);
    }
    let m = post.len() as f64;
    let mean = |col: &[f64]| col.iter().sum::<f64>() / m;
    StateProportions::normalized([
        mean(&post.gamma00),
        mean(&post.gamma01),
        mean(&post.gamma10),
        mean(&post.gamma11),
    ])
}

pub fn m_step_density(data_column: &[f64], post: &PosteriorTable, which: Study) -> Result<MonotoneStepDensity> {
    let sample = WeightedSample::new(data_column.to_vec(), post.signal_weights(which))?;
    weighted_monotone_mle(&sample)
}

fn converged(prev: f64, next: f64, tolerance: f64) -> bool {
    (next - prev).abs() <= tolerance * prev.abs().max(1.0)
}

/// Fits the mixture to `data`.
pub fn fit(data: &PairedPValueSet, config: &FitConfig) -> Result<FitResult> {
    config.validate()?;
    if data.len() < 2 {
        return Err(Error::param("m", "at least two features are required"));
    }
    let support1 = SortedSupport::new(data.p1())?;
    let support2 = SortedSupport::new(data.p2())?;
    let ones = alloc::vec![1.0; data.len()];
    let f1 = support1.fit(&ones)?;
    let f2 = support2.fit(&ones)?;

    let proportions = match config.mode {
        FitMode::FullEm => StateProportions::normalized(INITIAL_PROPORTIONS)?,
        FitMode::ConservativeXi => conservative_proportions(data, config.lambdas)?,
    };
    let mut model = MixtureModel::new(proportions, f1, f2);
    let (mut post, ll0) = expectation(&model, data)?;
    let mut trace = alloc::vec![ll0];
    let mut iterations = 0;
    let mut done = false;

    while iterations < config.max_iterations {
        let proportions = match config.mode {
            FitMode::FullEm => m_step_proportions(&post)?,
            FitMode::ConservativeXi => model.proportions,
        };
        let f1 = support1.fit(&post.signal_weights(Study::First))?;
        let f2 = support2.fit(&post.signal_weights(Study::Second))?;
        model = MixtureModel::new(proportions, f1, f2);
        let (next_post, ll) = expectation(&model, data)?;
        post = next_post;
        iterations += 1;
        let prev = *trace.last().expect("non-empty trace");
        trace.push(ll);
        if converged(prev, ll, config.tolerance) {
            done = true;
            break;
        }
    }
    Ok(FitResult { model, log_likelihood_trace: trace, iterations, converged: done })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn quarter() -> StateProportions {
        StateProportions::new(0.25, 0.25, 0.25, 0.25).unwrap()
    }

    #[test]
    fn uninformative_densities_return_prior() {
        let xi = StateProportions::new(0.7, 0.1, 0.15, 0.05).unwrap();
        let model = MixtureModel::new(xi, MonotoneStepDensity::uniform(), MonotoneStepDensity::uniform());
        let data = PairedPValueSet::from_pvalues(vec![0.1, 0.5, 0.9], vec![0.3, 0.2, 0.8]).unwrap();
        let post = e_step(&model, &data).unwrap();
        for i in 0..3 {
            let row = post.row(i);
            for (a, b) in row.iter().zip(xi.to_array()) {
                assert!((a - b).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn worked_posterior_row() {
        let f = MonotoneStepDensity::new(vec![0.5], vec![2.0]).unwrap();
        let model = MixtureModel::new(quarter(), f.clone(), f);
        let data = PairedPValueSet::from_pvalues(vec![0.2], vec![0.3]).unwrap();
        let row = e_step(&model, &data).unwrap().row(0);
        let expected = [1.0 / 9.0, 2.0 / 9.0, 2.0 / 9.0, 4.0 / 9.0];
        for (a, b) in row.iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn point_mass_prior() {
        let f = MonotoneStepDensity::new(vec![0.5, 1.0], vec![1.5, 0.5]).unwrap();
        let model = MixtureModel::new(StateProportions::new(0.0, 0.0, 0.0, 1.0).unwrap(), f.clone(), f);
        let data = PairedPValueSet::from_pvalues(vec![0.2, 0.7], vec![0.9, 0.1]).unwrap();
        let post = e_step(&model, &data).unwrap();
        for i in 0..2 {
            assert_eq!(post.row(i), [0.0, 0.0, 0.0, 1.0]);
        }
    }

    #[test]
    fn proportions_are_column_means() {
        let p = PosteriorTable::new(vec![0.7; 3], vec![0.1; 3], vec![0.1; 3], vec![0.1; 3]).unwrap();
        let xi = m_step_proportions(&p).unwrap().to_array();
        for (a, b) in xi.iter().zip([0.7, 0.1, 0.1, 0.1]) {
            assert!((a - b).abs() < 1e-15);
        }
        let p = PosteriorTable::new(vec![1.0, 0.0], vec![0.0; 2], vec![0.0; 2], vec![0.0, 1.0]).unwrap();
        assert_eq!(m_step_proportions(&p).unwrap().to_array(), [0.5, 0.0, 0.0, 0.5]);
        let p = PosteriorTable::new(vec![0.25; 4], vec![0.25; 4], vec![0.25; 4], vec![0.25; 4]).unwrap();
        assert_eq!(m_step_proportions(&p).unwrap().to_array(), [0.25; 4]);
        assert!(PosteriorTable::new(vec![0.5], vec![0.5], vec![0.5], vec![0.0]).is_err());
    }

    #[test]
    fn density_step_uses_signal_weights() {
        let post = PosteriorTable::new(vec![0.5, 0.5], vec![0.0; 2], vec![0.25, 0.25], vec![0.25, 0.25]).unwrap();
        let f = m_step_density(&[0.6, 0.2], &post, Study::First).unwrap();
        assert_eq!(f.knots(), &[0.2, 0.6]);
        assert!((f.heights()[0] - 2.5).abs() < 1e-12 && (f.heights()[1] - 1.25).abs() < 1e-12);

        let null = PosteriorTable::new(vec![1.0; 2], vec![0.0; 2], vec![0.0; 2], vec![0.0; 2]).unwrap();
        assert_eq!(m_step_density(&[0.6, 0.2], &null, Study::Second), Err(Error::DegenerateSample));

        let single = PosteriorTable::new(vec![1.0, 0.0], vec![0.0, 1.0], vec![0.0; 2], vec![0.0; 2]).unwrap();
        let f = m_step_density(&[0.3, 0.5], &single, Study::Second).unwrap();
        assert_eq!((f.knots(), f.heights()), (&[0.5][..], &[2.0][..]));
    }

    #[test]
    fn iteration_cap_is_honoured() {
        let p1: Vec<f64> = (1..=50).map(|i| (i as f64 / 51.0).powi(3)).collect();
        let p2: Vec<f64> = (1..=50).map(|i| (i as f64 / 51.0).powi(2)).collect();
        let data = PairedPValueSet::from_pvalues(p1, p2).unwrap();
        let cfg = FitConfig { max_iterations: 1, tolerance: 1e-300, ..FitConfig::full_em() };
        let r = fit(&data, &cfg).unwrap();
        assert_eq!(r.iterations, 1);
        assert_eq!(r.log_likelihood_trace.len(), 2);
        assert!(!r.converged);
    }

    #[test]
    fn config_validation() {
        let data = PairedPValueSet::from_pvalues(vec![0.1, 0.2], vec![0.3, 0.4]).unwrap();
        assert!(fit(&data, &FitConfig { max_iterations: 0, ..FitConfig::default() }).is_err());
        assert!(fit(&data, &FitConfig { tolerance: 0.0, ..FitConfig::default() }).is_err());
        let one = PairedPValueSet::from_pvalues(vec![0.1], vec![0.3]).unwrap();
        assert!(fit(&one, &FitConfig::default()).is_err());
    }
}
