//! The four-state mixture for paired p-values.
//!
//! Each feature carries hidden states `(θ₁, θ₂)`; `θⱼ = 1` marks a signal in
//! study `j`. Under `θⱼ = 0` the p-value is uniform, under `θⱼ = 1` it follows a
//! non-increasing density `fⱼ`. The joint state has prior mass `ξ_uv`, and a
//! feature is a replicable signal only in state (1, 1).

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Incoming p-values are clamped into `[P_CLAMP, 1 - P_CLAMP]`.
pub const P_CLAMP: f64 = 1e-15;

/// Floor applied to `f₁`, `f₂` wherever they enter a ratio or a logarithm.
pub const DENSITY_FLOOR: f64 = 1e-10;

/// Tolerance on the normalization of step densities.
pub const NORMALIZATION_TOL: f64 = 1e-9;

/// Tolerance on `Σ ξ = 1`.
pub const SIMPLEX_TOL: f64 = 1e-12;

pub fn clamp_p(p: f64) -> f64 {
    p.clamp(P_CLAMP, 1.0 - P_CLAMP)
}

fn check_open_unit(what: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain { what, value })
    }
}

/// Paired p-values `(p₁ᵢ, p₂ᵢ)` for `m` features.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedPValueSet {
    feature_ids: Vec<String>,
    p1: Vec<f64>,
    p2: Vec<f64>,
}

impl PairedPValueSet {
    /// Builds a dataset, clamping every p-value into `[P_CLAMP, 1 - P_CLAMP]`.
    ///
    /// Values outside `[0, 1]` (or NaN) are rejected rather than clamped.
    pub fn new(feature_ids: Vec<String>, p1: Vec<f64>, p2: Vec<f64>) -> Result<Self> {
        let m = feature_ids.len();
        if m == 0 {
            return Err(Error::Empty);
        }
        for len in [p1.len(), p2.len()] {
            if len != m {
                return Err(Error::LengthMismatch { expected: m, found: len });
            }
        }
        let clamp_column = |what: &'static str, col: Vec<f64>| -> Result<Vec<f64>> {
            col.into_iter()
                .map(|p| {
                    if (0.0..=1.0).contains(&p) {
                        Ok(clamp_p(p))
                    } else {
                        Err(Error::Domain { what, value: p })
                    }
                })
                .collect()
        };
        Ok(Self { feature_ids, p1: clamp_column("p1", p1)?, p2: clamp_column("p2", p2)? })
    }

    /// Builds a dataset with identifiers `"1"`, `"2"`, ... in row order.
    pub fn from_pvalues(p1: Vec<f64>, p2: Vec<f64>) -> Result<Self> {
        let ids = (1..=p1.len()).map(|i| i.to_string()).collect();
        Self::new(ids, p1, p2)
    }

    pub fn len(&self) -> usize {
        self.p1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p1.is_empty()
    }

    pub fn feature_ids(&self) -> &[String] {
        &self.feature_ids
    }

    pub fn p1(&self) -> &[f64] {
        &self.p1
    }

    pub fn p2(&self) -> &[f64] {
        &self.p2
    }

    /// Permutes features: row `k` of the result is row `order[k]` of `self`.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        if order.len() != self.len() {
            return Err(Error::LengthMismatch { expected: self.len(), found: order.len() });
        }
        Ok(Self {
            feature_ids: order.iter().map(|&i| self.feature_ids[i].clone()).collect(),
            p1: order.iter().map(|&i| self.p1[i]).collect(),
            p2: order.iter().map(|&i| self.p2[i]).collect(),
        })
    }
}

/// Joint state probabilities `(ξ₀₀, ξ₀₁, ξ₁₀, ξ₁₁)`.
///
/// `ξ₀₁` is the mass of "null in study 1, signal in study 2", `ξ₁₀` the reverse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateProportions {
    pub xi00: f64,
    pub xi01: f64,
    pub xi10: f64,
    pub xi11: f64,
}

impl StateProportions {
    pub fn new(xi00: f64, xi01: f64, xi10: f64, xi11: f64) -> Result<Self> {
        let xi = Self { xi00, xi01, xi10, xi11 };
        let arr = xi.to_array();
        if arr.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidProportions("components must be finite and non-negative"));
        }
        if (arr.iter().sum::<f64>() - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::InvalidProportions("components must sum to one"));
        }
        Ok(xi)
    }

    /// Rescales non-negative weights onto the simplex.
    pub fn normalized(weights: [f64; 4]) -> Result<Self> {
        if weights.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidProportions("components must be finite and non-negative"));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::InvalidProportions("components sum to zero"));
        }
        Ok(Self::from_array(weights.map(|w| w / total)))
    }

    /// Component order is `[ξ₀₀, ξ₀₁, ξ₁₀, ξ₁₁]`.
    pub fn to_array(&self) -> [f64; 4] {
        [self.xi00, self.xi01, self.xi10, self.xi11]
    }

    fn from_array(a: [f64; 4]) -> Self {
        Self { xi00: a[0], xi01: a[1], xi10: a[2], xi11: a[3] }
    }

    /// Marginal null probability of study 1, `ξ₀₀ + ξ₀₁`.
    pub fn null1(&self) -> f64 {
        self.xi00 + self.xi01
    }

    /// Marginal null probability of study 2, `ξ₀₀ + ξ₁₀`.
    pub fn null2(&self) -> f64 {
        self.xi00 + self.xi10
    }
}

/// A density on (0, 1), evaluated without domain checks.
pub trait Density {
    /// Value at `x`; callers guarantee `0 < x < 1`.
    fn value(&self, x: f64) -> f64;
}

impl<D: Density + ?Sized> Density for &D {
    fn value(&self, x: f64) -> f64 {
        (**self).value(x)
    }
}

/// Non-increasing, left-continuous step density on (0, 1).
///
/// Takes the value `heights[k]` on `(knots[k-1], knots[k]]` (with an implicit
/// `knots[-1] = 0`) and zero beyond the last knot.
#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneStepDensity {
    knots: Vec<f64>,
    heights: Vec<f64>,
}

impl MonotoneStepDensity {
    pub fn new(knots: Vec<f64>, heights: Vec<f64>) -> Result<Self> {
        if knots.is_empty() {
            return Err(Error::InvalidDensity("no knots"));
        }
        if knots.len() != heights.len() {
            return Err(Error::LengthMismatch { expected: knots.len(), found: heights.len() });
        }
        let mut prev = 0.0;
        for &k in &knots {
            if !(k > prev && k <= 1.0) {
                return Err(Error::InvalidDensity("knots must be strictly increasing in (0, 1]"));
            }
            prev = k;
        }
        if heights.iter().any(|h| !h.is_finite() || *h < 0.0) {
            return Err(Error::InvalidDensity("heights must be finite and non-negative"));
        }
        if heights.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::InvalidDensity("heights must be non-increasing"));
        }
        let density = Self { knots, heights };
        if (density.integral() - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::InvalidDensity("density does not integrate to one"));
        }
        Ok(density)
    }

    /// Caller guarantees the invariants up to rounding.
    pub(crate) fn from_parts(knots: Vec<f64>, heights: Vec<f64>) -> Self {
        debug_assert_eq!(knots.len(), heights.len());
        Self { knots, heights }
    }

    /// The uniform density on (0, 1).
    pub fn uniform() -> Self {
        Self { knots: alloc::vec![1.0], heights: alloc::vec![1.0] }
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn heights(&self) -> &[f64] {
        &self.heights
    }

    pub fn len(&self) -> usize {
        self.knots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.knots.is_empty()
    }

    pub fn integral(&self) -> f64 {
        let mut prev = 0.0;
        let mut total = 0.0;
        for (&k, &h) in self.knots.iter().zip(&self.heights) {
            total += h * (k - prev);
            prev = k;
        }
        total
    }

    /// Checked evaluation; `x` must lie in (0, 1).
    pub fn eval(&self, x: f64) -> Result<f64> {
        check_open_unit("x", x)?;
        Ok(self.value(x))
    }
}

impl Density for MonotoneStepDensity {
    fn value(&self, x: f64) -> f64 {
        let k = self.knots.partition_point(|&knot| knot < x);
        self.heights.get(k).copied().unwrap_or(0.0)
    }
}

/// Hidden signal indicators for both studies.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HiddenStates {
    pub theta1: Vec<bool>,
    pub theta2: Vec<bool>,
}

impl HiddenStates {
    pub fn new(theta1: Vec<bool>, theta2: Vec<bool>) -> Result<Self> {
        if theta1.len() != theta2.len() {
            return Err(Error::LengthMismatch { expected: theta1.len(), found: theta2.len() });
        }
        Ok(Self { theta1, theta2 })
    }

    pub fn len(&self) -> usize {
        self.theta1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta1.is_empty()
    }

    /// True iff feature `i` is a signal in both studies.
    pub fn is_replicable(&self, i: usize) -> bool {
        self.theta1[i] && self.theta2[i]
    }

    pub fn replicable_count(&self) -> usize {
        (0..self.len()).filter(|&i| self.is_replicable(i)).count()
    }
}

/// Proportions plus the two non-null densities; `f₀` is uniform and implicit.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureModel<D = MonotoneStepDensity> {
    pub proportions: StateProportions,
    pub f1: D,
    pub f2: D,
}

impl<D: Density> MixtureModel<D> {
    pub fn new(proportions: StateProportions, f1: D, f2: D) -> Self {
        Self { proportions, f1, f2 }
    }

    /// Joint density `ξ₀₀ + ξ₁₀f₁(x) + ξ₀₁f₂(y) + ξ₁₁f₁(x)f₂(y)`.
    pub fn mixture_density(&self, x: f64, y: f64) -> Result<f64> {
        check_open_unit("x", x)?;
        check_open_unit("y", y)?;
        Ok(self.density_unchecked(x, y))
    }

    pub(crate) fn density_unchecked(&self, x: f64, y: f64) -> f64 {
        let xi = &self.proportions;
        let a = self.f1.value(x);
        let b = self.f2.value(y);
        xi.xi00 + xi.xi10 * a + xi.xi01 * b + xi.xi11 * a * b
    }

    /// The four unnormalized state weights `ξ_uv f₁(x)^u f₂(y)^v` with floored
    /// densities, in `[00, 01, 10, 11]` order.
    pub(crate) fn state_weights(&self, x: f64, y: f64) -> [f64; 4] {
        let xi = &self.proportions;
        let a = self.f1.value(x).max(DENSITY_FLOOR);
        let b = self.f2.value(y).max(DENSITY_FLOOR);
        [xi.xi00, xi.xi01 * b, xi.xi10 * a, xi.xi11 * a * b]
    }

    /// Local false discovery rate: the posterior probability of the
    /// replicability null `θ₁θ₂ = 0` given `(x, y)`.
    pub fn lfdr(&self, x: f64, y: f64) -> Result<f64> {
        check_open_unit("x", x)?;
        check_open_unit("y", y)?;
        lfdr_from_weights(self.state_weights(x, y))
    }

    /// Lfdr for every feature of `data`, in row order.
    pub fn lfdr_values(&self, data: &PairedPValueSet) -> Result<Vec<f64>> {
        data.p1()
            .iter()
            .zip(data.p2())
            .map(|(&x, &y)| lfdr_from_weights(self.state_weights(x, y)))
            .collect()
    }
}

fn lfdr_from_weights(w: [f64; 4]) -> Result<f64> {
    let null = w[0] + w[1] + w[2];
    let total = null + w[3];
    if !(total >= f64::MIN_POSITIVE) || !total.is_finite() {
        return Err(Error::DegenerateModel("mixture density vanishes"));
    }
    Ok((null / total).clamp(0.0, 1.0))
}
