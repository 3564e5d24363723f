//! Weighted maximum likelihood for non-increasing densities on (0, 1).
//!
//! For ordered distinct points `x₁ < … < xₙ` with weights `w₁, …, wₙ` the
//! problem is
//!
//! ```text
//! maximize  Σ wᵢ log yᵢ   over  y₁ ≥ y₂ ≥ … ≥ yₙ ≥ 0,   subject to  Σ Δᵢ yᵢ = 1,
//! ```
//!
//! with gaps `Δᵢ = xᵢ − xᵢ₋₁` and `x₀ = 0`. Without the order constraint the
//! solution is `yᵢ = wᵢ / (W Δᵢ)`; with it, adjacent violators are pooled and a
//! block `[a, b]` takes the height `Σ w / (W Σ Δ)`. Pooling ratios of sums is the
//! same stack algorithm as weighted least-squares isotonic regression, so both
//! share [`pool_blocks`].

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::model::MonotoneStepDensity;

/// Points closer than this are merged before fitting.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// Weights below this are treated as zero.
pub const WEIGHT_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    NonIncreasing,
    NonDecreasing,
}

/// A pooled run of consecutive inputs with value `num / den`.
#[derive(Debug, Clone, Copy)]
struct Block {
    num: f64,
    den: f64,
    len: usize,
}

impl Block {
    /// `self` followed by `next` breaks the requested order. Blocks without
    /// denominator mass have no value of their own and always pool.
    fn violates(&self, next: &Block, direction: Direction) -> bool {
        if self.den == 0.0 || next.den == 0.0 {
            return true;
        }
        let lhs = self.num * next.den;
        let rhs = next.num * self.den;
        match direction {
            Direction::NonIncreasing => lhs < rhs,
            Direction::NonDecreasing => lhs > rhs,
        }
    }
}

/// Stack-based pool-adjacent-violators over ratio-valued blocks.
fn pool_blocks(nums: &[f64], dens: &[f64], direction: Direction) -> Vec<Block> {
    let mut stack: Vec<Block> = Vec::with_capacity(nums.len());
    for (&num, &den) in nums.iter().zip(dens) {
        let mut top = Block { num, den, len: 1 };
        while let Some(prev) = stack.last() {
            if !prev.violates(&top, direction) {
                break;
            }
            top = Block { num: prev.num + top.num, den: prev.den + top.den, len: prev.len + top.len };
            stack.pop();
        }
        stack.push(top);
    }
    stack
}

/// Weighted least-squares projection of `targets` onto the monotone cone.
///
/// Zero-weight entries take the value of the block they are pooled into.
pub fn pava_isotonic(targets: &[f64], weights: &[f64], direction: Direction) -> Result<Vec<f64>> {
    if targets.len() != weights.len() {
        return Err(Error::LengthMismatch { expected: targets.len(), found: weights.len() });
    }
    if targets.is_empty() {
        return Err(Error::Empty);
    }
    if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
        return Err(Error::param("weights", "must be finite and non-negative"));
    }
    if targets.iter().any(|t| !t.is_finite()) {
        return Err(Error::param("targets", "must be finite"));
    }
    if weights.iter().all(|&w| w == 0.0) {
        return Err(Error::DegenerateSample);
    }
    let nums: Vec<f64> = targets.iter().zip(weights).map(|(t, w)| t * w).collect();
    let blocks = pool_blocks(&nums, weights, direction);
    let mut out = Vec::with_capacity(targets.len());
    for b in blocks {
        let v = b.num / b.den;
        out.extend(core::iter::repeat(v).take(b.len));
    }
    Ok(out)
}

/// Points in (0, 1) with non-negative weights.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedSample {
    points: Vec<f64>,
    weights: Vec<f64>,
}

impl WeightedSample {
    pub fn new(points: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if points.len() != weights.len() {
            return Err(Error::LengthMismatch { expected: points.len(), found: weights.len() });
        }
        if points.is_empty() {
            return Err(Error::Empty);
        }
        if let Some(&p) = points.iter().find(|&&p| !(p > 0.0 && p < 1.0)) {
            return Err(Error::Domain { what: "point", value: p });
        }
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::param("weights", "must be finite and non-negative"));
        }
        if !(weights.iter().sum::<f64>() > 0.0) {
            return Err(Error::DegenerateSample);
        }
        Ok(Self { points, weights })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

/// The sorted, de-duplicated support of a fixed set of points.
///
/// EM refits densities on the same p-values with new weights every iteration;
/// building this once avoids re-sorting.
#[derive(Debug, Clone)]
pub struct SortedSupport {
    /// Group index of each input point, in input order.
    group_of: Vec<usize>,
    /// Right end (largest member) of each group, increasing.
    representatives: Vec<f64>,
    /// `representatives[g] - representatives[g - 1]`, with 0 before the first.
    gaps: Vec<f64>,
}

impl SortedSupport {
    pub fn new(points: &[f64]) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Empty);
        }
        if let Some(&p) = points.iter().find(|&&p| !(p > 0.0 && p < 1.0)) {
            return Err(Error::Domain { what: "point", value: p });
        }
        let mut order: Vec<usize> = (0..points.len()).collect();
        order.sort_by(|&a, &b| points[a].total_cmp(&points[b]));

        let mut group_of = alloc::vec![0usize; points.len()];
        let mut representatives: Vec<f64> = Vec::new();
        for &i in &order {
            let x = points[i];
            match representatives.last_mut() {
                Some(last) if x - *last <= TIE_TOLERANCE => *last = x,
                _ => representatives.push(x),
            }
            group_of[i] = representatives.len() - 1;
        }
        let mut prev = 0.0;
        let gaps = representatives
            .iter()
            .map(|&r| {
                let g = r - prev;
                prev = r;
                g
            })
            .collect();
        Ok(Self { group_of, representatives, gaps })
    }

    /// Number of input points.
    pub fn len(&self) -> usize {
        self.group_of.len()
    }

    pub fn is_empty(&self) -> bool {
        self.group_of.is_empty()
    }

    /// Number of distinct support points after tie merging.
    pub fn distinct(&self) -> usize {
        self.representatives.len()
    }

    /// Fits the weighted non-increasing MLE; `weights` follow input order.
    pub fn fit(&self, weights: &[f64]) -> Result<MonotoneStepDensity> {
        if weights.len() != self.len() {
            return Err(Error::LengthMismatch { expected: self.len(), found: weights.len() });
        }
        let mut group_weight = alloc::vec![0.0; self.distinct()];
        for (&g, &w) in self.group_of.iter().zip(weights) {
            if !(w >= 0.0) || !w.is_finite() {
                return Err(Error::param("weights", "must be finite and non-negative"));
            }
            if w >= WEIGHT_FLOOR {
                group_weight[g] += w;
            }
        }
        let total: f64 = group_weight.iter().sum();
        if !(total > 0.0) {
            return Err(Error::DegenerateSample);
        }

        let blocks = pool_blocks(&group_weight, &self.gaps, Direction::NonIncreasing);
        let mut knots = Vec::with_capacity(blocks.len());
        let mut heights: Vec<f64> = Vec::with_capacity(blocks.len());
        let mut end = 0usize;
        for b in &blocks {
            end += b.len;
            if b.num == 0.0 {
                // Only a trailing block can have no weight; the density is zero there.
                break;
            }
            let mut h = b.num / (total * b.den);
            if let Some(&last) = heights.last() {
                // Ratios that compare equal under cross-multiplication may
                // still differ by an ulp after division.
                h = h.min(last);
            }
            knots.push(self.representatives[end - 1]);
            heights.push(h);
        }
        Ok(MonotoneStepDensity::from_parts(knots, heights))
    }
}

/// Weighted non-parametric MLE of a non-increasing density on (0, 1).
pub fn weighted_monotone_mle(sample: &WeightedSample) -> Result<MonotoneStepDensity> {
    SortedSupport::new(&sample.points)?.fit(&sample.weights)
}

/// Weighted log-likelihood `Σ wᵢ log f(xᵢ)`; `-∞` if a weighted point has zero density.
pub fn weighted_log_likelihood(density: &MonotoneStepDensity, sample: &WeightedSample) -> f64 {
    use crate::model::Density;
    sample
        .points
        .iter()
        .zip(&sample.weights)
        .filter(|(_, &w)| w >= WEIGHT_FLOOR)
        .map(|(&x, &w)| w * libm::log(density.value(x)))
        .sum()
}
