//! Lfdr step-up FDR control.
//!
//! Sorting the Lfdr values ascending, the procedure rejects the `k` smallest
//! where `k` is the largest cut whose running mean stays at or below `α`.
//! Because rejection is by threshold (`Lfdr ≤ λ̂`), a cut never separates tied
//! values: only cuts at the end of a tie group are candidates.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Slack on `Σ Lfdr ≤ α k` that absorbs summation rounding.
pub const FDP_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct RejectionResult {
    pub reject: Vec<bool>,
    pub lfdr_values: Vec<f64>,
    pub k_rejected: usize,
    pub lambda_hat: f64,
    pub estimated_fdp: f64,
    pub alpha: f64,
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::param("alpha", "must lie in (0, 1)"))
    }
}

fn check_values(values: &[f64]) -> Result<()> {
    if values.is_empty() {
        return Err(Error::Empty);
    }
    match values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        Some(&v) => Err(Error::param("lfdr", alloc::format!("value {v} is outside [0, 1]"))),
        None => Ok(()),
    }
}

fn within(sum: f64, k: usize, alpha: f64) -> bool {
    sum - alpha * k as f64 <= FDP_SLACK * k as f64
}

pub fn step_up(lfdr_values: &[f64], alpha: f64) -> Result<RejectionResult> {
    check_values(lfdr_values)?;
    check_alpha(alpha)?;
    let m = lfdr_values.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| lfdr_values[a].total_cmp(&lfdr_values[b]));

    let mut sum = 0.0;
    let mut best = (0usize, 0.0f64);
    for (pos, &i) in order.iter().enumerate() {
        let v = lfdr_values[i];
        sum += v;
        let k = pos + 1;
        let group_end = k == m || lfdr_values[order[k]] > v;
        if group_end && within(sum, k, alpha) {
            best = (k, sum);
        }
    }

    let (k, sum) = best;
    let mut reject = vec![false; m];
    for &i in &order[..k] {
        reject[i] = true;
    }
    let (lambda_hat, estimated_fdp) =
        if k == 0 { (0.0, 0.0) } else { (lfdr_values[order[k - 1]], sum / k as f64) };
    Ok(RejectionResult {
        reject,
        lfdr_values: lfdr_values.to_vec(),
        k_rejected: k,
        lambda_hat,
        estimated_fdp,
        alpha,
    })
}

/// `Σ Lfdr·I{Lfdr ≤ λ} / Σ I{Lfdr ≤ λ}`, or 0 when nothing falls below `λ`.
pub fn estimated_fdp_at(lfdr_values: &[f64], lambda: f64) -> f64 {
    let (sum, count) = lfdr_values
        .iter()
        .filter(|&&v| v <= lambda)
        .fold((0.0, 0usize), |(s, c), &v| (s + v, c + 1));
    if count == 0 {
        0.0
    } else {
        sum / count as f64
    }
}

/// Largest `λ` among `{0} ∪ {observed values}` whose estimated FDP is at most `α`.
///
/// Thresholding at the returned value reproduces [`step_up`]'s rejection set.
pub fn critical_value(lfdr_values: &[f64], alpha: f64) -> Result<f64> {
    check_values(lfdr_values)?;
    check_alpha(alpha)?;
    let mut sorted = lfdr_values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut best = 0.0;
    let mut sum = 0.0;
    for (pos, &v) in sorted.iter().enumerate() {
        sum += v;
        let k = pos + 1;
        if (k == sorted.len() || sorted[k] > v) && within(sum, k, alpha) {
            best = v;
        }
    }
    Ok(best)
}
