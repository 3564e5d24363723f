//! Slow reference implementations used by `selftest` and the acceptance suite.
//!
//! None of these share code with the fast paths they check.

/// Distinct sorted support points (ties within `1e-12` merged, keeping the
/// largest) with their summed weights.
fn merged_support(points: &[f64], weights: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut pairs: Vec<(f64, f64)> = points.iter().copied().zip(weights.iter().copied()).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut xs: Vec<f64> = Vec::new();
    let mut ws: Vec<f64> = Vec::new();
    for (x, w) in pairs {
        match xs.last_mut() {
            Some(last) if x - *last <= 1e-12 => {
                *last = x;
                *ws.last_mut().unwrap() += w;
            }
            _ => {
                xs.push(x);
                ws.push(w);
            }
        }
    }
    (xs, ws)
}

/// Best weighted log-likelihood over every split of the sorted support into
/// contiguous blocks whose block-average heights are non-increasing.
///
/// Returns the log-likelihood and the height at each distinct support point.
pub fn partition_mle(points: &[f64], weights: &[f64]) -> (f64, Vec<f64>) {
    let (xs, ws) = merged_support(points, weights);
    let n = xs.len();
    assert!(n <= 20, "exhaustive search is exponential in the support size");
    let total: f64 = ws.iter().sum();
    let mut best = (f64::NEG_INFINITY, vec![0.0; n]);
    for mask in 0u32..(1 << (n - 1)) {
        // Bit `i` set means a block ends after support point `i`.
        let mut heights = vec![0.0; n];
        let mut start = 0;
        let mut feasible = true;
        let mut prev = f64::INFINITY;
        for end in 0..n {
            if end == n - 1 || mask & (1 << end) != 0 {
                let left = if start == 0 { 0.0 } else { xs[start - 1] };
                let mass: f64 = ws[start..=end].iter().sum();
                let h = mass / (total * (xs[end] - left));
                if h > prev * (1.0 + 1e-12) {
                    feasible = false;
                    break;
                }
                prev = h;
                heights[start..=end].fill(h);
                start = end + 1;
            }
        }
        if !feasible {
            continue;
        }
        let ll: f64 = ws.iter().zip(&heights).filter(|(&w, _)| w > 0.0).map(|(&w, &h)| w * h.ln()).sum();
        if ll > best.0 {
            best = (ll, heights);
        }
    }
    best
}

/// `f(xⱼ) = min_{s ≤ j} max_{t ≥ j} W[s..t] / (W · (x_t − x_{s−1}))` at each distinct point.
pub fn max_min_density(points: &[f64], weights: &[f64]) -> Vec<f64> {
    let (xs, ws) = merged_support(points, weights);
    let n = xs.len();
    let total: f64 = ws.iter().sum();
    let avg = |s: usize, t: usize| {
        let left = if s == 0 { 0.0 } else { xs[s - 1] };
        ws[s..=t].iter().sum::<f64>() / (total * (xs[t] - left))
    };
    (0..n)
        .map(|j| (0..=j).map(|s| (j..n).map(|t| avg(s, t)).fold(f64::NEG_INFINITY, f64::max)).fold(f64::INFINITY, f64::min))
        .collect()
}

/// Distinct sorted support points, for evaluating a fitted density against the oracles.
pub fn support(points: &[f64]) -> Vec<f64> {
    merged_support(points, &vec![0.0; points.len()]).0
}

/// Largest set `{i : vᵢ ≤ t}` over all thresholds `t` with mean at most `alpha`
/// (sum compared with slack `1e-12` per element).
pub fn step_up_by_thresholds(values: &[f64], alpha: f64) -> Vec<bool> {
    let mut best = vec![false; values.len()];
    let mut best_count = 0;
    for &t in values {
        let set: Vec<bool> = values.iter().map(|&v| v <= t).collect();
        let count = set.iter().filter(|&&z| z).count();
        let sum: f64 = values.iter().filter(|&&v| v <= t).sum();
        if sum - alpha * count as f64 <= 1e-12 * count as f64 && count > best_count {
            best_count = count;
            best = set;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_point_examples() {
        let (_, h) = partition_mle(&[0.2, 0.6], &[1.0, 1.0]);
        assert!((h[0] - 2.5).abs() < 1e-12 && (h[1] - 1.25).abs() < 1e-12);
        let h = max_min_density(&[0.2, 0.6], &[1.0, 1.0]);
        assert!((h[0] - 2.5).abs() < 1e-12 && (h[1] - 1.25).abs() < 1e-12);
        // A violating pair pools into one block.
        let (_, h) = partition_mle(&[0.5, 0.6], &[1.0, 1.0]);
        assert!((h[0] - 1.0 / 0.6).abs() < 1e-12 && h[0] == h[1]);
    }

    #[test]
    fn threshold_search_examples() {
        assert_eq!(step_up_by_thresholds(&[0.01, 0.02, 0.1, 0.3, 0.9], 0.05), [true, true, true, false, false]);
        assert_eq!(step_up_by_thresholds(&[0.09, 0.01, 0.09], 0.05), [false, true, false]);
        assert_eq!(step_up_by_thresholds(&[0.5], 0.05), [false]);
    }
}
