//! Competing replicability procedures and Storey-type proportion estimators.
//!
//! All procedures return rejection flags aligned with the input feature order.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::linalg::polyfit_eval;
use crate::model::{PairedPValueSet, StateProportions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Method {
    AdhocBh,
    MaxP,
    Jump,
    Marr,
    Radjust,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::AdhocBh, Method::MaxP, Method::Jump, Method::Marr, Method::Radjust];

    pub fn name(self) -> &'static str {
        match self {
            Method::AdhocBh => "adhoc-bh",
            Method::MaxP => "maxp",
            Method::Jump => "jump",
            Method::Marr => "marr",
            Method::Radjust => "radjust",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.name() == name)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineResult {
    pub method: Method,
    pub reject: Vec<bool>,
    pub auxiliary: BTreeMap<&'static str, f64>,
}

impl BaselineResult {
    pub fn rejections(&self) -> usize {
        self.reject.iter().filter(|&&r| r).count()
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::param("alpha", "must lie in (0, 1)"))
    }
}

fn sorted_order(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    order
}

/// Benjamini–Hochberg step-up at level `alpha`.
pub fn bh(pvalues: &[f64], alpha: f64) -> Result<Vec<bool>> {
    if pvalues.is_empty() {
        return Err(Error::Empty);
    }
    check_alpha(alpha)?;
    if let Some(&p) = pvalues.iter().find(|p| !(**p > 0.0 && **p <= 1.0)) {
        return Err(Error::Domain { what: "p-value", value: p });
    }
    let m = pvalues.len();
    let order = sorted_order(pvalues);
    let k_hat = order
        .iter()
        .enumerate()
        .rev()
        .find(|(pos, &i)| pvalues[i] <= (pos + 1) as f64 * alpha / m as f64)
        .map_or(0, |(pos, _)| pos + 1);
    let mut reject = vec![false; m];
    for &i in &order[..k_hat] {
        reject[i] = true;
    }
    Ok(reject)
}

/// BH in each study separately; replicable features are rejected by both.
pub fn adhoc_bh(data: &PairedPValueSet, alpha: f64) -> Result<BaselineResult> {
    let r1 = bh(data.p1(), alpha)?;
    let r2 = bh(data.p2(), alpha)?;
    let reject: Vec<bool> = r1.iter().zip(&r2).map(|(&a, &b)| a && b).collect();
    let mut auxiliary = BTreeMap::new();
    auxiliary.insert("study1_rejections", r1.iter().filter(|&&r| r).count() as f64);
    auxiliary.insert("study2_rejections", r2.iter().filter(|&&r| r).count() as f64);
    Ok(BaselineResult { method: Method::AdhocBh, reject, auxiliary })
}

pub fn max_pvalues(data: &PairedPValueSet) -> Vec<f64> {
    data.p1().iter().zip(data.p2()).map(|(&a, &b)| a.max(b)).collect()
}

/// BH applied to `qᵢ = max(p₁ᵢ, p₂ᵢ)`.
pub fn maxp(data: &PairedPValueSet, alpha: f64) -> Result<BaselineResult> {
    let reject = bh(&max_pvalues(data), alpha)?;
    Ok(BaselineResult { method: Method::MaxP, reject, auxiliary: BTreeMap::new() })
}

/// How a Storey tuning parameter is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LambdaChoice {
    Fixed(f64),
    /// Cubic least-squares smoother over `λ ∈ {0.05, …, 0.95}`, read off at 0.95.
    Auto,
}

impl Default for LambdaChoice {
    fn default() -> Self {
        LambdaChoice::Fixed(0.5)
    }
}

impl LambdaChoice {
    fn validate(self) -> Result<Self> {
        match self {
            LambdaChoice::Fixed(l) if !(l > 0.0 && l < 1.0) => {
                Err(Error::param("lambda", "must lie in (0, 1)"))
            }
            other => Ok(other),
        }
    }
}

/// Tuning parameters `λ₁`, `λ₂` (per-study null proportions) and `λ₃` (joint null).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StoreyLambdas {
    pub lambda1: LambdaChoice,
    pub lambda2: LambdaChoice,
    pub lambda3: LambdaChoice,
}

impl StoreyLambdas {
    pub fn uniform(choice: LambdaChoice) -> Self {
        Self { lambda1: choice, lambda2: choice, lambda3: choice }
    }
}

const SMOOTHING_GRID: usize = 19;

fn smoothing_grid() -> impl Iterator<Item = f64> {
    (1..=SMOOTHING_GRID).map(|k| k as f64 * 0.05)
}

/// `#{pᵢ ≥ λ} / (m(1 − λ))`; not truncated at one.
pub fn storey_pi0(pvalues: &[f64], lambda: f64) -> f64 {
    let count = pvalues.iter().filter(|&&p| p >= lambda).count();
    count as f64 / (pvalues.len() as f64 * (1.0 - lambda))
}

/// `#{p₁ᵢ ≥ λ, p₂ᵢ ≥ λ} / (m(1 − λ)²)`; not truncated at one.
pub fn joint_xi00(data: &PairedPValueSet, lambda: f64) -> f64 {
    let count = data.p1().iter().zip(data.p2()).filter(|(&a, &b)| a >= lambda && b >= lambda).count();
    let q = 1.0 - lambda;
    count as f64 / (data.len() as f64 * q * q)
}

fn smoothed(estimator: impl Fn(f64) -> f64) -> f64 {
    let xs: Vec<f64> = smoothing_grid().collect();
    let ys: Vec<f64> = xs.iter().map(|&l| estimator(l)).collect();
    polyfit_eval(&xs, &ys, 3, xs[xs.len() - 1]).max(0.0)
}

pub fn pi0_estimate(pvalues: &[f64], choice: LambdaChoice) -> Result<f64> {
    Ok(match choice.validate()? {
        LambdaChoice::Fixed(l) => storey_pi0(pvalues, l),
        LambdaChoice::Auto => smoothed(|l| storey_pi0(pvalues, l)),
    })
}

pub fn xi00_estimate(data: &PairedPValueSet, choice: LambdaChoice) -> Result<f64> {
    Ok(match choice.validate()? {
        LambdaChoice::Fixed(l) => joint_xi00(data, l),
        LambdaChoice::Auto => smoothed(|l| joint_xi00(data, l)),
    })
}

/// Raw Storey-type estimates `(π̂₀⁽¹⁾, π̂₀⁽²⁾, ξ̂₀₀)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StoreyEstimates {
    pub pi0_study1: f64,
    pub pi0_study2: f64,
    pub xi00: f64,
}

pub fn storey_estimates(data: &PairedPValueSet, lambdas: StoreyLambdas) -> Result<StoreyEstimates> {
    Ok(StoreyEstimates {
        pi0_study1: pi0_estimate(data.p1(), lambdas.lambda1)?,
        pi0_study2: pi0_estimate(data.p2(), lambdas.lambda2)?,
        xi00: xi00_estimate(data, lambdas.lambda3)?,
    })
}

/// Floor used when moment-based proportions are pushed back onto the simplex.
pub const PROPORTION_FLOOR: f64 = 1e-6;

/// Moment-based state proportions: `ξ̂₀₁ = π̂₀⁽¹⁾ − ξ̂₀₀`, `ξ̂₁₀ = π̂₀⁽²⁾ − ξ̂₀₀`,
/// `ξ̂₁₁ = 1 − ξ̂₀₀ − ξ̂₀₁ − ξ̂₁₀`. Storey estimates are capped at 1 and the
/// differences clipped at 0 before `ξ̂₁₁` is formed, then everything is
/// floored at [`PROPORTION_FLOOR`] and renormalized.
pub fn conservative_proportions(data: &PairedPValueSet, lambdas: StoreyLambdas) -> Result<StateProportions> {
    let est = storey_estimates(data, lambdas)?;
    let xi00 = est.xi00.min(1.0);
    let xi01 = (est.pi0_study1.min(1.0) - xi00).max(0.0);
    let xi10 = (est.pi0_study2.min(1.0) - xi00).max(0.0);
    let xi11 = 1.0 - xi00 - xi01 - xi10;
    let raw = [xi00, xi01, xi10, xi11];
    if raw.iter().any(|v| !v.is_finite()) {
        return Err(Error::DegenerateModel("non-finite proportion estimate"));
    }
    let xi = StateProportions::normalized(raw.map(|v| v.max(PROPORTION_FLOOR)))?;
    if !(xi.xi11 > 0.0) {
        return Err(Error::DegenerateModel("no replicable-signal mass"));
    }
    Ok(xi)
}

/// `FDR̂*(t) = m(ξ₀₀t² + ξ₀₁t + ξ₁₀t) / max(R(t), 1)` with `R(t) = #{pᵢᵐᵃˣ ≤ t}`.
pub fn jump_fdr_estimate(m: usize, xi00: f64, xi01: f64, xi10: f64, t: f64, rejections: usize) -> f64 {
    m as f64 * (xi00 * t * t + (xi01 + xi10) * t) / rejections.max(1) as f64
}

/// JUMP step-up on `pᵐᵃˣ` with given (already clipped) proportion estimates.
pub fn jump_with_proportions(pmax: &[f64], xi00: f64, xi01: f64, xi10: f64, alpha: f64) -> Result<(Vec<bool>, usize)> {
    if pmax.is_empty() {
        return Err(Error::Empty);
    }
    check_alpha(alpha)?;
    let m = pmax.len();
    let order = sorted_order(pmax);
    let mut k_hat = 0;
    let mut pos = 0;
    while pos < m {
        // R(t) counts every value ≤ t, so evaluate once per tie group.
        let t = pmax[order[pos]];
        let mut end = pos + 1;
        while end < m && pmax[order[end]] <= t {
            end += 1;
        }
        if jump_fdr_estimate(m, xi00, xi01, xi10, t, end) <= alpha {
            k_hat = end;
        }
        pos = end;
    }
    let mut reject = vec![false; m];
    for &i in &order[..k_hat] {
        reject[i] = true;
    }
    Ok((reject, k_hat))
}

pub fn jump(data: &PairedPValueSet, alpha: f64, lambdas: StoreyLambdas) -> Result<BaselineResult> {
    let est = storey_estimates(data, lambdas)?;
    let pi1 = est.pi0_study1.min(1.0);
    let pi2 = est.pi0_study2.min(1.0);
    let xi00 = est.xi00.min(1.0);
    let xi01 = (pi1 - xi00).max(0.0);
    let xi10 = (pi2 - xi00).max(0.0);
    let (reject, k_hat) = jump_with_proportions(&max_pvalues(data), xi00, xi01, xi10, alpha)?;
    let mut auxiliary = BTreeMap::new();
    auxiliary.insert("xi00", xi00);
    auxiliary.insert("xi01", xi01);
    auxiliary.insert("xi10", xi10);
    auxiliary.insert("k_hat", k_hat as f64);
    Ok(BaselineResult { method: Method::Jump, reject, auxiliary })
}

/// 1-based ascending ranks with ties broken by original position.
pub fn ranks(values: &[f64]) -> Vec<usize> {
    let mut r = vec![0; values.len()];
    for (pos, i) in sorted_order(values).into_iter().enumerate() {
        r[i] = pos + 1;
    }
    r
}

pub fn max_ranks(data: &PairedPValueSet) -> Vec<usize> {
    let r1 = ranks(data.p1());
    let r2 = ranks(data.p2());
    r1.iter().zip(&r2).map(|(&a, &b)| a.max(b)).collect()
}

/// Limiting null survival of `M/m` when a fraction `pi1` is reproducible.
pub fn marr_null_survival(pi1: f64, x: f64) -> f64 {
    if x < pi1 {
        1.0
    } else if x <= 1.0 {
        let q = 1.0 - pi1;
        1.0 - (x - pi1) * (x - pi1) / (q * q)
    } else {
        0.0
    }
}

/// `Ŝₘ(j/m)` for `j = 0..=m`: the fraction of features with `Mᵢ ≥ j`.
pub fn marr_empirical_survival(max_ranks: &[usize]) -> Vec<f64> {
    let m = max_ranks.len();
    let mut at = vec![0usize; m + 2];
    for &r in max_ranks {
        at[r.min(m)] += 1;
    }
    let mut surv = vec![0.0; m + 1];
    let mut tail = 0usize;
    for j in (0..=m).rev() {
        tail += at[j];
        surv[j] = tail as f64 / m as f64;
    }
    surv
}

/// `MSE(i/m)` for `i = 0..=⌊0.9m⌋`, via suffix sums over `j = i..=m`.
pub fn marr_mse_curve(surv: &[f64]) -> Vec<f64> {
    let m = surv.len() - 1;
    let mf = m as f64;
    // Suffix sums of aʲxᵏ terms: index 0..=8 = [1, x, x², x³, x⁴, a, ax, ax², a²].
    let mut suffix = vec![[0.0f64; 9]; m + 2];
    for j in (0..=m).rev() {
        let x = j as f64 / mf;
        let a = surv[j];
        let x2 = x * x;
        let row = [1.0, x, x2, x2 * x, x2 * x2, a, a * x, a * x2, a * a];
        let mut next = suffix[j + 1];
        for (acc, v) in next.iter_mut().zip(row) {
            *acc += v;
        }
        suffix[j] = next;
    }
    let upper = 9 * m / 10;
    (0..=upper)
        .map(|i| {
            let pi = i as f64 / mf;
            let c = 1.0 - pi;
            // residual = a + α₀ + α₁x + α₂x²
            let a0 = -c + pi * pi / c;
            let a1 = -2.0 * pi / c;
            let a2 = 1.0 / c;
            let [s0, s1, s2, s3, s4, sa, sax, sax2, saa] = suffix[i];
            let total = saa
                + a0 * a0 * s0
                + a1 * a1 * s2
                + a2 * a2 * s4
                + 2.0 * (a0 * sa + a1 * sax + a2 * sax2)
                + 2.0 * (a0 * a1 * s1 + a0 * a2 * s2 + a1 * a2 * s3);
            total.max(0.0) / (mf - i as f64)
        })
        .collect()
}

pub fn marr(data: &PairedPValueSet, alpha: f64) -> Result<BaselineResult> {
    check_alpha(alpha)?;
    let m = data.len();
    if m < 2 {
        return Err(Error::param("m", "MaRR needs at least two features"));
    }
    let mr = max_ranks(data);
    let surv = marr_empirical_survival(&mr);
    let mse = marr_mse_curve(&surv);
    let k_hat = mse
        .iter()
        .enumerate()
        .fold((0usize, f64::INFINITY), |best, (i, &v)| if v < best.1 { (i, v) } else { best })
        .0;

    // Q(i) = #{Mⱼ ≤ i}
    let mut q = vec![0usize; m + 1];
    for &r in &mr {
        q[r] += 1;
    }
    for i in 1..=m {
        q[i] += q[i - 1];
    }
    let denom_scale = (m - k_hat) as f64;
    let n_hat = (k_hat + 1..=m)
        .rev()
        .find(|&i| {
            q[i] > 0 && {
                let d = (i - k_hat) as f64;
                d * d / (q[i] as f64 * denom_scale) <= alpha
            }
        })
        .unwrap_or(0);
    let reject = mr.iter().map(|&r| r <= n_hat).collect();
    let mut auxiliary = BTreeMap::new();
    auxiliary.insert("k_hat", k_hat as f64);
    auxiliary.insert("pi1_hat", k_hat as f64 / m as f64);
    auxiliary.insert("n_hat", n_hat as f64);
    Ok(BaselineResult { method: Method::Marr, reject, auxiliary })
}

/// Adaptive radjust with selection at `α` in each study.
pub fn radjust_adaptive(data: &PairedPValueSet, alpha: f64) -> Result<BaselineResult> {
    check_alpha(alpha)?;
    let m = data.len();
    let (p1, p2) = (data.p1(), data.p2());
    let s1: Vec<usize> = (0..m).filter(|&i| p1[i] <= alpha).collect();
    let s2: Vec<usize> = (0..m).filter(|&i| p2[i] <= alpha).collect();
    let mut auxiliary = BTreeMap::new();
    auxiliary.insert("selected1", s1.len() as f64);
    auxiliary.insert("selected2", s2.len() as f64);
    if s1.is_empty() || s2.is_empty() {
        return Ok(BaselineResult { method: Method::Radjust, reject: vec![false; m], auxiliary });
    }
    let (n1, n2) = (s1.len() as f64, s2.len() as f64);
    let pi0_1 = (1.0 + s2.iter().filter(|&&i| p1[i] > alpha).count() as f64) / (n2 * (1.0 - alpha));
    let pi0_2 = (1.0 + s1.iter().filter(|&&i| p2[i] > alpha).count() as f64) / (n1 * (1.0 - alpha));
    let scale1 = 2.0 * n2 * pi0_1 / alpha;
    let scale2 = 2.0 * n1 * pi0_2 / alpha;
    let threshold1 = |r: usize| r as f64 * alpha / (2.0 * n2 * pi0_1);
    let threshold2 = |r: usize| r as f64 * alpha / (2.0 * n1 * pi0_2);

    let both: Vec<usize> = s1.iter().copied().filter(|&i| p2[i] <= alpha).collect();
    // Feature i passes at r exactly when r ≥ need_i; the count c(r) is then
    // the number of needs ≤ r and R is its largest fixed point.
    let mut needs: Vec<f64> = both.iter().map(|&i| (p1[i] * scale1).max(p2[i] * scale2)).collect();
    needs.sort_by(f64::total_cmp);
    let r_big = needs
        .iter()
        .enumerate()
        .rev()
        .find(|(pos, &need)| need <= (pos + 1) as f64)
        .map_or(0, |(pos, _)| pos + 1);

    let (t1, t2) = (threshold1(r_big), threshold2(r_big));
    let mut reject = vec![false; m];
    for &i in &both {
        reject[i] = p1[i] <= t1 && p2[i] <= t2;
    }
    auxiliary.insert("pi0_study1", pi0_1);
    auxiliary.insert("pi0_study2", pi0_2);
    auxiliary.insert("r", r_big as f64);
    Ok(BaselineResult { method: Method::Radjust, reject, auxiliary })
}

pub fn run(method: Method, data: &PairedPValueSet, alpha: f64, lambdas: StoreyLambdas) -> Result<BaselineResult> {
    match method {
        Method::AdhocBh => adhoc_bh(data, alpha),
        Method::MaxP => maxp(data, alpha),
        Method::Jump => jump(data, alpha, lambdas),
        Method::Marr => marr(data, alpha),
        Method::Radjust => radjust_adaptive(data, alpha),
    }
}
