//! Fit, reject, and report on one paired p-value table.

use std::collections::BTreeMap;

use serde::Serialize;

use replfdr_core::baselines::{self, Method};
use replfdr_core::em::{self, FitConfig, FitMode};
use replfdr_core::fdrctl;
use replfdr_core::model::PairedPValueSet;

use crate::error::{AppError, AppResult};
use crate::io::format_real;

/// Below this `ξ̂₀₀` the all-null state is nearly absent, which the model
/// treats as a near-degenerate fit.
pub const XI00_WARNING: f64 = 0.01;

#[derive(Debug, Clone, PartialEq)]
pub struct AnalyzeOptions {
    pub alpha: f64,
    /// Baselines reported next to the proposed procedure, in output column order.
    pub baselines: Vec<Method>,
    pub fit: FitConfig,
}

impl AnalyzeOptions {
    pub fn validate(&self) -> AppResult<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(AppError::Config(format!("alpha = {} must lie in (0, 1)", self.alpha)));
        }
        self.fit.validate()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostics {
    pub m: usize,
    pub alpha: f64,
    pub mode: &'static str,
    pub xi00: f64,
    pub xi01: f64,
    pub xi10: f64,
    pub xi11: f64,
    pub em_iterations: usize,
    pub converged: bool,
    pub final_log_likelihood: f64,
    pub f1_knots: usize,
    pub f2_knots: usize,
    pub lambda_hat: f64,
    pub estimated_fdp: f64,
    pub rejections: BTreeMap<&'static str, usize>,
    pub baseline_details: BTreeMap<&'static str, BTreeMap<&'static str, f64>>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisReport {
    pub lfdr: Vec<f64>,
    pub reject_proposed: Vec<bool>,
    pub baselines: Vec<(Method, Vec<bool>)>,
    pub diagnostics: Diagnostics,
}

pub fn mode_name(mode: FitMode) -> &'static str {
    match mode {
        FitMode::FullEm => "full-em",
        FitMode::ConservativeXi => "conservative-xi",
    }
}

pub fn analyze(data: &PairedPValueSet, options: &AnalyzeOptions) -> AppResult<AnalysisReport> {
    options.validate()?;
    let fitted = em::fit(data, &options.fit)?;
    let lfdr = fitted.model.lfdr_values(data)?;
    let decision = fdrctl::step_up(&lfdr, options.alpha)?;

    let mut warnings = Vec::new();
    let xi = fitted.model.proportions;
    if xi.xi00 < XI00_WARNING {
        warnings.push(format!("estimated xi00 = {} is close to zero", format_real(xi.xi00)));
    }
    if !fitted.converged {
        warnings.push(format!("EM stopped after {} iterations without converging", fitted.iterations));
    }

    let mut rejections = BTreeMap::new();
    rejections.insert("proposed", decision.k_rejected);
    let mut baseline_details = BTreeMap::new();
    let mut baseline_sets = Vec::with_capacity(options.baselines.len());
    for &method in &options.baselines {
        let res = baselines::run(method, data, options.alpha, options.fit.lambdas)?;
        rejections.insert(method.name(), res.rejections());
        if !res.auxiliary.is_empty() {
            baseline_details.insert(method.name(), res.auxiliary.clone());
        }
        baseline_sets.push((method, res.reject));
    }

    let diagnostics = Diagnostics {
        m: data.len(),
        alpha: options.alpha,
        mode: mode_name(options.fit.mode),
        xi00: xi.xi00,
        xi01: xi.xi01,
        xi10: xi.xi10,
        xi11: xi.xi11,
        em_iterations: fitted.iterations,
        converged: fitted.converged,
        final_log_likelihood: fitted.final_log_likelihood(),
        f1_knots: fitted.model.f1.len(),
        f2_knots: fitted.model.f2.len(),
        lambda_hat: decision.lambda_hat,
        estimated_fdp: decision.estimated_fdp,
        rejections,
        baseline_details,
        warnings,
    };
    Ok(AnalysisReport { lfdr, reject_proposed: decision.reject, baselines: baseline_sets, diagnostics })
}

fn flag(b: bool) -> &'static str {
    if b {
        "1"
    } else {
        "0"
    }
}

/// Per-feature table: `feature_id, p1, p2, lfdr, reject_proposed, reject_<method>...`.
pub fn report_to_tsv(data: &PairedPValueSet, report: &AnalysisReport) -> String {
    let mut out = String::from("feature_id\tp1\tp2\tlfdr\treject_proposed");
    for (method, _) in &report.baselines {
        out.push_str("\treject_");
        out.push_str(method.name());
    }
    out.push('\n');
    for i in 0..data.len() {
        out.push_str(&data.feature_ids()[i]);
        for v in [data.p1()[i], data.p2()[i], report.lfdr[i]] {
            out.push('\t');
            out.push_str(&format_real(v));
        }
        out.push('\t');
        out.push_str(flag(report.reject_proposed[i]));
        for (_, set) in &report.baselines {
            out.push('\t');
            out.push_str(flag(set[i]));
        }
        out.push('\n');
    }
    out
}

/// The same table as an array of JSON records.
pub fn report_to_json(data: &PairedPValueSet, report: &AnalysisReport) -> String {
    let rows: Vec<serde_json::Value> = (0..data.len())
        .map(|i| {
            let mut row = serde_json::Map::new();
            row.insert("feature_id".into(), data.feature_ids()[i].clone().into());
            row.insert("p1".into(), data.p1()[i].into());
            row.insert("p2".into(), data.p2()[i].into());
            row.insert("lfdr".into(), report.lfdr[i].into());
            row.insert("reject_proposed".into(), report.reject_proposed[i].into());
            for (method, set) in &report.baselines {
                row.insert(format!("reject_{}", method.name()), set[i].into());
            }
            serde_json::Value::Object(row)
        })
        .collect();
    let mut s = serde_json::to_string_pretty(&rows).expect("records serialize");
    s.push('\n');
    s
}

pub fn diagnostics_to_json(diag: &Diagnostics) -> String {
    let mut s = serde_json::to_string_pretty(diag).expect("diagnostics serialize");
    s.push('\n');
    s
}
