//! Parallel Monte Carlo runs over a grid of simulation settings.
//!
//! Replicate `r` of a setting always draws from the streams of `r` under the
//! setting's seed, and rows are reduced in replicate order, so the table does
//! not depend on how rayon schedules the work.

use rayon::prelude::*;
use serde::Serialize;

use replfdr_core::em::FitConfig;
use replfdr_core::simkit::{run_replicate, summarize, Dependence, Procedure, ProcedureSummary, SimConfig};

use crate::error::AppResult;
use crate::io::format_real;

/// Runs replicates `0..reps` of one setting on the rayon pool.
pub fn run_setting(
    config: &SimConfig,
    procedures: &[Procedure],
    alpha: f64,
    reps: usize,
    fit: &FitConfig,
) -> AppResult<Vec<ProcedureSummary>> {
    config.validate()?;
    let rows = (0..reps as u64)
        .into_par_iter()
        .map(|r| run_replicate(config, r, procedures, alpha, fit))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(summarize(procedures, &rows))
}

/// One line of the long-format table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricRow {
    pub setting: usize,
    pub m: usize,
    pub xi00: f64,
    pub xi01: f64,
    pub xi10: f64,
    pub xi11: f64,
    pub mu1: f64,
    pub mu2: f64,
    pub sigma1: f64,
    pub sigma2: f64,
    pub block_size: usize,
    pub rho: f64,
    pub alpha: f64,
    pub procedure: &'static str,
    pub reps: usize,
    pub metric: &'static str,
    pub mean: f64,
    pub mc_se: f64,
}

pub const COLUMNS: [&str; 18] = [
    "setting", "m", "xi00", "xi01", "xi10", "xi11", "mu1", "mu2", "sigma1", "sigma2", "block_size", "rho", "alpha",
    "procedure", "reps", "metric", "mean", "mc_se",
];

pub fn metric_rows(setting: usize, config: &SimConfig, alpha: f64, summaries: &[ProcedureSummary]) -> Vec<MetricRow> {
    let (block_size, rho) = match config.dependence {
        Dependence::Independent => (0, 0.0),
        Dependence::Block { block_size, rho } => (block_size, rho),
    };
    let xi = config.proportions;
    let mut rows = Vec::with_capacity(summaries.len() * 3);
    for s in summaries {
        for (metric, mean, mc_se) in [
            ("fdr", s.mean_fdp, s.fdp_se),
            ("power", s.mean_power, s.power_se),
            ("rejections", s.mean_rejections, f64::NAN),
        ] {
            rows.push(MetricRow {
                setting,
                m: config.m,
                xi00: xi.xi00,
                xi01: xi.xi01,
                xi10: xi.xi10,
                xi11: xi.xi11,
                mu1: config.mu1,
                mu2: config.mu2,
                sigma1: config.sigma1,
                sigma2: config.sigma2,
                block_size,
                rho,
                alpha,
                procedure: s.procedure.name(),
                reps: s.reps,
                metric,
                mean,
                mc_se,
            });
        }
    }
    rows
}

fn cell(v: f64) -> String {
    if v.is_nan() {
        "NA".into()
    } else {
        format_real(v)
    }
}

pub fn rows_to_tsv(rows: &[MetricRow]) -> String {
    let mut out = COLUMNS.join("\t");
    out.push('\n');
    for r in rows {
        let fields = [
            r.setting.to_string(),
            r.m.to_string(),
            cell(r.xi00),
            cell(r.xi01),
            cell(r.xi10),
            cell(r.xi11),
            cell(r.mu1),
            cell(r.mu2),
            cell(r.sigma1),
            cell(r.sigma2),
            r.block_size.to_string(),
            cell(r.rho),
            cell(r.alpha),
            r.procedure.to_string(),
            r.reps.to_string(),
            r.metric.to_string(),
            cell(r.mean),
            cell(r.mc_se),
        ];
        out.push_str(&fields.join("\t"));
        out.push('\n');
    }
    out
}

/// JSON array of rows; a missing standard error is written as `null`.
pub fn rows_to_json(rows: &[MetricRow]) -> String {
    let mut s = serde_json::to_string_pretty(rows).expect("rows serialize");
    s.push('\n');
    s
}
