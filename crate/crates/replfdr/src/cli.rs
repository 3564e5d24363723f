use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use replfdr_core::baselines::{LambdaChoice, Method, StoreyLambdas};
use replfdr_core::em::{FitConfig, FitMode, DEFAULT_MAX_ITERATIONS, DEFAULT_TOLERANCE};
use replfdr_core::model::StateProportions;
use replfdr_core::simkit::{generate, Dependence, Procedure, SimConfig};

use crate::analyze::{analyze, diagnostics_to_json, report_to_json, report_to_tsv, AnalyzeOptions};
use crate::error::{AppError, AppResult};
use crate::io::{dataset_to_tsv, ingest_path, write_text};
use crate::selftest;
use crate::simulate::{metric_rows, rows_to_json, rows_to_tsv, run_setting};

#[derive(Debug, Parser)]
#[command(name = "replfdr", version, about = "Empirical-Bayes replicability analysis of paired p-values")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit the four-state model to a p-value table and report rejections.
    Analyze(AnalyzeArgs),
    /// Monte Carlo FDR and power of the selected procedures.
    Simulate(SimulateArgs),
    /// Check the fast algorithms against brute-force oracles.
    Selftest(SelftestArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Tsv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    FullEm,
    ConservativeXi,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Comma-separated procedures: proposed, adhoc-bh, maxp, jump, marr, radjust.
    #[arg(long, value_delimiter = ',', default_value = "proposed,adhoc-bh,maxp,jump,marr,radjust")]
    pub methods: Vec<String>,
    #[arg(long, value_enum, default_value_t = Mode::ConservativeXi)]
    pub mode: Mode,
    /// Storey tuning parameter: `auto` or a value in (0, 1).
    #[arg(long, default_value = "0.5")]
    pub lambda: String,
    #[arg(long, default_value_t = DEFAULT_MAX_ITERATIONS)]
    pub max_iterations: usize,
    #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
    pub tolerance: f64,
    #[arg(long, value_enum, default_value_t = Format::Tsv)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Tab-separated table with header `feature_id  p1  p2`.
    #[arg(long)]
    pub input: PathBuf,
    /// Per-feature results.
    #[arg(long)]
    pub output: PathBuf,
    /// JSON diagnostics sidecar; defaults to `<output>.diagnostics.json`.
    #[arg(long)]
    pub diagnostics: Option<PathBuf>,
    #[command(flatten)]
    pub fit: FitArgs,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Metrics table; stdout when omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[command(flatten)]
    pub fit: FitArgs,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 100)]
    pub reps: usize,
    #[arg(long, default_value_t = 10_000)]
    pub m: usize,
    /// One or more values; every combination with `--mu1` is a setting.
    #[arg(long, value_delimiter = ',', default_value = "0.8")]
    pub xi00: Vec<f64>,
    /// Defaults to `(1 - xi00 - xi11) / 2`.
    #[arg(long)]
    pub xi01: Option<f64>,
    /// Defaults to `(1 - xi00 - xi11) / 2`.
    #[arg(long)]
    pub xi10: Option<f64>,
    #[arg(long, default_value_t = 0.01)]
    pub xi11: f64,
    #[arg(long, value_delimiter = ',', default_value = "2.5")]
    pub mu1: Vec<f64>,
    /// Defaults to `mu1`.
    #[arg(long)]
    pub mu2: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub sigma1: f64,
    #[arg(long, default_value_t = 1.0)]
    pub sigma2: f64,
    /// Switches to the block-correlated design.
    #[arg(long)]
    pub block_size: Option<usize>,
    #[arg(long, default_value_t = 0.2)]
    pub rho: f64,
    /// Also write replicate 0 of the first setting as a p-value table.
    #[arg(long)]
    pub dataset_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SelftestArgs {
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

fn parse_lambda(text: &str) -> AppResult<LambdaChoice> {
    if text.eq_ignore_ascii_case("auto") {
        return Ok(LambdaChoice::Auto);
    }
    match text.parse::<f64>() {
        Ok(v) if v > 0.0 && v < 1.0 => Ok(LambdaChoice::Fixed(v)),
        _ => Err(AppError::Config(format!("--lambda must be `auto` or a value in (0, 1), got `{text}`"))),
    }
}

fn parse_procedures(names: &[String]) -> AppResult<Vec<Procedure>> {
    let mut out = Vec::new();
    for name in names.iter().map(|s| s.trim()).filter(|s| !s.is_empty()) {
        let p = Procedure::from_name(name).ok_or_else(|| AppError::Config(format!("unknown method `{name}`")))?;
        if !out.contains(&p) {
            out.push(p);
        }
    }
    if out.is_empty() {
        return Err(AppError::Config("--methods must name at least one procedure".into()));
    }
    Ok(out)
}

impl FitArgs {
    fn fit_config(&self) -> AppResult<FitConfig> {
        let config = FitConfig {
            mode: match self.mode {
                Mode::FullEm => FitMode::FullEm,
                Mode::ConservativeXi => FitMode::ConservativeXi,
            },
            max_iterations: self.max_iterations,
            tolerance: self.tolerance,
            lambdas: StoreyLambdas::uniform(parse_lambda(&self.lambda)?),
        };
        config.validate()?;
        Ok(config)
    }

    fn check_alpha(&self) -> AppResult<()> {
        if self.alpha > 0.0 && self.alpha < 1.0 {
            Ok(())
        } else {
            Err(AppError::Config(format!("--alpha = {} must lie in (0, 1)", self.alpha)))
        }
    }
}

fn default_sidecar(output: &Path) -> PathBuf {
    let mut name = output.as_os_str().to_owned();
    name.push(".diagnostics.json");
    PathBuf::from(name)
}

fn warn(message: &str) {
    eprintln!("warning: {message}");
}

pub fn run_analyze(args: &AnalyzeArgs) -> AppResult<()> {
    args.fit.check_alpha()?;
    let procedures = parse_procedures(&args.fit.methods)?;
    let options = AnalyzeOptions {
        alpha: args.fit.alpha,
        baselines: procedures
            .iter()
            .filter_map(|p| match p {
                Procedure::Baseline(m) => Some(*m),
                Procedure::Proposed => None,
            })
            .collect::<Vec<Method>>(),
        fit: args.fit.fit_config()?,
    };
    options.validate()?;
    let ingested = ingest_path(&args.input)?;
    for w in &ingested.warnings {
        warn(w);
    }
    let mut report = analyze(&ingested.data, &options)?;
    for w in &report.diagnostics.warnings {
        warn(w);
    }
    report.diagnostics.warnings.splice(0..0, ingested.warnings);

    let table = match args.fit.format {
        Format::Tsv => report_to_tsv(&ingested.data, &report),
        Format::Json => report_to_json(&ingested.data, &report),
    };
    write_text(&args.output, &table)?;
    let sidecar = args.diagnostics.clone().unwrap_or_else(|| default_sidecar(&args.output));
    write_text(&sidecar, &diagnostics_to_json(&report.diagnostics))
}

fn simulation_settings(args: &SimulateArgs) -> AppResult<Vec<SimConfig>> {
    let mut settings = Vec::new();
    for &xi00 in &args.xi00 {
        for &mu1 in &args.mu1 {
            let side = (1.0 - xi00 - args.xi11) / 2.0;
            let proportions =
                StateProportions::new(xi00, args.xi01.unwrap_or(side), args.xi10.unwrap_or(side), args.xi11)
                    .map_err(|e| AppError::Config(format!("xi00 = {xi00}: {e}")))?;
            let config = SimConfig {
                m: args.m,
                proportions,
                mu1,
                mu2: args.mu2.unwrap_or(mu1),
                sigma1: args.sigma1,
                sigma2: args.sigma2,
                dependence: match args.block_size {
                    Some(block_size) => Dependence::Block { block_size, rho: args.rho },
                    None => Dependence::Independent,
                },
                seed: args.seed,
            };
            config.validate()?;
            settings.push(config);
        }
    }
    if settings.is_empty() {
        return Err(AppError::Config("no simulation settings".into()));
    }
    Ok(settings)
}

pub fn run_simulate(args: &SimulateArgs) -> AppResult<()> {
    args.fit.check_alpha()?;
    let procedures = parse_procedures(&args.fit.methods)?;
    let fit = args.fit.fit_config()?;
    if args.reps == 0 {
        return Err(AppError::Config("--reps must be positive".into()));
    }
    let settings = simulation_settings(args)?;
    if let Some(path) = &args.dataset_out {
        write_text(path, &dataset_to_tsv(&generate(&settings[0])?.data))?;
    }
    let mut rows = Vec::new();
    for (k, config) in settings.iter().enumerate() {
        let summaries = run_setting(config, &procedures, args.fit.alpha, args.reps, &fit)?;
        rows.extend(metric_rows(k, config, args.fit.alpha, &summaries));
    }
    let text = match args.fit.format {
        Format::Tsv => rows_to_tsv(&rows),
        Format::Json => rows_to_json(&rows),
    };
    match &args.output {
        Some(path) => write_text(path, &text),
        None => std::io::stdout().write_all(text.as_bytes()).map_err(|e| AppError::io("<stdout>", e)),
    }
}

pub fn run_selftest(args: &SelftestArgs) -> AppResult<()> {
    let outcomes = selftest::run_all(args.seed);
    for o in &outcomes {
        let status = if o.passed() { "PASS" } else { "FAIL" };
        println!("{status} {:<22} {:>7} cases, {} failures; {}", o.name, o.cases, o.failures, o.detail);
    }
    match outcomes.iter().filter(|o| !o.passed()).count() {
        0 => Ok(()),
        n => Err(AppError::SelftestFailed(n)),
    }
}

/// Parses `args` (including the program name) and runs; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let result = match &cli.command {
        Command::Analyze(a) => run_analyze(a),
        Command::Simulate(s) => run_simulate(s),
        Command::Selftest(s) => run_selftest(s),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
