//! habitlens: revealed-preference tests for dynamic hedonic demand.
//!
//! Subcommands drive the pipeline end to end: `synth` emits panels with known
//! ground truth, `test` classifies households against a model set, `restrict`
//! runs the perturbation-based restrictiveness statistics, and
//! `compare`/`report` aggregate a run directory into tables.

mod config;
mod inputs;

use std::path::PathBuf;
use std::process::ExitCode;

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand};

use habitlens_core::engine::EngineOptions;
use habitlens_core::models::{builtin_models, ModelSpec};
use habitlens_core::panel::PanelError;
use habitlens_core::report::{self, ReportError};
use habitlens_core::restrict::{ExpenditureMatch, PerturbConfig};
use habitlens_core::synth::{generate_dataset, GeneratorConfig, SynthProfile};

#[derive(Parser)]
#[command(
    name = "habitlens",
    version,
    about = "Revealed-preference tests for habits over product characteristics"
)]
struct Cli {
    /// Optional TOML config file; CLI flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the rationalisability tests for each (household, model) pair.
    Test(TestArgs),
    /// Generate synthetic purchase data with known ground truth.
    Synth(SynthArgs),
    /// Restrictiveness statistics from locally perturbed environments.
    Restrict(RestrictArgs),
    /// Paired exact McNemar comparison between two models of a finished run.
    Compare(CompareArgs),
    /// Rebuild summary tables from a run directory.
    Report(ReportArgs),
}

#[derive(Args, Clone)]
struct InputArgs {
    /// purchases.csv: household_id, date, good_id, units, expenditure.
    #[arg(long)]
    purchases: PathBuf,
    /// characteristics.csv: good_id plus one named attribute column each.
    #[arg(long)]
    characteristics: PathBuf,
    /// technology.json selecting/ordering attribute columns (default: all).
    #[arg(long)]
    technology: Option<PathBuf>,
    /// models.toml with [[model]] entries (default: the builtin model set).
    #[arg(long)]
    models: Option<PathBuf>,
    /// rates.csv with monthly interest rates for present-value conversion.
    #[arg(long)]
    rates: Option<PathBuf>,
    /// Skip present-value conversion and use nominal prices.
    #[arg(long)]
    nominal: bool,
    /// Exclude households with fewer constructed periods than this.
    #[arg(long)]
    min_periods: Option<usize>,
    /// Sample window as START..END (ISO dates, inclusive).
    #[arg(long)]
    window: Option<String>,
    #[arg(long)]
    beta_start: Option<f64>,
    #[arg(long)]
    beta_stop: Option<f64>,
    #[arg(long)]
    beta_step: Option<f64>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct TestArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Output directory for outcomes.jsonl, pass_rates.csv, structural.csv.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SynthArgs {
    /// pass | structfail | behavfail
    #[arg(long)]
    profile: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    households: usize,
    #[arg(long, default_value_t = 6)]
    periods: usize,
    #[arg(long, default_value_t = 8)]
    goods: usize,
    #[arg(long, default_value_t = 3)]
    attrs: usize,
    #[arg(long, default_value_t = 1)]
    habit_attrs: usize,
    #[arg(long, default_value_t = 1)]
    lags: usize,
    #[arg(long, default_value_t = 0.98)]
    beta: f64,
    #[arg(long, default_value_t = 2)]
    sparsity: usize,
    /// Relative size of the injected off-manifold component (structfail).
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    /// Also emit prices for non-purchased goods.
    #[arg(long)]
    full_prices: bool,
    /// Output directory for purchases.csv, characteristics.csv,
    /// technology.json.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RestrictArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, default_value_t = 10_000)]
    draws: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.8)]
    price_lo: f64,
    #[arg(long, default_value_t = 1.2)]
    price_hi: f64,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    /// per_period | total
    #[arg(long, default_value = "per_period")]
    expenditure_match: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CompareArgs {
    /// Run directory containing outcomes.jsonl.
    #[arg(long)]
    run: PathBuf,
    #[arg(long)]
    baseline: String,
    #[arg(long)]
    alt: String,
    /// Optional CSV file to write the comparison row to.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    /// Run directory containing outcomes.jsonl.
    #[arg(long)]
    run: PathBuf,
    /// Output directory (default: the run directory).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Baseline model for the paired-comparison table (default: first model).
    #[arg(long)]
    baseline: Option<String>,
}

/// Exit code discipline: 0 success, 1 internal error, 2 input error.
#[derive(Debug)]
enum CliError {
    Input(String),
    Internal(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Internal(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "input error: {m}"),
            CliError::Internal(m) => write!(f, "internal error: {m}"),
        }
    }
}

fn input_err<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Input(e.to_string())
}

impl From<PanelError> for CliError {
    fn from(e: PanelError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<ReportError> for CliError {
    fn from(e: ReportError) -> Self {
        match e {
            ReportError::Io { .. } | ReportError::Malformed { .. } => {
                CliError::Input(e.to_string())
            }
            ReportError::NoData | ReportError::UnknownModel(_) => CliError::Input(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Test(args) => cmd_test(&cli, args),
        Command::Synth(args) => cmd_synth(args),
        Command::Restrict(args) => cmd_restrict(&cli, args),
        Command::Compare(args) => cmd_compare(args),
        Command::Report(args) => cmd_report(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("habitlens: {e}");
            ExitCode::from(e.code())
        }
    }
}

fn init_threads(threads: Option<usize>) {
    if let Some(n) = threads {
        if n > 0 {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

fn parse_window(s: &str) -> Result<(NaiveDate, NaiveDate), CliError> {
    let parts: Vec<&str> = s.split("..").collect();
    if parts.len() != 2 {
        return Err(CliError::Input(format!(
            "window '{s}' must be START..END (ISO dates)"
        )));
    }
    let lo = NaiveDate::parse_from_str(parts[0], "%Y-%m-%d").map_err(input_err)?;
    let hi = NaiveDate::parse_from_str(parts[1], "%Y-%m-%d").map_err(input_err)?;
    if hi < lo {
        return Err(CliError::Input(format!("window '{s}' ends before it starts")));
    }
    Ok((lo, hi))
}

fn load_models(path: Option<&PathBuf>) -> Result<Vec<ModelSpec>, CliError> {
    match path {
        None => Ok(builtin_models()),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Input(format!("{}: {e}", p.display())))?;
            habitlens_core::models::load_models_toml(&text).map_err(input_err)
        }
    }
}

fn cmd_test(cli: &Cli, args: &TestArgs) -> Result<(), CliError> {
    let merged = config::merge(cli.config.as_deref(), &args.input)?;
    init_threads(merged.threads);
    let loaded = inputs::load(&merged)?;
    let models = load_models(merged.models.as_ref())?;
    let grid = merged.grid();
    let opts = EngineOptions::default();

    std::fs::create_dir_all(&args.out)
        .map_err(|e| CliError::Input(format!("{}: {e}", args.out.display())))?;

    let suite = habitlens_core::models::SuiteInput {
        panels: &loaded.panels,
        attr_names: &loaded.attr_names,
        a: &loaded.a,
        catalog: &loaded.catalog,
    };
    let outcomes = habitlens_core::models::run_suite(&suite, &models, &grid, opts)
        .map_err(|e| CliError::Internal(e.to_string()))?;

    report::write_outcomes_jsonl(&outcomes, &args.out.join("outcomes.jsonl"))?;
    let rates = report::pass_rate_table(&outcomes)?;
    report::write_pass_rates_csv(&rates, &args.out.join("pass_rates.csv"))?;
    report::write_structural_csv(&outcomes, &args.out.join("structural.csv"))?;

    println!(
        "tested {} households x {} models ({} excluded at ingest)",
        loaded.panels.len(),
        models.len(),
        loaded.excluded.len()
    );
    for row in &rates {
        println!("  {:<24} {:>8}%", row.model_id, row.formatted_pct());
    }
    Ok(())
}

fn cmd_synth(args: &SynthArgs) -> Result<(), CliError> {
    let profile = match args.profile.as_str() {
        "pass" => SynthProfile::Pass,
        "structfail" => SynthProfile::StructFail,
        "behavfail" => SynthProfile::BehavFail,
        other => {
            return Err(CliError::Input(format!(
                "unknown profile '{other}' (expected pass|structfail|behavfail)"
            )))
        }
    };
    let cfg = GeneratorConfig {
        k: args.goods,
        j: args.attrs,
        j2: args.habit_attrs,
        lags: args.lags,
        t: args.periods,
        beta_true: args.beta,
        seed: args.seed,
        sparsity: args.sparsity,
        full_prices: args.full_prices,
        ..Default::default()
    };
    let dataset = generate_dataset(&cfg, profile, args.households, args.delta)
        .map_err(|e| CliError::Internal(e.to_string()))?;
    std::fs::create_dir_all(&args.out)
        .map_err(|e| CliError::Input(format!("{}: {e}", args.out.display())))?;

    inputs::write_dataset(&dataset, &args.out).map_err(input_err)?;
    println!(
        "wrote {} household(s) to {} (profile {})",
        dataset.panels.len(),
        args.out.display(),
        args.profile
    );
    Ok(())
}

fn cmd_restrict(cli: &Cli, args: &RestrictArgs) -> Result<(), CliError> {
    let merged = config::merge(cli.config.as_deref(), &args.input)?;
    init_threads(merged.threads);
    let loaded = inputs::load(&merged)?;
    let models = load_models(merged.models.as_ref())?;
    let grid = merged.grid();
    let opts = EngineOptions::default();
    let expenditure_match = match args.expenditure_match.as_str() {
        "per_period" => ExpenditureMatch::PerPeriod,
        "total" => ExpenditureMatch::Total,
        other => {
            return Err(CliError::Input(format!(
                "unknown expenditure match '{other}' (expected per_period|total)"
            )))
        }
    };
    let cfg = PerturbConfig {
        draws: args.draws,
        price_band: (args.price_lo, args.price_hi),
        dirichlet_alpha: args.alpha,
        seed: args.seed,
        expenditure_match,
    };
    std::fs::create_dir_all(&args.out)
        .map_err(|e| CliError::Input(format!("{}: {e}", args.out.display())))?;

    let report_out = habitlens_core::restrict::restrictiveness_report(
        &loaded.panels,
        &loaded.attr_names,
        &loaded.a,
        &loaded.catalog,
        &models,
        &cfg,
        &grid,
        opts,
    )
    .map_err(|e| CliError::Internal(e.to_string()))?;
    report::write_restrictiveness_csv(&report_out.rows, &args.out.join("restrictiveness.csv"))?;
    report::write_restrictiveness_summary_csv(
        &report_out.summaries,
        &args.out.join("restrictiveness_summary.csv"),
    )?;
    println!(
        "restrictiveness over {} households x {} models, M={} draws",
        loaded.panels.len(),
        models.len(),
        args.draws
    );
    Ok(())
}

fn cmd_compare(args: &CompareArgs) -> Result<(), CliError> {
    let outcomes = report::read_outcomes_jsonl(&args.run.join("outcomes.jsonl"))?;
    let cmp = report::compare_models(&outcomes, &args.baseline, &args.alt)?;
    println!("baseline={} alternative={}", cmp.model0, cmp.model1);
    println!(
        "pass0={:.2}% pass1={:.2}% delta={:.2}pp n01={} n10={} switchers={} p={}",
        100.0 * cmp.pass0_rate,
        100.0 * cmp.pass1_rate,
        100.0 * (cmp.pass0_rate - cmp.pass1_rate),
        cmp.n_01,
        cmp.n_10,
        cmp.switchers,
        cmp.p_value
    );
    if let Some(out) = &args.out {
        report::write_mcnemar_csv(std::slice::from_ref(&cmp), out)?;
    }
    Ok(())
}

fn cmd_report(args: &ReportArgs) -> Result<(), CliError> {
    let outcomes_path = args.run.join("outcomes.jsonl");
    if !outcomes_path.exists() {
        return Err(CliError::Input(format!(
            "{}: no outcomes.jsonl in run directory",
            args.run.display()
        )));
    }
    let outcomes = report::read_outcomes_jsonl(&outcomes_path)?;
    if outcomes.is_empty() {
        return Err(CliError::Input("run directory has no outcomes".into()));
    }
    let out = args.out.clone().unwrap_or_else(|| args.run.clone());
    std::fs::create_dir_all(&out)
        .map_err(|e| CliError::Input(format!("{}: {e}", out.display())))?;

    let rates = report::pass_rate_table(&outcomes)?;
    report::write_pass_rates_csv(&rates, &out.join("pass_rates.csv"))?;

    let baseline = args
        .baseline
        .clone()
        .unwrap_or_else(|| rates[0].model_id.clone());
    let mut comparisons = Vec::new();
    for row in &rates {
        if row.model_id != baseline {
            comparisons.push(report::compare_models(&outcomes, &baseline, &row.model_id)?);
        }
    }
    report::write_mcnemar_csv(&comparisons, &out.join("mcnemar.csv"))?;
    report::write_structural_csv(&outcomes, &out.join("structural.csv"))?;
    println!(
        "report written to {} ({} models, baseline {})",
        out.display(),
        rates.len(),
        baseline
    );
    Ok(())
}
