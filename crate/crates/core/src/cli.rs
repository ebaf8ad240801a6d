//! Command-line front end.
//!
//! Exit codes: 0 success, 2 configuration error, 3 vertex budget exceeded,
//! 4 closed-form self-check failed, 5 Monte Carlo walks truncated.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigInt;
use num_rational::BigRational;
use serde_json::{json, Value};

use crate::closed_form::{ExactSeries, SeriesRow};
use crate::growth::{grow_from, GrowthError, Operator, DEFAULT_VERTEX_BUDGET};
use crate::metrics::{mean_hitting_exact, HittingTimes};
use crate::report::{analyze, decimal, exact_int, exact_ratio, predict, rational_to_f64, seed_params};
use crate::scaling::{run_sweep, ScalingConfig, ScalingError};
use crate::tree::{read_tree_file, resolve_seed, serialize, SeedSpec, Tree, TreeError, TreeFormat};
use crate::walk::{estimate_hitting, estimate_mean_hitting, WalkConfig, WalkError, DEFAULT_STEP_CAP};

pub const VERTEX_BUDGET_ENV: &str = "TREEGROWER_VERTEX_BUDGET";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Capacity(String),
    #[error("self-check failed: {0}")]
    SelfCheck(String),
    #[error("{0}")]
    Truncated(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Capacity(_) => 3,
            CliError::SelfCheck(_) => 4,
            CliError::Truncated(_) => 5,
        }
    }
}

impl From<TreeError> for CliError {
    fn from(e: TreeError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<GrowthError> for CliError {
    fn from(e: GrowthError) -> Self {
        match e {
            GrowthError::CapacityExceeded { .. } => CliError::Capacity(e.to_string()),
            GrowthError::Seed(e) => e.into(),
        }
    }
}

impl From<WalkError> for CliError {
    fn from(e: WalkError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<ScalingError> for CliError {
    fn from(e: ScalingError) -> Self {
        match e {
            ScalingError::Config(msg) => CliError::Config(msg),
            ScalingError::Growth(g) => g.into(),
            ScalingError::Walk(w) => w.into(),
        }
    }
}

fn io_error(path: Option<&Path>, e: io::Error) -> CliError {
    match path {
        Some(p) => CliError::Config(format!("{}: {e}", p.display())),
        None => CliError::Config(e.to_string()),
    }
}

#[derive(Debug, Parser)]
#[command(name = "treegrower", version, about = "Grow, predict and measure deterministic scale-free trees")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Grow a tree and write it to a file.
    Generate(GenerateArgs),
    /// Print closed-form n, D, W and ⟨H⟩ for every step without building trees.
    Predict(PredictArgs),
    /// Measure a tree and compare it against its closed forms.
    Analyze(AnalyzeArgs),
    /// Estimate hitting times by simulating random walks.
    Walk(WalkArgs),
    /// Sweep growth steps and fit log-log slopes.
    Scaling(ScalingArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    Phi,
    PhiStar,
}

impl From<ModelArg> for Operator {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Phi => Operator::Phi,
            ModelArg::PhiStar => Operator::PhiStar,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Edgelist,
    Dot,
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    #[arg(long, value_enum, default_value = "phi")]
    pub model: ModelArg,
    #[arg(long, default_value_t = 0)]
    pub steps: u32,
    /// edge, path:M, star:M or file:PATH
    #[arg(long, default_value = "edge")]
    pub seed: SeedSpec,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "edgelist")]
    pub format: FormatArg,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: FormatArg,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Analyze this tree file instead of growing one; no prediction is attached.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub fit_kmin: Option<usize>,
    #[arg(long)]
    pub fit_kmax: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug, Args)]
pub struct WalkArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Ordered pairs sampled for the mean hitting time.
    #[arg(long, default_value_t = 50_000)]
    pub pairs: u64,
    /// Walks per sampled pair (or total walks with --source/--target).
    #[arg(long, default_value_t = 4)]
    pub walks: u64,
    #[arg(long, default_value_t = 1)]
    pub rng_seed: u64,
    #[arg(long, requires = "target")]
    pub source: Option<usize>,
    #[arg(long, requires = "source")]
    pub target: Option<usize>,
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_STEP_CAP)]
    pub step_cap: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ScalingArgs {
    #[arg(long, value_enum, default_value = "phi")]
    pub model: ModelArg,
    #[arg(long, default_value = "edge")]
    pub seed: SeedSpec,
    #[arg(long, default_value_t = 0)]
    pub t_min: u32,
    #[arg(long, default_value_t = 8)]
    pub t_max: u32,
    /// Build and measure trees up to this step (default: min(t-max, 7)).
    #[arg(long)]
    pub empirical_max: Option<u32>,
    /// Add Monte Carlo estimates for rows up to this step.
    #[arg(long)]
    pub monte_carlo_max: Option<u32>,
    #[arg(long, default_value_t = 20_000)]
    pub pairs: u64,
    #[arg(long, default_value_t = 1)]
    pub walks: u64,
    #[arg(long, default_value_t = 1)]
    pub rng_seed: u64,
    #[arg(long)]
    pub fit_tmin: Option<u32>,
    #[arg(long)]
    pub fit_tmax: Option<u32>,
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Reads the vertex budget from the environment, falling back to the default.
pub fn vertex_budget() -> Result<usize, CliError> {
    match std::env::var(VERTEX_BUDGET_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| CliError::Config(format!("{VERTEX_BUDGET_ENV}={v:?} is not a vertex count"))),
        Err(_) => Ok(DEFAULT_VERTEX_BUDGET),
    }
}

/// Parses `args` (including the program name) and runs the subcommand.
/// Returns the process exit code; diagnostics go to standard error.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Generate(args) => cmd_generate(&args),
        Command::Predict(args) => cmd_predict(&args),
        Command::Analyze(args) => cmd_analyze(&args),
        Command::Walk(args) => cmd_walk(&args),
        Command::Scaling(args) => cmd_scaling(&args),
    }
}

/// Opens `path`, or standard output when absent, and runs `body` on it.
fn with_output(path: Option<&Path>, body: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> Result<(), CliError> {
    let result = match path {
        Some(p) => {
            let file = File::create(p).map_err(|e| io_error(Some(p), e))?;
            let mut w = BufWriter::new(file);
            body(&mut w).and_then(|_| w.flush())
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            body(&mut w).and_then(|_| w.flush())
        }
    };
    result.map_err(|e| io_error(path, e))
}

fn write_json(path: Option<&Path>, value: &Value) -> Result<(), CliError> {
    with_output(path, |w| {
        serde_json::to_writer_pretty(&mut *w, value)?;
        writeln!(w)
    })
}

fn grow_model(model: &ModelArgs) -> Result<(Tree, Tree), CliError> {
    let seed = resolve_seed(&model.seed)?;
    let tree = grow_from(seed.clone(), model.model.into(), model.steps, vertex_budget()?)?;
    Ok((seed, tree))
}

fn thread_pool(workers: Option<usize>) -> Result<Option<rayon::ThreadPool>, CliError> {
    workers
        .map(|w| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(w.max(1))
                .build()
                .map_err(|e| CliError::Config(e.to_string()))
        })
        .transpose()
}

pub fn cmd_generate(args: &GenerateArgs) -> Result<(), CliError> {
    let format = match args.format {
        FormatArg::Edgelist => TreeFormat::EdgeList,
        FormatArg::Dot => TreeFormat::Dot,
        FormatArg::Json => TreeFormat::Json,
        FormatArg::Csv => return Err(CliError::Config("generate writes edgelist, dot or json".into())),
    };
    let (_, tree) = grow_model(&args.model)?;
    let bytes = serialize(&tree, format);
    let summary = format!("n={} edges={}", tree.vertex_count(), tree.edge_count());
    match &args.out {
        Some(path) => {
            std::fs::write(path, &bytes).map_err(|e| io_error(Some(path), e))?;
            println!("{summary}");
        }
        None => {
            with_output(None, |w| w.write_all(&bytes))?;
            eprintln!("{summary}");
        }
    }
    Ok(())
}

pub const PREDICT_HEADER: [&str; 6] = ["t", "n", "diameter", "wiener", "mean_hitting", "mean_hitting_decimal"];

fn ratio_text(r: &BigRational) -> String {
    if *r.denom() == BigInt::from(1) {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

fn series_for(seed: &Tree, operator: Operator, steps: u32) -> ExactSeries {
    let params = seed_params(seed);
    match operator {
        Operator::Phi => ExactSeries::phi(params, steps),
        Operator::PhiStar => ExactSeries::phi_star(params, steps),
    }
}

fn predict_row_json(row: &SeriesRow) -> Value {
    json!({
        "t": row.t,
        "n": exact_int(&row.n),
        "diameter": exact_int(&row.diameter),
        "wiener": row.wiener.as_ref().map(exact_int),
        "mean_hitting": row.mean_hitting.as_ref().map(exact_ratio),
        "mean_hitting_decimal": row.mean_hitting.as_ref().map(|h| decimal(h, 12)),
    })
}

pub fn cmd_predict(args: &PredictArgs) -> Result<(), CliError> {
    let seed = resolve_seed(&args.model.seed)?;
    let operator: Operator = args.model.model.into();
    let series = series_for(&seed, operator, args.model.steps);
    match args.format {
        FormatArg::Csv => with_output(args.out.as_deref(), |w| {
            let mut csv = csv::Writer::from_writer(w);
            csv.write_record(PREDICT_HEADER)?;
            for row in &series.rows {
                csv.write_record([
                    row.t.to_string(),
                    row.n.to_string(),
                    row.diameter.to_string(),
                    row.wiener.as_ref().map(ToString::to_string).unwrap_or_default(),
                    row.mean_hitting.as_ref().map(ratio_text).unwrap_or_default(),
                    row.mean_hitting.as_ref().map(|h| decimal(h, 15)).unwrap_or_default(),
                ])?;
            }
            csv.flush()
        }),
        FormatArg::Json => write_json(
            args.out.as_deref(),
            &json!({
                "model": operator.as_str(),
                "seed": {
                    "spec": args.model.seed.to_string(),
                    "n0": series.seed.n0,
                    "d0": series.seed.d0,
                    "w0": exact_int(&series.seed.w0),
                },
                "rows": series.rows.iter().map(predict_row_json).collect::<Vec<_>>(),
            }),
        ),
        _ => Err(CliError::Config("predict writes csv or json".into())),
    }
}

pub fn cmd_analyze(args: &AnalyzeArgs) -> Result<(), CliError> {
    let window = match (args.fit_kmin, args.fit_kmax) {
        (Some(lo), Some(hi)) if lo <= hi => Some((lo, hi)),
        (None, None) => None,
        _ => return Err(CliError::Config("--fit-kmin and --fit-kmax go together, with kmin <= kmax".into())),
    };
    let (tree, prediction, source) = match &args.input {
        Some(path) => (read_tree_file(path)?, None, json!({ "input": path.display().to_string() })),
        None => {
            let (seed, tree) = grow_model(&args.model)?;
            let operator: Operator = args.model.model.into();
            let prediction = predict(&seed, operator, args.model.steps);
            let source = json!({
                "model": operator.as_str(),
                "steps": args.model.steps,
                "seed": args.model.seed.to_string(),
            });
            (tree, Some(prediction), source)
        }
    };
    let report = match thread_pool(args.workers)? {
        Some(pool) => pool.install(|| analyze(&tree, prediction, window)),
        None => analyze(&tree, prediction, window),
    };
    let mut doc = report.to_json();
    doc["source"] = source;
    write_json(args.out.as_deref(), &doc)?;
    if args.out.is_some() {
        println!(
            "n={} diameter={} wiener={} mean_hitting={}",
            report.n,
            report.diameter.length,
            report.wiener,
            decimal(&report.mean_hitting, 12)
        );
    }
    match &report.closed_form_deltas {
        Some(d) if !d.all_zero() => Err(CliError::SelfCheck(format!(
            "measured metrics differ from closed forms: {d:?}"
        ))),
        _ => Ok(()),
    }
}

pub fn cmd_walk(args: &WalkArgs) -> Result<(), CliError> {
    let tree = match &args.input {
        Some(path) => read_tree_file(path)?,
        None => grow_model(&args.model)?.1,
    };
    let config = WalkConfig {
        step_cap: args.step_cap,
        workers: args.workers,
    };
    let (estimate, exact, mode) = match (args.source, args.target) {
        (Some(u), Some(v)) => {
            let exact = HittingTimes::new(&tree)
                .between(u, v)
                .map_err(|e| CliError::Config(e.to_string()))?;
            let estimate = estimate_hitting(&tree, u, v, args.walks, args.rng_seed, &config)?;
            let exact = BigRational::from_integer(BigInt::from(exact));
            (estimate, exact, json!({ "kind": "pair", "source": u, "target": v }))
        }
        _ => {
            let estimate = estimate_mean_hitting(&tree, args.pairs, args.walks, args.rng_seed, &config)?;
            let mode = json!({ "kind": "mean", "pairs": args.pairs, "walks_per_pair": args.walks });
            (estimate, mean_hitting_exact(&tree), mode)
        }
    };
    let exact_f = rational_to_f64(&exact);
    let doc = json!({
        "n": tree.vertex_count(),
        "mode": mode,
        "estimate": estimate,
        "exact": exact_ratio(&exact),
        "exact_decimal": decimal(&exact, 12),
        "z_score": estimate.z_score(exact_f),
        "relative_error": (estimate.mean - exact_f).abs() / exact_f,
    });
    write_json(args.out.as_deref(), &doc)?;
    if args.out.is_some() {
        println!(
            "mean={} std_error={} exact={} samples={}",
            estimate.mean,
            estimate.std_error,
            decimal(&exact, 12),
            estimate.samples
        );
    }
    if !estimate.is_valid() {
        return Err(CliError::Truncated(format!(
            "{} walks hit the step cap of {}",
            estimate.truncated_count, args.step_cap
        )));
    }
    Ok(())
}

pub fn scaling_config(args: &ScalingArgs) -> Result<ScalingConfig, CliError> {
    Ok(ScalingConfig {
        operator: args.model.into(),
        t_min: args.t_min,
        t_max: args.t_max,
        empirical_max: Some(args.empirical_max.unwrap_or(args.t_max.min(7))),
        monte_carlo_max: args.monte_carlo_max,
        pairs: args.pairs,
        walks_per_pair: args.walks,
        rng_seed: args.rng_seed,
        walk: WalkConfig {
            step_cap: DEFAULT_STEP_CAP,
            workers: args.workers,
        },
        fit_t_min: args.fit_tmin,
        fit_t_max: args.fit_tmax,
        vertex_budget: vertex_budget()?,
    })
}

pub fn cmd_scaling(args: &ScalingArgs) -> Result<(), CliError> {
    let seed = resolve_seed(&args.seed)?;
    let table = run_sweep(&seed, &scaling_config(args)?)?;
    with_output(args.out.as_deref(), |w| table.write_csv(w))?;
    if args.out.is_some() {
        let show = |x: Option<f64>| x.map(|v| format!("{v:.6}")).unwrap_or_else(|| "n/a".into());
        println!(
            "rows={} slope_log_h={} slope_log_d={}",
            table.rows.len(),
            show(table.slope_log_h),
            show(table.slope_log_d)
        );
    }
    let truncated: u64 = table
        .rows
        .iter()
        .filter_map(|r| r.monte_carlo.map(|m| m.truncated_count))
        .sum();
    if truncated > 0 {
        return Err(CliError::Truncated(format!("{truncated} walks hit the step cap")));
    }
    Ok(())
}
