//! Batch front end for the execution analytics toolkit.
//!
//! One subcommand per module: `schedule` (trade scheduling), `sor` (venue
//! allocation learning), `flashcrash` (hot-potato volume recursion),
//! `bookpde` (order-book diffusion), `hawkes` (mutually exciting order
//! flow), and `profile` (market-data estimation). Each run reads a JSON
//! configuration (flags override individual fields where noted), writes
//! its artifacts atomically (temp file + rename) into the output
//! directory, and echoes an execution manifest — version, seed, and a
//! hash of the resolved configuration — to standard output and
//! `manifest.json`.
//!
//! Everything is deterministic for a fixed (config, seed) pair: random
//! streams are derived from the master seed by component label, and the
//! CSV/JSON encoders format floats with the shortest round-trip
//! representation.
//!
//! Exit codes: 0 success, 1 runtime error, 2 usage error (including
//! invalid configurations). Errors are emitted as a JSON object on
//! standard error with the originating module as a message prefix.

use std::env;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use execlab_core::bookpde::{self, BookGrid, BookState, TrendFollowerSource};
use execlab_core::flashcrash::{self, CrashParams};
use execlab_core::hawkes::{self, HawkesParams, Side};
use execlab_core::market_data;
use execlab_core::rng::derive_seed;
use execlab_core::scheduler::{
    self, ArbitrageSignal, CriterionKind, ExecutionProblem, ImpactParams,
};
use execlab_core::sor::{self, LearnerConfig, SizeLaw, VenueSpec};

/// Master seed used when `--seed` is not given; every random stream of a
/// run is derived from the master seed and a component label.
const DEFAULT_SEED: u64 = 1729;

/// Fresh order draws used for the routing balance diagnostics.
const BALANCE_DRAWS: usize = 10_000;

#[derive(Parser)]
#[command(
    name = "execlab",
    version,
    about = "Execution analytics: scheduling, routing, crash dynamics, book diffusion, order flow"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a trade-scheduling problem and emit its trajectory.
    Schedule(ScheduleArgs),
    /// Run the venue-allocation learner over simulated order flow.
    Sor(SorArgs),
    /// Iterate the hot-potato volume recursion.
    Flashcrash(FlashcrashArgs),
    /// Integrate the order-book diffusion and track the trading price.
    Bookpde(BookpdeArgs),
    /// Simulate mutually exciting bid/ask order flow with diagnostics.
    Hawkes(HawkesArgs),
    /// Estimate a sliced market profile from day-level CSV samples.
    Profile(ProfileArgs),
}

/// Output options shared by every subcommand.
#[derive(Args, Clone)]
struct OutputArgs {
    /// Master seed for every random stream of the run.
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Output directory (falls back to $EXECLAB_OUT, then the working
    /// directory).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Encoding of the main output series.
    #[arg(long, value_enum, default_value_t = SeriesFormat::Csv)]
    format: SeriesFormat,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum SeriesFormat {
    Csv,
    Json,
}

#[derive(Args)]
struct ScheduleArgs {
    /// Execution problem as JSON (strict field checking).
    #[arg(long, required_unless_present = "preset", conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Named built-in problem instead of --config.
    #[arg(long, value_enum)]
    preset: Option<SchedulePreset>,
    /// Criterion to optimize.
    #[arg(long, value_enum, default_value_t = CriterionFlag::Expectation)]
    criterion: CriterionFlag,
    /// Also report the cost sensitivities of the statistical optimum.
    #[arg(long)]
    greeks: bool,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum SchedulePreset {
    /// Flat intraday profile, no spread cost, no signal, no risk aversion:
    /// the optimum is the uniform schedule.
    FlatRiskless,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum CriterionFlag {
    /// Conditioned expected cost (closed form).
    Expectation,
    /// Mean-variance criterion (tridiagonal system).
    Mv,
    /// Unconditioned statistical criterion (damped Newton).
    Statistical,
}

impl CriterionFlag {
    fn kind(self) -> CriterionKind {
        match self {
            CriterionFlag::Expectation => CriterionKind::Expectation,
            CriterionFlag::Mv => CriterionKind::MeanVariance,
            CriterionFlag::Statistical => CriterionKind::Statistical,
        }
    }
}

#[derive(Args)]
struct SorArgs {
    /// Venue specifications as a JSON array (intensity, queue_law,
    /// event_size per venue).
    #[arg(long)]
    config: PathBuf,
    /// Learner iterations.
    #[arg(long, default_value_t = 100_000)]
    iters: usize,
    /// Initial learning-rate scale gamma_0.
    #[arg(long, default_value_t = 0.05)]
    gamma0: f64,
    /// Learning-rate decay exponent beta in (0.5, 1].
    #[arg(long, default_value_t = 0.85)]
    beta: f64,
    /// Constant size of each routed order.
    #[arg(long, default_value_t = 1.0)]
    order_size: f64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct FlashcrashArgs {
    /// Crash parameters as JSON; the flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Fundamental daily volume spread uniformly over the slices.
    #[arg(long)]
    daily_volume: Option<f64>,
    /// Number of intraday slices.
    #[arg(long)]
    slices: Option<usize>,
    /// Participation rate targeted by the selling algorithm, in (0,1).
    #[arg(long)]
    participation: Option<f64>,
    /// Echo multiplier: market-maker volume triggered per share traded.
    #[arg(long)]
    echo_factor: Option<f64>,
    /// Fraction of each hot-potato leg that is not re-hedged, in (0,1];
    /// given without --echo-factor (and without --config), the multiplier
    /// is derived as the closed-loop echo sum limit of this value.
    #[arg(long)]
    pass_through: Option<f64>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct BookpdeArgs {
    /// Grid and run parameters as JSON; the flags below override its
    /// fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Lower price bound.
    #[arg(long)]
    pmin: Option<f64>,
    /// Upper price bound.
    #[arg(long)]
    pmax: Option<f64>,
    /// Grid nodes.
    #[arg(long)]
    points: Option<usize>,
    /// Time step (must satisfy the diffusion stability bound).
    #[arg(long)]
    dt: Option<f64>,
    /// Noise scale eps; the diffusion coefficient is eps^2/2.
    #[arg(long)]
    eps: Option<f64>,
    /// Reinjection offset of the dipole on each side of the trading price.
    #[arg(long)]
    offset: Option<f64>,
    /// Number of time steps.
    #[arg(long)]
    steps: Option<usize>,
    /// Trend-follower lookback horizon; omit for the static dipole.
    #[arg(long)]
    trend_h: Option<f64>,
    /// Initial book preset.
    #[arg(long, value_enum)]
    ic: Option<BookPreset>,
    /// Write a full density snapshot every this many steps.
    #[arg(long)]
    snapshot_every: Option<usize>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum BookPreset {
    /// Antisymmetric linear profile with unit slope.
    Linear,
    /// Antisymmetric Gaussian bid bump / ask dip around the center.
    GaussianFlanks,
    /// Heavier bid flank than ask flank; the trading price drifts upward.
    LopsidedFlanks,
}

impl BookPreset {
    fn build(self, grid: &BookGrid) -> Vec<f64> {
        let center = 0.5 * (grid.p_min + grid.p_max);
        match self {
            BookPreset::Linear => bookpde::linear_book(grid, center, 1.0),
            BookPreset::GaussianFlanks => {
                bookpde::gaussian_flank_book(grid, center, 1.2, 0.5, 1.0)
            }
            BookPreset::LopsidedFlanks => {
                let bump = |p: f64, mu: f64| {
                    let w = 0.8f64;
                    (-((p - mu) * (p - mu)) / (2.0 * w * w)).exp()
                };
                (0..grid.n_points)
                    .map(|i| {
                        let p = grid.price(i);
                        1.3 * bump(p, center - 1.5) - 0.9 * bump(p, center + 1.5)
                    })
                    .collect()
            }
        }
    }
}

/// Resolved book run: grid geometry plus run length, source, initial
/// condition, and snapshot cadence.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BookRunConfig {
    p_min: f64,
    p_max: f64,
    n_points: usize,
    dt: f64,
    eps: f64,
    reinjection_offset: f64,
    steps: usize,
    #[serde(default)]
    trend_horizon: Option<f64>,
    #[serde(default = "default_book_preset")]
    initial_condition: BookPreset,
    #[serde(default)]
    snapshot_every: Option<usize>,
}

fn default_book_preset() -> BookPreset {
    BookPreset::GaussianFlanks
}

impl Default for BookRunConfig {
    fn default() -> Self {
        BookRunConfig {
            p_min: 0.0,
            p_max: 10.0,
            n_points: 101,
            dt: 1e-3,
            eps: 1.0,
            reinjection_offset: 0.4,
            steps: 1000,
            trend_horizon: None,
            initial_condition: BookPreset::GaussianFlanks,
            snapshot_every: None,
        }
    }
}

#[derive(Args)]
struct HawkesArgs {
    /// Hawkes parameters as JSON; the flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Baseline intensity for both sides.
    #[arg(long)]
    mu: Option<f64>,
    /// Excitation jump added to the opposite side's intensity per event.
    #[arg(long)]
    c: Option<f64>,
    /// Exponential decay rate of the excitation.
    #[arg(long)]
    k: Option<f64>,
    /// Simulation horizon in model time units.
    #[arg(long)]
    horizon: Option<f64>,
    #[command(flatten)]
    output: OutputArgs,
}

/// Resolved Hawkes run: the kernel parameters plus the horizon.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct HawkesRunConfig {
    mu_bid: f64,
    mu_ask: f64,
    excitation: f64,
    decay: f64,
    horizon: f64,
}

impl Default for HawkesRunConfig {
    fn default() -> Self {
        HawkesRunConfig {
            mu_bid: 1.0,
            mu_ask: 1.0,
            excitation: 0.5,
            decay: 1.0,
            horizon: 50_000.0,
        }
    }
}

#[derive(Args)]
struct ProfileArgs {
    /// Day-level CSV with header day,slice,volume,volatility,half_spread.
    #[arg(long, required_unless_present = "config", conflicts_with = "config")]
    input: Option<PathBuf>,
    /// JSON config {"input": "samples.csv"} as an alternative to --input.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProfileRunConfig {
    input: PathBuf,
}

/// One failed run: usage errors exit with 2, runtime errors with 1; both
/// print a JSON object on standard error.
#[derive(Debug)]
enum CliError {
    Usage(String),
    Runtime(String),
}

impl CliError {
    fn report(self) -> ExitCode {
        let (message, kind, code) = match self {
            CliError::Usage(m) => (m, "usage", 2),
            CliError::Runtime(m) => (m, "runtime", 1),
        };
        eprintln!("{}", json!({ "error": message, "kind": kind }));
        ExitCode::from(code)
    }
}

/// Artifacts of one run, plus the resolved configuration they came from
/// (hashed into the manifest).
struct RunOutput {
    artifacts: Vec<(String, Vec<u8>)>,
    resolved: Value,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => return report_clap_error(err),
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => err.report(),
    }
}

/// Map clap's own errors onto the exit-code contract: help/version print
/// normally, everything else becomes a usage-error JSON naming the
/// offending subcommand when there is one.
fn report_clap_error(err: clap::Error) -> ExitCode {
    use clap::error::{ContextKind, ContextValue, ErrorKind};
    match err.kind() {
        ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
            let _ = err.print();
            ExitCode::SUCCESS
        }
        kind => {
            let mut body = json!({
                "error": err.to_string().trim_end(),
                "kind": "usage",
            });
            if kind == ErrorKind::InvalidSubcommand {
                if let Some(ContextValue::String(name)) = err.get(ContextKind::InvalidSubcommand) {
                    body["error"] = json!(format!("unknown subcommand `{name}`"));
                    body["subcommand"] = json!(name);
                }
            }
            eprintln!("{body}");
            ExitCode::from(2)
        }
    }
}

fn execute(cli: Cli) -> Result<(), CliError> {
    let (output, run) = match &cli.command {
        Command::Schedule(args) => (&args.output, cmd_schedule(args)?),
        Command::Sor(args) => (&args.output, cmd_sor(args)?),
        Command::Flashcrash(args) => (&args.output, cmd_flashcrash(args)?),
        Command::Bookpde(args) => (&args.output, cmd_bookpde(args)?),
        Command::Hawkes(args) => (&args.output, cmd_hawkes(args)?),
        Command::Profile(args) => (&args.output, cmd_profile(args)?),
    };

    let out_dir = resolve_out_dir(&output.out);
    fs::create_dir_all(&out_dir)
        .map_err(|e| CliError::Runtime(format!("io: {}: {e}", out_dir.display())))?;
    for (name, bytes) in &run.artifacts {
        write_atomic(&out_dir.join(name), bytes)?;
    }

    let manifest = json!({
        "version": env!("CARGO_PKG_VERSION"),
        "seed": output.seed,
        "config_hash": config_hash(&run.resolved),
    });
    let mut manifest_bytes = serde_json::to_vec_pretty(&manifest).expect("manifest is plain data");
    manifest_bytes.push(b'\n');
    write_atomic(&out_dir.join("manifest.json"), &manifest_bytes)?;
    println!("{manifest}");
    Ok(())
}

/// Output directory: --out, then $EXECLAB_OUT, then the working directory.
fn resolve_out_dir(out: &Option<PathBuf>) -> PathBuf {
    out.clone()
        .or_else(|| env::var_os("EXECLAB_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}

/// Write via a sibling temp file and rename, so readers never observe a
/// partially written artifact.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let mut tmp_name = path.as_os_str().to_owned();
    tmp_name.push(".tmp");
    let tmp = PathBuf::from(tmp_name);
    fs::write(&tmp, bytes)
        .and_then(|()| fs::rename(&tmp, path))
        .map_err(|e| CliError::Runtime(format!("io: {}: {e}", path.display())))
}

/// Hash of the canonical (key-sorted, compact) JSON encoding of the
/// resolved configuration; changes exactly when a semantic field changes.
fn config_hash(resolved: &Value) -> String {
    format!("{:016x}", derive_seed(0, &resolved.to_string()))
}

/// Read and strictly parse a JSON config file.
fn load_config<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))
}

/// The built-in flat riskless problem: constant profile, no spread cost,
/// no signal, no risk aversion, ten slices of a unit buy.
fn flat_riskless_problem() -> ExecutionProblem {
    let n = 10;
    ExecutionProblem {
        total_quantity: 1.0,
        profile: market_data::SlicedMarketProfile {
            expected_volume: vec![2.0; n],
            volatility: vec![0.3; n],
            half_spread: vec![0.05; n],
            mean_ratio: vec![0.15; n],
            var_ratio: vec![0.0; n],
            var_half_spread: vec![0.0; n],
        },
        impact: ImpactParams {
            a: 0.0,
            kappa: 1.3,
            gamma: 1.0,
            var_noise: 0.0,
        },
        signal: ArbitrageSignal::zero(n),
        risk_aversion: 0.0,
        initial_price: 50.0,
    }
}

fn cmd_schedule(args: &ScheduleArgs) -> Result<RunOutput, CliError> {
    let problem: ExecutionProblem = match (&args.config, args.preset) {
        (Some(path), _) => load_config(path)?,
        (None, Some(SchedulePreset::FlatRiskless)) => flat_riskless_problem(),
        (None, None) => unreachable!("clap requires --config or --preset"),
    };
    problem
        .validate()
        .map_err(|e| CliError::Usage(format!("scheduler: {e}")))?;

    let kind = args.criterion.kind();
    let trajectory =
        scheduler::solve(kind, &problem).map_err(|e| CliError::Runtime(format!("scheduler: {e}")))?;
    let volumes = trajectory.volumes();
    let remaining = trajectory.remaining();

    let series = match args.output.format {
        SeriesFormat::Csv => {
            let mut csv = String::from("slice,remaining,volume\n");
            for (i, v) in volumes.iter().enumerate() {
                writeln!(csv, "{},{},{}", i + 1, remaining[i + 1], v).expect("string write");
            }
            ("trajectory.csv".to_string(), csv.into_bytes())
        }
        SeriesFormat::Json => {
            let rows: Vec<Value> = volumes
                .iter()
                .enumerate()
                .map(|(i, v)| json!({ "slice": i + 1, "remaining": remaining[i + 1], "volume": v }))
                .collect();
            ("trajectory.json".to_string(), pretty_json(&Value::Array(rows)))
        }
    };

    let mut diagnostics = json!({
        "criterion": kind,
        "cost": scheduler::criterion_cost(kind, &trajectory, &problem),
        "total_quantity": problem.total_quantity,
        "n_slices": problem.n_slices(),
    });
    if args.greeks {
        let g = scheduler::greeks(&problem)
            .map_err(|e| CliError::Runtime(format!("scheduler: {e}")))?;
        diagnostics["greeks"] = serde_json::to_value(&g).expect("greeks are plain data");
    }

    Ok(RunOutput {
        artifacts: vec![
            series,
            ("diagnostics.json".to_string(), pretty_json(&diagnostics)),
        ],
        resolved: json!({
            "subcommand": "schedule",
            "problem": problem,
            "criterion": kind,
            "greeks": args.greeks,
            "format": args.output.format,
        }),
    })
}

fn cmd_sor(args: &SorArgs) -> Result<RunOutput, CliError> {
    let venues: Vec<VenueSpec> = load_config(&args.config)?;
    let order = SizeLaw::Constant {
        value: args.order_size,
    };
    let config = LearnerConfig {
        gamma0: args.gamma0,
        beta: args.beta,
        iterations: args.iters,
        seed: derive_seed(args.output.seed, "cli/sor"),
    };
    // Everything run_sor can reject is configuration, so all its errors
    // are usage errors.
    let run = sor::run_sor(&venues, &order, &config)
        .map_err(|e| CliError::Usage(format!("sor: {e}")))?;

    let k = venues.len();
    let series = match args.output.format {
        SeriesFormat::Csv => {
            let mut csv = String::from("iter");
            for j in 1..=k {
                write!(csv, ",r_{j}").expect("string write");
            }
            csv.push('\n');
            for (i, key) in run.path.iter().enumerate() {
                write!(csv, "{}", i + 1).expect("string write");
                for w in key {
                    write!(csv, ",{w}").expect("string write");
                }
                csv.push('\n');
            }
            ("path.csv".to_string(), csv.into_bytes())
        }
        SeriesFormat::Json => (
            "path.json".to_string(),
            pretty_json(&serde_json::to_value(&run.path).expect("weights are plain data")),
        ),
    };

    let balance = sor::balance_statistics(
        &run.final_key,
        &venues,
        &order,
        BALANCE_DRAWS,
        derive_seed(args.output.seed, "cli/sor/balance"),
    )
    .map_err(|e| CliError::Runtime(format!("sor: {e}")))?;
    let criterion = sor::criterion(
        &run.final_key,
        &venues,
        &order,
        BALANCE_DRAWS,
        derive_seed(args.output.seed, "cli/sor/criterion"),
    )
    .map_err(|e| CliError::Runtime(format!("sor: {e}")))?;
    let summary = json!({
        "final_key": run.final_key.weights(),
        "balance": {
            "means": balance.means,
            "std_errors": balance.std_errors,
            "max_pairwise_z": balance.max_pairwise_z,
        },
        "criterion": { "mean": criterion.mean, "std_error": criterion.std_error },
    });

    Ok(RunOutput {
        artifacts: vec![
            series,
            ("summary.json".to_string(), pretty_json(&summary)),
        ],
        resolved: json!({
            "subcommand": "sor",
            "venues": venues,
            "iterations": args.iters,
            "gamma0": args.gamma0,
            "beta": args.beta,
            "order_size": args.order_size,
            "format": args.output.format,
        }),
    })
}

/// Figure defaults merged with the config file and flag overrides; the
/// pass-through flag derives the echo multiplier only when neither a
/// config file nor --echo-factor pins it.
fn resolve_crash_params(args: &FlashcrashArgs) -> Result<CrashParams, CliError> {
    let mut params: CrashParams = match &args.config {
        Some(path) => load_config(path)?,
        None => CrashParams {
            daily_volume: 100.0,
            n_slices: 10,
            participation: 0.08,
            initial_participation: None,
            echo_factor: 2.0,
            pass_through: 1.0,
        },
    };
    if let Some(v) = args.daily_volume {
        params.daily_volume = v;
    }
    if let Some(t) = args.slices {
        params.n_slices = t;
    }
    if let Some(rho) = args.participation {
        params.participation = rho;
    }
    if let Some(q) = args.pass_through {
        params.pass_through = q;
    }
    match (args.echo_factor, args.pass_through, &args.config) {
        (Some(m), _, _) => params.echo_factor = m,
        (None, Some(q), None) => params.echo_factor = flashcrash::echo_sum_limit(q),
        _ => {}
    }
    params
        .validate()
        .map_err(|e| CliError::Usage(format!("flashcrash: {e}")))?;
    Ok(params)
}

fn cmd_flashcrash(args: &FlashcrashArgs) -> Result<RunOutput, CliError> {
    let params = resolve_crash_params(args)?;
    let path = flashcrash::simulate_crash(&params)
        .map_err(|e| CliError::Runtime(format!("flashcrash: {e}")))?;

    let series = match args.output.format {
        SeriesFormat::Csv => {
            let mut csv = String::from("slice,algo_volume,echo_volume,total_volume\n");
            for i in 0..path.algo_volume.len() {
                writeln!(
                    csv,
                    "{},{},{},{}",
                    i + 1,
                    path.algo_volume[i],
                    path.echo_volume[i],
                    path.total_volume[i]
                )
                .expect("string write");
            }
            ("crash.csv".to_string(), csv.into_bytes())
        }
        SeriesFormat::Json => (
            "crash.json".to_string(),
            pretty_json(&serde_json::to_value(&path).expect("path is plain data")),
        ),
    };

    Ok(RunOutput {
        artifacts: vec![series],
        resolved: json!({
            "subcommand": "flashcrash",
            "params": params,
            "format": args.output.format,
        }),
    })
}

fn cmd_bookpde(args: &BookpdeArgs) -> Result<RunOutput, CliError> {
    let mut cfg: BookRunConfig = match &args.config {
        Some(path) => load_config(path)?,
        None => BookRunConfig::default(),
    };
    if let Some(v) = args.pmin {
        cfg.p_min = v;
    }
    if let Some(v) = args.pmax {
        cfg.p_max = v;
    }
    if let Some(v) = args.points {
        cfg.n_points = v;
    }
    if let Some(v) = args.dt {
        cfg.dt = v;
    }
    if let Some(v) = args.eps {
        cfg.eps = v;
    }
    if let Some(v) = args.offset {
        cfg.reinjection_offset = v;
    }
    if let Some(v) = args.steps {
        cfg.steps = v;
    }
    if let Some(v) = args.trend_h {
        cfg.trend_horizon = Some(v);
    }
    if let Some(v) = args.ic {
        cfg.initial_condition = v;
    }
    if let Some(v) = args.snapshot_every {
        cfg.snapshot_every = Some(v);
    }

    let grid = BookGrid::new(
        cfg.p_min,
        cfg.p_max,
        cfg.n_points,
        cfg.dt,
        cfg.eps,
        cfg.reinjection_offset,
    )
    .map_err(|e| CliError::Usage(format!("bookpde: {e}")))?;
    let source = match cfg.trend_horizon {
        Some(h) => TrendFollowerSource {
            horizon: h,
            enabled: true,
        },
        None => TrendFollowerSource::disabled(),
    };
    source
        .validate(&grid)
        .map_err(|e| CliError::Usage(format!("bookpde: {e}")))?;
    let mut state = BookState::new(cfg.initial_condition.build(&grid), &grid)
        .map_err(|e| CliError::Usage(format!("bookpde: {e}")))?;

    let cadence = cfg.snapshot_every.unwrap_or(0);
    let mut snapshots: Vec<(f64, Vec<f64>)> = Vec::new();
    if cadence > 0 {
        snapshots.push((state.time, state.density.clone()));
    }
    for step_index in 1..=cfg.steps {
        state = bookpde::step(state, &grid, Some(&source))
            .map_err(|e| CliError::Runtime(format!("bookpde: {e} at step {step_index}")))?;
        if cadence > 0 && step_index % cadence == 0 {
            snapshots.push((state.time, state.density.clone()));
        }
    }

    let series = match args.output.format {
        SeriesFormat::Csv => {
            let mut csv = String::from("t,p_star\n");
            for (i, p) in state.price_history.iter().enumerate() {
                writeln!(csv, "{},{}", i as f64 * grid.dt, p).expect("string write");
            }
            ("path.csv".to_string(), csv.into_bytes())
        }
        SeriesFormat::Json => {
            let rows: Vec<Value> = state
                .price_history
                .iter()
                .enumerate()
                .map(|(i, p)| json!({ "t": i as f64 * grid.dt, "p_star": p }))
                .collect();
            ("path.json".to_string(), pretty_json(&Value::Array(rows)))
        }
    };

    let mut artifacts = vec![series];
    if !snapshots.is_empty() {
        let mut csv = String::from("t");
        for j in 0..grid.n_points {
            write!(csv, ",m_{j}").expect("string write");
        }
        csv.push('\n');
        for (t, density) in &snapshots {
            write!(csv, "{t}").expect("string write");
            for m in density {
                write!(csv, ",{m}").expect("string write");
            }
            csv.push('\n');
        }
        artifacts.push(("snapshots.csv".to_string(), csv.into_bytes()));
    }

    Ok(RunOutput {
        artifacts,
        resolved: json!({
            "subcommand": "bookpde",
            "config": cfg,
            "format": args.output.format,
        }),
    })
}

fn cmd_hawkes(args: &HawkesArgs) -> Result<RunOutput, CliError> {
    let mut cfg: HawkesRunConfig = match &args.config {
        Some(path) => load_config(path)?,
        None => HawkesRunConfig::default(),
    };
    if let Some(mu) = args.mu {
        cfg.mu_bid = mu;
        cfg.mu_ask = mu;
    }
    if let Some(c) = args.c {
        cfg.excitation = c;
    }
    if let Some(k) = args.k {
        cfg.decay = k;
    }
    if let Some(h) = args.horizon {
        cfg.horizon = h;
    }

    let params = HawkesParams {
        mu_bid: cfg.mu_bid,
        mu_ask: cfg.mu_ask,
        excitation: cfg.excitation,
        decay: cfg.decay,
    };
    params
        .validate()
        .map_err(|e| CliError::Usage(format!("hawkes: {e}")))?;
    if !params.is_stable() {
        return Err(CliError::Usage(format!(
            "hawkes: branching ratio {} is not below 1; the stationary simulator requires c/k < 1",
            params.branching_ratio()
        )));
    }
    if !(cfg.horizon > 0.0) {
        return Err(CliError::Usage(format!(
            "hawkes: horizon must be positive, got {}",
            cfg.horizon
        )));
    }

    let stream = hawkes::simulate_hawkes(&params, cfg.horizon, derive_seed(args.output.seed, "cli/hawkes"))
        .map_err(|e| CliError::Runtime(format!("hawkes: {e}")))?;

    let side_name = |side: Side| match side {
        Side::Bid => "bid",
        Side::Ask => "ask",
    };
    let series = match args.output.format {
        SeriesFormat::Csv => {
            let mut csv = String::from("time,side\n");
            for (time, side) in &stream.events {
                writeln!(csv, "{},{}", time, side_name(*side)).expect("string write");
            }
            ("events.csv".to_string(), csv.into_bytes())
        }
        SeriesFormat::Json => {
            let rows: Vec<Value> = stream
                .events
                .iter()
                .map(|(time, side)| json!({ "time": time, "side": side_name(*side) }))
                .collect();
            ("events.json".to_string(), pretty_json(&Value::Array(rows)))
        }
    };

    let bid_count = stream
        .events
        .iter()
        .filter(|(_, side)| *side == Side::Bid)
        .count();
    let ask_count = stream.n_events() - bid_count;
    let (stationary_bid, stationary_ask) = hawkes::stationary_intensity(&params)
        .map_err(|e| CliError::Runtime(format!("hawkes: {e}")))?;

    let rescaling = if stream.n_events() >= 100 {
        let (statistic, p_value) = hawkes::rescaling_test(&stream, &params)
            .map_err(|e| CliError::Runtime(format!("hawkes: {e}")))?;
        json!({ "statistic": statistic, "p_value": p_value })
    } else {
        Value::Null
    };
    let diffusivity = if stream.n_events() >= 100_000 {
        let scales = hawkes::geometric_scales(0.25, 128.0, 6);
        let values = hawkes::diffusivity_check(&stream, &scales)
            .map_err(|e| CliError::Runtime(format!("hawkes: {e}")))?;
        json!({ "scales": scales, "values": values })
    } else {
        Value::Null
    };

    let diagnostics = json!({
        "events": stream.n_events(),
        "horizon": cfg.horizon,
        "empirical_intensity": {
            "bid": bid_count as f64 / cfg.horizon,
            "ask": ask_count as f64 / cfg.horizon,
        },
        "stationary_intensity": { "bid": stationary_bid, "ask": stationary_ask },
        "rescaling": rescaling,
        "diffusivity": diffusivity,
    });

    Ok(RunOutput {
        artifacts: vec![
            series,
            ("diagnostics.json".to_string(), pretty_json(&diagnostics)),
        ],
        resolved: json!({
            "subcommand": "hawkes",
            "params": cfg,
            "format": args.output.format,
        }),
    })
}

fn cmd_profile(args: &ProfileArgs) -> Result<RunOutput, CliError> {
    let input = match (&args.input, &args.config) {
        (Some(path), _) => path.clone(),
        (None, Some(config)) => load_config::<ProfileRunConfig>(config)?.input,
        (None, None) => unreachable!("clap requires --input or --config"),
    };
    let file = fs::File::open(&input)
        .map_err(|e| CliError::Runtime(format!("io: {}: {e}", input.display())))?;
    let samples = market_data::read_profile_samples(file)
        .map_err(|e| CliError::Runtime(format!("market_data: {e}")))?;
    let profile = market_data::estimate_profile(&samples)
        .map_err(|e| CliError::Runtime(format!("market_data: {e}")))?;

    Ok(RunOutput {
        artifacts: vec![(
            "profile.json".to_string(),
            pretty_json(&serde_json::to_value(&profile).expect("profile is plain data")),
        )],
        resolved: json!({
            "subcommand": "profile",
            "input": input.display().to_string(),
        }),
    })
}

/// Pretty-printed JSON with a trailing newline.
fn pretty_json(value: &Value) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("JSON values always serialize");
    bytes.push(b'\n');
    bytes
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_hash_tracks_semantic_changes() {
        let a = json!({ "subcommand": "flashcrash", "participation": 0.08 });
        let b = json!({ "subcommand": "flashcrash", "participation": 0.09 });
        assert_eq!(config_hash(&a), config_hash(&a));
        assert_ne!(config_hash(&a), config_hash(&b));
        // Key order does not matter: Value maps are sorted.
        let shuffled = json!({ "participation": 0.08, "subcommand": "flashcrash" });
        assert_eq!(config_hash(&a), config_hash(&shuffled));
    }

    fn bare_crash_args() -> FlashcrashArgs {
        FlashcrashArgs {
            config: None,
            daily_volume: None,
            slices: None,
            participation: None,
            echo_factor: None,
            pass_through: None,
            output: OutputArgs {
                seed: DEFAULT_SEED,
                out: None,
                format: SeriesFormat::Csv,
            },
        }
    }

    #[test]
    fn pass_through_derives_the_multiplier_only_without_overrides() {
        // Figure defaults when nothing is given.
        let params = resolve_crash_params(&bare_crash_args()).unwrap();
        assert_eq!(params.echo_factor, 2.0);

        // Pass-through alone derives the closed-loop sum limit.
        let derived = resolve_crash_params(&FlashcrashArgs {
            pass_through: Some(0.5),
            ..bare_crash_args()
        })
        .unwrap();
        assert_eq!(derived.pass_through, 0.5);
        assert_eq!(derived.echo_factor, flashcrash::echo_sum_limit(0.5));

        // An explicit multiplier wins over the derivation.
        let pinned = resolve_crash_params(&FlashcrashArgs {
            pass_through: Some(0.5),
            echo_factor: Some(3.0),
            ..bare_crash_args()
        })
        .unwrap();
        assert_eq!(pinned.echo_factor, 3.0);
    }

    #[test]
    fn flat_riskless_preset_trades_uniformly() {
        let problem = flat_riskless_problem();
        let trajectory = scheduler::solve(CriterionKind::Expectation, &problem).unwrap();
        let uniform = problem.total_quantity / problem.n_slices() as f64;
        for v in trajectory.volumes() {
            assert!((v - uniform).abs() <= 1e-12 * uniform);
        }
    }

    #[test]
    fn book_presets_have_a_crossing_on_the_default_grid() {
        let cfg = BookRunConfig::default();
        let grid = BookGrid::new(
            cfg.p_min,
            cfg.p_max,
            cfg.n_points,
            cfg.dt,
            cfg.eps,
            cfg.reinjection_offset,
        )
        .unwrap();
        for preset in [
            BookPreset::Linear,
            BookPreset::GaussianFlanks,
            BookPreset::LopsidedFlanks,
        ] {
            assert!(BookState::new(preset.build(&grid), &grid).is_ok());
        }
    }
}
