//! Command-line front end: scenario generation, scheduling, checking,
//! exhaustive search and parameter sweeps.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use edgebatch::harness::{mean_rates, run_scheduler, run_sweep, write_csv, SchedulerKind, SweepOptions, SweepSpec};
use edgebatch::holes::{augment, HolesConfig};
use edgebatch::jbas::SolverConfig;
use edgebatch::oracle::{exact_solve, OracleError, OracleMode, DEFAULT_MAX_TASKS};
use edgebatch::scenario::{
    generate, load_scenario, load_schedule, save_scenario, save_schedule, scenario_to_json, schedule_to_json,
    GenConfig, ScenarioError,
};
use edgebatch::{check_schedule, throughput, Grant, Schedule};
use thiserror::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INFEASIBLE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    File(#[from] ScenarioError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Failed(_) => EXIT_INFEASIBLE,
            _ => EXIT_USAGE,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "edgebatch",
    version,
    about = "Joint batching and bandwidth allocation for edge inference"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Draw a random scenario
    Generate(GenerateArgs),
    /// Schedule a scenario
    Solve(SolveArgs),
    /// Check a schedule against its scenario; exits 1 on violations
    Check(CheckArgs),
    /// Exhaustive search on a small scenario
    Oracle(OracleArgs),
    /// Run a parameter sweep and write CSV results
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
struct GenerateArgs {
    /// Generator settings as JSON; flags below override it
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    tasks: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    snr_db: Option<f64>,
    /// Total bandwidth in Hz
    #[arg(long)]
    bandwidth: Option<f64>,
    /// Output file; stdout if omitted
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[arg(long)]
    scenario: PathBuf,
    /// jbas, jbas+holes, equal, greedy or single
    #[arg(long, default_value = "jbas", value_parser = parse_scheduler)]
    scheduler: SchedulerKind,
    /// Admit dropped tasks into spare spectrum afterwards
    #[arg(long)]
    holes: bool,
    /// Upper bound on the number of batches
    #[arg(long)]
    batch_cap: Option<usize>,
    /// Solver settings as JSON
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CheckArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long)]
    schedule: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Dedicated,
    Fluid,
}

#[derive(Debug, Args)]
struct OracleArgs {
    #[arg(long)]
    scenario: PathBuf,
    /// Largest task count searched
    #[arg(long, default_value_t = DEFAULT_MAX_TASKS)]
    max_k: usize,
    #[arg(long, value_enum, default_value_t = ModeArg::Dedicated)]
    mode: ModeArg,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[arg(long)]
    spec: PathBuf,
    #[arg(long, short)]
    out: PathBuf,
    /// Record wall time per row; output is then not reproducible
    #[arg(long)]
    timing: bool,
}

fn parse_scheduler(s: &str) -> Result<SchedulerKind, String> {
    s.parse()
}

/// Parses `argv` (program name first) and runs the command. Returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let outcome = match cli.command {
        Command::Generate(args) => cmd_generate(args),
        Command::Solve(args) => cmd_solve(args),
        Command::Check(args) => cmd_check(args),
        Command::Oracle(args) => cmd_oracle(args),
        Command::Sweep(args) => cmd_sweep(args),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| CliError::Json {
        path: path.to_path_buf(),
        source,
    })
}

fn emit_schedule(schedule: &Schedule, out: Option<&Path>) -> Result<(), CliError> {
    match out {
        Some(path) => save_schedule(schedule, path)?,
        None => println!("{}", schedule_to_json(schedule)),
    }
    Ok(())
}

fn cmd_generate(args: GenerateArgs) -> Result<i32, CliError> {
    let mut config: GenConfig = match &args.config {
        Some(path) => read_json(path)?,
        None => GenConfig::default(),
    };
    if let Some(k) = args.tasks {
        config.num_tasks = k;
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(snr) = args.snr_db {
        config.tx_snr_db = snr;
    }
    if let Some(bw) = args.bandwidth {
        config.total_bandwidth = bw;
    }
    let scenario = generate(&config)?;
    match &args.out {
        Some(path) => save_scenario(&scenario, path)?,
        None => println!("{}", scenario_to_json(&scenario)),
    }
    Ok(EXIT_OK)
}

fn cmd_solve(args: SolveArgs) -> Result<i32, CliError> {
    let scenario = load_scenario(&args.scenario)?;
    let mut config: SolverConfig = match &args.config {
        Some(path) => read_json(path)?,
        None => SolverConfig::default(),
    };
    if let Some(cap) = args.batch_cap {
        config.batch_cap = Some(cap);
    }
    config.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let kind = match (args.scheduler, args.holes) {
        (SchedulerKind::Jbas, true) => SchedulerKind::JbasHoles,
        (SchedulerKind::Greedy, true) => {
            return Err(CliError::Usage("--holes needs a scheduler with fixed grants".into()));
        }
        (kind, _) => kind,
    };
    let mut schedule = run_scheduler(kind, &scenario, &config).map_err(CliError::Failed)?;
    if args.holes && kind != SchedulerKind::JbasHoles {
        let holes = HolesConfig {
            tolerances: config.tolerances,
        };
        schedule = augment(&scenario, &schedule, &holes).map_err(|e| CliError::Failed(e.to_string()))?;
    }
    emit_schedule(&schedule, args.out.as_deref())?;
    eprintln!(
        "{kind}: {} of {} tasks in {} batches",
        throughput(&schedule),
        scenario.num_tasks(),
        schedule.batch_starts.len()
    );
    Ok(EXIT_OK)
}

fn cmd_check(args: CheckArgs) -> Result<i32, CliError> {
    let scenario = load_scenario(&args.scenario)?;
    let schedule = load_schedule(&args.schedule)?;
    let report = match check_schedule(&scenario, &schedule, &Default::default()) {
        Ok(report) => report,
        Err(e) => {
            println!("malformed schedule: {e}");
            return Ok(EXIT_INFEASIBLE);
        }
    };
    if report.is_feasible() {
        println!(
            "feasible: {} of {} tasks completed",
            throughput(&schedule),
            scenario.num_tasks()
        );
        return Ok(EXIT_OK);
    }
    println!("{} violations", report.violations.len());
    for v in &report.violations {
        println!("  {v}");
    }
    Ok(EXIT_INFEASIBLE)
}

fn cmd_oracle(args: OracleArgs) -> Result<i32, CliError> {
    let scenario = load_scenario(&args.scenario)?;
    let mode = match args.mode {
        ModeArg::Dedicated => OracleMode::Dedicated,
        ModeArg::Fluid => OracleMode::Fluid,
    };
    let schedule = match exact_solve(&scenario, args.max_k, mode) {
        Ok(s) => s,
        Err(e @ OracleError::TooLarge { .. }) => return Err(CliError::Usage(e.to_string())),
        Err(e) => return Err(CliError::Failed(e.to_string())),
    };
    emit_schedule(&schedule, args.out.as_deref())?;
    let fluid = schedule
        .bandwidths
        .iter()
        .any(|a| matches!(a.grant, Grant::Timed { .. }));
    eprintln!(
        "optimum: {} of {} tasks{}",
        throughput(&schedule),
        scenario.num_tasks(),
        if fluid { " (time-shared uploads)" } else { "" }
    );
    Ok(EXIT_OK)
}

fn cmd_sweep(args: SweepArgs) -> Result<i32, CliError> {
    let spec: SweepSpec = read_json(&args.spec)?;
    spec.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let rows = run_sweep(&spec, SweepOptions { timing: args.timing }).map_err(|e| CliError::Failed(e.to_string()))?;
    let file = fs::File::create(&args.out).map_err(|source| CliError::Io {
        path: args.out.clone(),
        source,
    })?;
    let mut out = io::BufWriter::new(file);
    write_csv(&spec, &rows, &mut out).map_err(|e| CliError::Failed(e.to_string()))?;
    out.flush().map_err(|source| CliError::Io {
        path: args.out.clone(),
        source,
    })?;
    for (kind, value, mean) in mean_rates(&rows) {
        eprintln!("{:<10} {}={value:<8} completion {mean:.4}", kind.name(), spec.parameter);
    }
    Ok(EXIT_OK)
}
