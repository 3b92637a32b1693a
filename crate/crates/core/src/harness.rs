//! Parameter sweeps over seeded scenarios and CSV output.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::baselines::{equal_bandwidth, greedy_batching, single_batch};
use crate::holes::{augment, HolesConfig, HolesError};
use crate::jbas::{solve, SolveError, SolverConfig};
use crate::model::{check_schedule, throughput, FeasibilityReport, Scenario, Schedule, ScheduleError};
use crate::scenario::{generate, GenConfig, ScenarioError, PRNG_NAME};

/// Environment variable that overrides the worker thread count.
pub const THREADS_ENV: &str = "EDGEBATCH_THREADS";

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("invalid sweep spec: {0}")]
    Spec(String),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("{scheduler} failed at {parameter}={value}, seed {seed}: {reason}")]
    Scheduler {
        scheduler: SchedulerKind,
        parameter: Parameter,
        value: f64,
        seed: u64,
        reason: String,
    },
    #[error("{scheduler} produced an infeasible schedule at {parameter}={value}, seed {seed}: {report:?}")]
    Infeasible {
        scheduler: SchedulerKind,
        parameter: Parameter,
        value: f64,
        seed: u64,
        report: FeasibilityReport,
    },
    #[error("thread pool: {0}")]
    Threads(String),
    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),
    #[error("output: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SchedulerKind {
    #[serde(rename = "jbas")]
    Jbas,
    #[serde(rename = "jbas+holes")]
    JbasHoles,
    #[serde(rename = "equal")]
    Equal,
    #[serde(rename = "greedy")]
    Greedy,
    #[serde(rename = "single")]
    Single,
}

impl SchedulerKind {
    pub const ALL: [SchedulerKind; 5] = [
        SchedulerKind::Jbas,
        SchedulerKind::JbasHoles,
        SchedulerKind::Equal,
        SchedulerKind::Greedy,
        SchedulerKind::Single,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SchedulerKind::Jbas => "jbas",
            SchedulerKind::JbasHoles => "jbas+holes",
            SchedulerKind::Equal => "equal",
            SchedulerKind::Greedy => "greedy",
            SchedulerKind::Single => "single",
        }
    }
}

impl fmt::Display for SchedulerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SchedulerKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown scheduler '{s}'"))
    }
}

/// The swept quantity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parameter {
    NumTasks,
    MinDeadline,
    SnrDb,
    BatchCap,
    Bandwidth,
}

impl Parameter {
    pub fn name(self) -> &'static str {
        match self {
            Parameter::NumTasks => "num_tasks",
            Parameter::MinDeadline => "min_deadline",
            Parameter::SnrDb => "snr_db",
            Parameter::BatchCap => "batch_cap",
            Parameter::Bandwidth => "bandwidth",
        }
    }

    fn apply(self, value: f64, gen: &mut GenConfig, solver: &mut SolverConfig) -> Result<(), SweepError> {
        let count = || {
            if value >= 0.0 && value.fract() == 0.0 && value <= u32::MAX as f64 {
                Ok(value as usize)
            } else {
                Err(SweepError::Spec(format!(
                    "{} must be a non-negative integer, got {value}",
                    self.name()
                )))
            }
        };
        match self {
            Parameter::NumTasks => gen.num_tasks = count()?,
            Parameter::MinDeadline => gen.deadline_window.lo = value,
            Parameter::SnrDb => gen.tx_snr_db = value,
            Parameter::BatchCap => {
                let cap = count()?;
                if cap == 0 {
                    return Err(SweepError::Spec("batch_cap must be at least 1".into()));
                }
                solver.batch_cap = Some(cap);
            }
            Parameter::Bandwidth => gen.total_bandwidth = value,
        }
        Ok(())
    }
}

impl fmt::Display for Parameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaseConfig {
    pub generator: GenConfig,
    pub solver: SolverConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub parameter: Parameter,
    pub values: Vec<f64>,
    pub seeds: Vec<u64>,
    pub schedulers: Vec<SchedulerKind>,
    #[serde(default)]
    pub base: BaseConfig,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<(), SweepError> {
        if self.values.is_empty() || self.seeds.is_empty() || self.schedulers.is_empty() {
            return Err(SweepError::Spec(
                "values, seeds and schedulers must be non-empty".into(),
            ));
        }
        for &value in &self.values {
            if !value.is_finite() {
                return Err(SweepError::Spec(format!("non-finite value {value}")));
            }
            let (mut gen, mut solver) = (self.base.generator.clone(), self.base.solver.clone());
            self.parameter.apply(value, &mut gen, &mut solver)?;
            gen.validate()?;
            solver
                .validate()
                .map_err(|e| SweepError::Spec(format!("{}={value}: {e}", self.parameter)))?;
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    pub scheduler: SchedulerKind,
    pub parameter: Parameter,
    pub value: f64,
    pub seed: u64,
    pub completed: usize,
    pub total: usize,
    pub completion_rate: f64,
    pub wall_time_ms: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SweepOptions {
    /// Record per-scheduler wall time; makes output non-reproducible.
    pub timing: bool,
}

/// Runs one scheduler on a scenario.
pub fn run_scheduler(kind: SchedulerKind, scenario: &Scenario, solver: &SolverConfig) -> Result<Schedule, String> {
    let holes = HolesConfig {
        tolerances: solver.tolerances,
    };
    let fmt_solve = |e: SolveError| e.to_string();
    let fmt_holes = |e: HolesError| e.to_string();
    match kind {
        SchedulerKind::Jbas => solve(scenario, solver).map_err(fmt_solve),
        SchedulerKind::JbasHoles => {
            let base = solve(scenario, solver).map_err(fmt_solve)?;
            augment(scenario, &base, &holes).map_err(fmt_holes)
        }
        SchedulerKind::Equal => equal_bandwidth(scenario, solver).map_err(fmt_solve),
        SchedulerKind::Greedy => greedy_batching(scenario).map_err(fmt_solve),
        SchedulerKind::Single => single_batch(scenario).map_err(fmt_solve),
    }
}

fn thread_pool() -> Result<rayon::ThreadPool, SweepError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(raw) = std::env::var(THREADS_ENV) {
        let n: usize = raw
            .trim()
            .parse()
            .map_err(|_| SweepError::Threads(format!("{THREADS_ENV}={raw} is not a thread count")))?;
        builder = builder.num_threads(n);
    }
    builder.build().map_err(|e| SweepError::Threads(e.to_string()))
}

/// One row per (scheduler, value, seed), ordered by value, then seed, then
/// the scheduler's position in the spec. All schedulers of a (value, seed)
/// pair see the same scenario, drawn with the seed itself.
pub fn run_sweep(spec: &SweepSpec, options: SweepOptions) -> Result<Vec<ResultRow>, SweepError> {
    spec.validate()?;
    let cells: Vec<(usize, usize)> = (0..spec.values.len())
        .flat_map(|v| (0..spec.seeds.len()).map(move |s| (v, s)))
        .collect();
    let pool = thread_pool()?;
    let blocks: Vec<Result<Vec<ResultRow>, SweepError>> =
        pool.install(|| cells.par_iter().map(|&(v, s)| run_cell(spec, v, s, options)).collect());
    let mut rows = Vec::with_capacity(cells.len() * spec.schedulers.len());
    for block in blocks {
        rows.extend(block?);
    }
    Ok(rows)
}

fn run_cell(spec: &SweepSpec, v: usize, s: usize, options: SweepOptions) -> Result<Vec<ResultRow>, SweepError> {
    let value = spec.values[v];
    let seed = spec.seeds[s];
    let mut gen = spec.base.generator.clone();
    let mut solver = spec.base.solver.clone();
    spec.parameter.apply(value, &mut gen, &mut solver)?;
    gen.seed = seed;
    let scenario = generate(&gen)?;
    let total = scenario.num_tasks();

    let mut cache: BTreeMap<SchedulerKind, Schedule> = BTreeMap::new();
    let mut rows = Vec::with_capacity(spec.schedulers.len());
    for &kind in &spec.schedulers {
        let clock = Instant::now();
        let schedule = match (kind, cache.get(&SchedulerKind::Jbas)) {
            (SchedulerKind::Jbas, Some(done)) => Ok(done.clone()),
            (SchedulerKind::JbasHoles, Some(base)) => augment(
                &scenario,
                base,
                &HolesConfig {
                    tolerances: solver.tolerances,
                },
            )
            .map_err(|e| e.to_string()),
            _ => run_scheduler(kind, &scenario, &solver),
        }
        .map_err(|reason| SweepError::Scheduler {
            scheduler: kind,
            parameter: spec.parameter,
            value,
            seed,
            reason,
        })?;
        let elapsed = clock.elapsed().as_secs_f64() * 1e3;
        let report = check_schedule(&scenario, &schedule, &solver.tolerances).map_err(|e: ScheduleError| {
            SweepError::Scheduler {
                scheduler: kind,
                parameter: spec.parameter,
                value,
                seed,
                reason: e.to_string(),
            }
        })?;
        if !report.is_feasible() {
            return Err(SweepError::Infeasible {
                scheduler: kind,
                parameter: spec.parameter,
                value,
                seed,
                report,
            });
        }
        let completed = throughput(&schedule);
        rows.push(ResultRow {
            scheduler: kind,
            parameter: spec.parameter,
            value,
            seed,
            completed,
            total,
            completion_rate: if total == 0 {
                0.0
            } else {
                completed as f64 / total as f64
            },
            wall_time_ms: options.timing.then_some(elapsed),
        });
        if kind == SchedulerKind::Jbas {
            cache.insert(kind, schedule);
        }
    }
    Ok(rows)
}

/// Writes rows as CSV preceded by `#` lines that record the fixed settings.
pub fn write_csv<W: Write>(spec: &SweepSpec, rows: &[ResultRow], mut out: W) -> Result<(), SweepError> {
    let gen = &spec.base.generator;
    writeln!(out, "# parameter={}", spec.parameter)?;
    writeln!(out, "# total_bandwidth_hz={}", gen.total_bandwidth)?;
    writeln!(out, "# delay_per_task_s={}", gen.delay_model.per_task)?;
    writeln!(out, "# delay_fixed_s={}", gen.delay_model.fixed)?;
    writeln!(out, "# tx_snr_db={}", gen.tx_snr_db)?;
    writeln!(out, "# prng={PRNG_NAME}")?;
    let mut writer = csv::Writer::from_writer(out);
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush()?;
    Ok(())
}

/// Mean completion rate per (scheduler, value), in first-seen order.
pub fn mean_rates(rows: &[ResultRow]) -> Vec<(SchedulerKind, f64, f64)> {
    let mut order: Vec<(SchedulerKind, u64)> = Vec::new();
    let mut sums: BTreeMap<(SchedulerKind, u64), (f64, usize)> = BTreeMap::new();
    for row in rows {
        let key = (row.scheduler, row.value.to_bits());
        let entry = sums.entry(key).or_insert_with(|| {
            order.push(key);
            (0.0, 0)
        });
        entry.0 += row.completion_rate;
        entry.1 += 1;
    }
    order
        .into_iter()
        .map(|key| {
            let (sum, n) = sums[&key];
            (key.0, f64::from_bits(key.1), sum / n as f64)
        })
        .collect()
}
