//! Domain types, the uplink/inference formulas, and the feasibility checker.
//!
//! Units are fixed across the crate: seconds, Hz, bits and linear watts.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Strictness margin applied to `batch_start > arrival`.
pub const TIME_MARGIN: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("{name} must be positive and finite, got {value}")]
    Domain { name: &'static str, value: f64 },
    #[error("task {task}: batch start {start} does not leave an upload window after arrival {arrival}")]
    Causality { task: usize, start: f64, arrival: f64 },
    #[error("task {task}: {reason}")]
    InvalidTask { task: usize, reason: String },
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
}

/// Structural problems that make a schedule unreadable against its scenario.
/// These are distinct from constraint violations, which land in a [`FeasibilityReport`].
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScheduleError {
    #[error("unknown task id {0}")]
    UnknownTask(usize),
    #[error("task {task} assigned to batch {batch}, but only {num_batches} batches exist")]
    UnknownBatch {
        task: usize,
        batch: usize,
        num_batches: usize,
    },
    #[error("batch {0} has a non-finite start time")]
    NonFiniteStart(usize),
    #[error("scheduled task {0} has no bandwidth allocation")]
    MissingAllocation(usize),
    #[error("task {0} has an allocation but is not scheduled")]
    UnscheduledAllocation(usize),
    #[error("task {0} has more than one allocation")]
    DuplicateAllocation(usize),
    #[error("task {task}: allocation is not a positive finite value ({detail})")]
    BadAllocation { task: usize, detail: String },
}

fn positive(name: &'static str, value: f64) -> Result<f64, ModelError> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(ModelError::Domain { name, value })
    }
}

/// One inference request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Task {
    pub id: usize,
    pub arrival: f64,
    pub deadline: f64,
    pub payload_bits: f64,
    pub tx_power: f64,
    pub channel_gain: f64,
}

impl Task {
    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |reason: &str| ModelError::InvalidTask {
            task: self.id,
            reason: reason.to_string(),
        };
        if !(self.arrival.is_finite() && self.arrival >= 0.0) {
            return Err(bad("arrival must be finite and non-negative"));
        }
        if !(self.deadline.is_finite() && self.deadline > self.arrival) {
            return Err(bad("deadline must be finite and after arrival"));
        }
        if !(self.payload_bits.is_finite() && self.payload_bits > 0.0) {
            return Err(bad("payload must be positive"));
        }
        if !(self.tx_power.is_finite() && self.tx_power > 0.0) {
            return Err(bad("transmit power must be positive"));
        }
        if !(self.channel_gain.is_finite() && self.channel_gain > 0.0) {
            return Err(bad("channel gain must be positive"));
        }
        Ok(())
    }

    /// Uplink spectral efficiency of this task's device.
    pub fn rate(&self, noise_power: f64) -> Result<f64, ModelError> {
        spectral_efficiency(self.tx_power, self.channel_gain, noise_power)
    }
}

/// Linear batch latency model: `per_task * size + fixed` for a non-empty batch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DelayModel {
    #[serde(rename = "a")]
    pub per_task: f64,
    #[serde(rename = "b")]
    pub fixed: f64,
}

impl Default for DelayModel {
    fn default() -> Self {
        Self {
            per_task: 0.005,
            fixed: 0.020,
        }
    }
}

impl DelayModel {
    pub fn validate(&self) -> Result<(), ModelError> {
        positive("per-task delay", self.per_task)?;
        if !(self.fixed.is_finite() && self.fixed >= 0.0) {
            return Err(ModelError::Domain {
                name: "fixed delay",
                value: self.fixed,
            });
        }
        Ok(())
    }

    /// Shortest possible service time: a batch of one.
    pub fn min_service(&self) -> f64 {
        self.per_task + self.fixed
    }
}

/// Where a generated scenario came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    pub prng: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub tasks: Vec<Task>,
    pub total_bandwidth: f64,
    pub noise_power: f64,
    pub delay_model: DelayModel,
    pub provenance: Option<Provenance>,
}

impl Scenario {
    pub fn new(tasks: Vec<Task>, total_bandwidth: f64, noise_power: f64, delay_model: DelayModel) -> Self {
        Self {
            tasks,
            total_bandwidth,
            noise_power,
            delay_model,
            provenance: None,
        }
    }

    pub fn num_tasks(&self) -> usize {
        self.tasks.len()
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        positive("total bandwidth", self.total_bandwidth)?;
        positive("noise power", self.noise_power)?;
        self.delay_model.validate()?;
        for (idx, task) in self.tasks.iter().enumerate() {
            if task.id != idx {
                return Err(ModelError::InvalidScenario(format!(
                    "task at position {idx} has id {}; ids must be 0..K-1 in order",
                    task.id
                )));
            }
            task.validate()?;
        }
        Ok(())
    }

    /// Spectral efficiency per task, in task order.
    pub fn rates(&self) -> Vec<f64> {
        self.tasks
            .iter()
            .map(|t| t.rate(self.noise_power).unwrap_or(f64::MIN_POSITIVE))
            .collect()
    }

    /// The big-M constant: latest deadline plus the delay of a batch holding every task.
    pub fn big_m(&self) -> f64 {
        let latest = self.tasks.iter().map(|t| t.deadline).fold(0.0_f64, f64::max);
        latest + batch_delay(self.tasks.len(), &self.delay_model)
    }
}

/// Margins used when testing constraints in floating point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// Required gap between a task's arrival and its batch start.
    pub time_margin: f64,
    /// Relative slack on the total bandwidth budget.
    pub rel_bandwidth: f64,
    /// Relative slack for non-strict time comparisons and upload completeness.
    pub numeric_eps: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            time_margin: TIME_MARGIN,
            rel_bandwidth: 1e-9,
            numeric_eps: 1e-9,
        }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<(), ModelError> {
        positive("time margin", self.time_margin)?;
        positive("relative bandwidth slack", self.rel_bandwidth)?;
        positive("numeric epsilon", self.numeric_eps)?;
        Ok(())
    }

    /// Absolute slack for `lhs <= rhs` comparisons between instants.
    pub(crate) fn time_slack(&self, scale: f64) -> f64 {
        self.numeric_eps * scale.abs().max(1.0)
    }
}

/// `log2(1 + p h / sigma^2)` in bits/s/Hz.
pub fn spectral_efficiency(tx_power: f64, channel_gain: f64, noise_power: f64) -> Result<f64, ModelError> {
    positive("transmit power", tx_power)?;
    positive("channel gain", channel_gain)?;
    positive("noise power", noise_power)?;
    Ok((tx_power * channel_gain / noise_power).ln_1p() / std::f64::consts::LN_2)
}

/// Inference delay of a batch; an empty batch costs nothing.
pub fn batch_delay(size: usize, model: &DelayModel) -> f64 {
    if size == 0 {
        0.0
    } else {
        model.per_task * size as f64 + model.fixed
    }
}

/// Constant bandwidth that uploads the task's payload between its arrival and `batch_start`.
pub fn required_bandwidth(task: &Task, batch_start: f64, noise_power: f64) -> Result<f64, ModelError> {
    if !(batch_start > task.arrival + TIME_MARGIN) {
        return Err(ModelError::Causality {
            task: task.id,
            start: batch_start,
            arrival: task.arrival,
        });
    }
    let rate = task.rate(noise_power)?;
    Ok(task.payload_bits / (rate * (batch_start - task.arrival)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment {
    pub task_id: usize,
    pub batch: usize,
}

/// A piece of a time-varying upload: `hz` held over `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub start: f64,
    pub end: f64,
    pub hz: f64,
}

/// How a scheduled task's uplink spectrum is granted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Grant {
    /// A dedicated sub-channel held for the whole horizon.
    Dedicated { hz: f64 },
    /// Spectrum held only over the listed segments.
    Timed { segments: Vec<Segment> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Allocation {
    pub task_id: usize,
    #[serde(flatten)]
    pub grant: Grant,
}

/// Task-to-batch association, batch start times and uplink grants.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Schedule {
    pub batch_starts: Vec<f64>,
    pub assignments: Vec<Assignment>,
    pub bandwidths: Vec<Allocation>,
}

impl Schedule {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Per-task batch index. For multiply-assigned tasks the first listed batch wins.
    pub fn association(&self, num_tasks: usize) -> Vec<Option<usize>> {
        let mut assoc = vec![None; num_tasks];
        for a in &self.assignments {
            if a.task_id < num_tasks && assoc[a.task_id].is_none() {
                assoc[a.task_id] = Some(a.batch);
            }
        }
        assoc
    }

    pub fn grant_of(&self, task_id: usize) -> Option<&Grant> {
        self.bandwidths.iter().find(|a| a.task_id == task_id).map(|a| &a.grant)
    }

    /// Builds a schedule where every scheduled task holds a dedicated grant of
    /// exactly its required bandwidth.
    pub fn with_required_bandwidths(
        scenario: &Scenario,
        assoc: &[Option<usize>],
        batch_starts: Vec<f64>,
    ) -> Result<Self, ModelError> {
        let mut assignments = Vec::new();
        let mut bandwidths = Vec::new();
        for (task, batch) in scenario.tasks.iter().zip(assoc) {
            if let Some(n) = *batch {
                let hz = required_bandwidth(task, batch_starts[n], scenario.noise_power)?;
                assignments.push(Assignment {
                    task_id: task.id,
                    batch: n,
                });
                bandwidths.push(Allocation {
                    task_id: task.id,
                    grant: Grant::Dedicated { hz },
                });
            }
        }
        Ok(Self {
            batch_starts,
            assignments,
            bandwidths,
        })
    }
}

/// Number of distinct scheduled tasks.
pub fn throughput(schedule: &Schedule) -> usize {
    let mut ids: Vec<usize> = schedule.assignments.iter().map(|a| a.task_id).collect();
    ids.sort_unstable();
    ids.dedup();
    ids.len()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Constraint {
    /// Batch starts no later than a member's arrival.
    Causality,
    /// Batch completes after a member's deadline.
    Deadline,
    /// A batch starts before its predecessor has finished.
    BatchOrder,
    /// Peak spectrum use exceeds the channel bandwidth.
    BandwidthTotal,
    /// A task appears in more than one batch.
    MultiAssignment,
    /// A grant cannot carry the task's payload before its batch starts.
    Upload,
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Constraint::Causality => "causality",
            Constraint::Deadline => "deadline",
            Constraint::BatchOrder => "batch_order",
            Constraint::BandwidthTotal => "bandwidth_total",
            Constraint::MultiAssignment => "multi_assignment",
            Constraint::Upload => "upload",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub constraint: Constraint,
    pub task: Option<usize>,
    pub batch: Option<usize>,
    /// Amount by which the constraint's left side exceeds its right side
    /// (seconds, Hz or bits depending on the constraint).
    pub magnitude: f64,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.constraint)?;
        if let Some(t) = self.task {
            write!(f, " task={t}")?;
        }
        if let Some(b) = self.batch {
            write!(f, " batch={b}")?;
        }
        write!(f, " magnitude={:e}", self.magnitude)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub violations: Vec<Violation>,
}

impl FeasibilityReport {
    pub fn is_feasible(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn count(&self, constraint: Constraint) -> usize {
        self.violations.iter().filter(|v| v.constraint == constraint).count()
    }
}

/// Checks a schedule against causality, deadlines, batch order, the spectrum
/// budget and upload completeness.
///
/// Dedicated grants occupy their sub-channel for the whole horizon, so for a
/// schedule made only of dedicated grants the spectrum check is exactly
/// `sum(B_k) <= B`. Timed grants only count while their segments are active,
/// and the check is on the peak of the summed profile.
pub fn check_schedule(
    scenario: &Scenario,
    schedule: &Schedule,
    tol: &Tolerances,
) -> Result<FeasibilityReport, ScheduleError> {
    let k = scenario.num_tasks();
    let num_batches = schedule.batch_starts.len();
    for (n, t) in schedule.batch_starts.iter().enumerate() {
        if !t.is_finite() {
            return Err(ScheduleError::NonFiniteStart(n));
        }
    }

    let mut batches_of: Vec<Vec<usize>> = vec![Vec::new(); k];
    let mut sizes = vec![0usize; num_batches];
    for a in &schedule.assignments {
        if a.task_id >= k {
            return Err(ScheduleError::UnknownTask(a.task_id));
        }
        if a.batch >= num_batches {
            return Err(ScheduleError::UnknownBatch {
                task: a.task_id,
                batch: a.batch,
                num_batches,
            });
        }
        batches_of[a.task_id].push(a.batch);
        sizes[a.batch] += 1;
    }

    let mut grants: BTreeMap<usize, &Grant> = BTreeMap::new();
    for alloc in &schedule.bandwidths {
        if alloc.task_id >= k {
            return Err(ScheduleError::UnknownTask(alloc.task_id));
        }
        if batches_of[alloc.task_id].is_empty() {
            return Err(ScheduleError::UnscheduledAllocation(alloc.task_id));
        }
        if grants.insert(alloc.task_id, &alloc.grant).is_some() {
            return Err(ScheduleError::DuplicateAllocation(alloc.task_id));
        }
        validate_grant(alloc.task_id, &alloc.grant)?;
    }
    for (task, batches) in batches_of.iter().enumerate() {
        if !batches.is_empty() && !grants.contains_key(&task) {
            return Err(ScheduleError::MissingAllocation(task));
        }
    }

    let model = &scenario.delay_model;
    let mut violations = Vec::new();

    for (task, batches) in batches_of.iter().enumerate() {
        if batches.len() > 1 {
            violations.push(Violation {
                constraint: Constraint::MultiAssignment,
                task: Some(task),
                batch: None,
                magnitude: (batches.len() - 1) as f64,
            });
        }
    }

    for a in &schedule.assignments {
        let task = &scenario.tasks[a.task_id];
        let start = schedule.batch_starts[a.batch];
        if !(start > task.arrival + tol.time_margin) {
            violations.push(Violation {
                constraint: Constraint::Causality,
                task: Some(a.task_id),
                batch: Some(a.batch),
                magnitude: task.arrival - start,
            });
        }
        let finish = start + batch_delay(sizes[a.batch], model);
        if finish - task.deadline > tol.time_slack(task.deadline) {
            violations.push(Violation {
                constraint: Constraint::Deadline,
                task: Some(a.task_id),
                batch: Some(a.batch),
                magnitude: finish - task.deadline,
            });
        }
    }

    // Starts must be sorted, and a non-empty batch may not start before the
    // previous non-empty batch has finished.
    let starts = &schedule.batch_starts;
    let mut last_busy: Option<usize> = None;
    for n in 0..num_batches {
        let mut gap = f64::NEG_INFINITY;
        if n > 0 {
            gap = starts[n - 1] - starts[n];
        }
        if sizes[n] > 0 {
            if let Some(p) = last_busy {
                gap = gap.max(starts[p] + batch_delay(sizes[p], model) - starts[n]);
            }
            last_busy = Some(n);
        }
        if gap > tol.time_slack(starts[n]) {
            violations.push(Violation {
                constraint: Constraint::BatchOrder,
                task: None,
                batch: Some(n),
                magnitude: gap,
            });
        }
    }

    let mut dedicated_total = 0.0;
    let mut timed: Vec<Segment> = Vec::new();
    for (&task_id, grant) in &grants {
        let task = &scenario.tasks[task_id];
        let rate = task.rate(scenario.noise_power).unwrap_or(0.0);
        for &n in &batches_of[task_id] {
            let start = schedule.batch_starts[n];
            if start <= task.arrival {
                // already reported as a causality violation
                continue;
            }
            let delivered = match grant {
                Grant::Dedicated { hz } => hz * rate * (start - task.arrival),
                Grant::Timed { segments } => segments
                    .iter()
                    .map(|s| {
                        let lo = s.start.max(task.arrival);
                        let hi = s.end.min(start);
                        s.hz * rate * (hi - lo).max(0.0)
                    })
                    .sum(),
            };
            if delivered < task.payload_bits * (1.0 - tol.numeric_eps) {
                violations.push(Violation {
                    constraint: Constraint::Upload,
                    task: Some(task_id),
                    batch: Some(n),
                    magnitude: task.payload_bits - delivered,
                });
            }
        }
        match grant {
            Grant::Dedicated { hz } => dedicated_total += hz,
            Grant::Timed { segments } => timed.extend(segments.iter().copied()),
        }
    }
    let peak = dedicated_total + peak_load(&timed);
    if peak > scenario.total_bandwidth * (1.0 + tol.rel_bandwidth) {
        violations.push(Violation {
            constraint: Constraint::BandwidthTotal,
            task: None,
            batch: None,
            magnitude: peak - scenario.total_bandwidth,
        });
    }

    Ok(FeasibilityReport { violations })
}

fn validate_grant(task: usize, grant: &Grant) -> Result<(), ScheduleError> {
    let bad = |detail: String| ScheduleError::BadAllocation { task, detail };
    match grant {
        Grant::Dedicated { hz } => {
            if !(hz.is_finite() && *hz > 0.0) {
                return Err(bad(format!("hz={hz}")));
            }
        }
        Grant::Timed { segments } => {
            if segments.is_empty() {
                return Err(bad("no segments".into()));
            }
            for s in segments {
                let ok = s.start.is_finite() && s.end.is_finite() && s.end > s.start && s.hz.is_finite() && s.hz > 0.0;
                if !ok {
                    return Err(bad(format!("segment {s:?}")));
                }
            }
        }
    }
    Ok(())
}

/// Maximum over time of the summed bandwidth of half-open segments.
pub(crate) fn peak_load(segments: &[Segment]) -> f64 {
    let mut events: Vec<(f64, f64)> = Vec::with_capacity(segments.len() * 2);
    for s in segments {
        events.push((s.start, s.hz));
        events.push((s.end, -s.hz));
    }
    // at equal instants, releases come before acquisitions
    events.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.total_cmp(&y.1)));
    let mut load = 0.0_f64;
    let mut peak = 0.0_f64;
    for (_, delta) in events {
        load += delta;
        peak = peak.max(load);
    }
    peak
}

#[cfg(test)]
mod tests {
    use super::*;

    fn task(id: usize, arrival: f64, deadline: f64) -> Task {
        Task {
            id,
            arrival,
            deadline,
            payload_bits: 80_000.0,
            tx_power: 100.0,
            channel_gain: 1.0,
        }
    }

    fn scenario(tasks: Vec<Task>, bandwidth: f64) -> Scenario {
        Scenario::new(tasks, bandwidth, 1.0, DelayModel::default())
    }

    #[test]
    fn spectral_efficiency_values() {
        assert_eq!(spectral_efficiency(1.0, 1.0, 1.0).unwrap(), 1.0);
        let tiny = spectral_efficiency(1e-12, 1.0, 1.0).unwrap();
        assert!(tiny > 0.0 && tiny < 1e-11);
        let r = spectral_efficiency(100.0, 1.0, 1.0).unwrap();
        assert!((r - 6.658_211_482_751_795).abs() < 1e-12);
        assert!(spectral_efficiency(0.0, 1.0, 1.0).is_err());
        assert!(spectral_efficiency(1.0, -1.0, 1.0).is_err());
        assert!(spectral_efficiency(1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn spectral_efficiency_increases_with_gain() {
        let mut last = 0.0;
        for g in [1e-6, 1e-3, 0.1, 1.0, 10.0, 1e3] {
            let r = spectral_efficiency(1.0, g, 1.0).unwrap();
            assert!(r > last);
            last = r;
        }
    }

    #[test]
    fn batch_delay_values() {
        let m = DelayModel::default();
        assert_eq!(batch_delay(0, &m), 0.0);
        assert!((batch_delay(1, &m) - 0.025).abs() < 1e-15);
        assert!((batch_delay(10, &m) - 0.070).abs() < 1e-15);
        for size in 2..50 {
            let step = batch_delay(size, &m) - batch_delay(size - 1, &m);
            assert!((step - m.per_task).abs() < 1e-12);
        }
    }

    #[test]
    fn required_bandwidth_values() {
        let t = task(0, 0.0, 2.0);
        let bw = required_bandwidth(&t, 0.5, 1.0).unwrap();
        assert!((bw - 24_030.477_315_790_074).abs() < 1e-6);
        let doubled = required_bandwidth(&t, 1.0, 1.0).unwrap();
        assert!((doubled - bw / 2.0).abs() < 1e-9);
        assert!(matches!(
            required_bandwidth(&t, 0.0, 1.0),
            Err(ModelError::Causality { .. })
        ));
    }

    #[test]
    fn empty_schedule_is_feasible() {
        let s = scenario(vec![task(0, 0.0, 1.0), task(1, 0.2, 1.0)], 1e6);
        let report = check_schedule(&s, &Schedule::empty(), &Tolerances::default()).unwrap();
        assert!(report.is_feasible());
        assert_eq!(throughput(&Schedule::empty()), 0);
    }

    #[test]
    fn start_before_arrival_is_one_causality_violation() {
        let s = scenario(vec![task(0, 0.5, 1.0)], 1e6);
        let schedule = Schedule {
            batch_starts: vec![0.4],
            assignments: vec![Assignment { task_id: 0, batch: 0 }],
            bandwidths: vec![Allocation {
                task_id: 0,
                grant: Grant::Dedicated { hz: 1e5 },
            }],
        };
        let report = check_schedule(&s, &schedule, &Tolerances::default()).unwrap();
        assert_eq!(report.violations.len(), 1);
        assert_eq!(report.violations[0].constraint, Constraint::Causality);
    }

    // Two tasks arriving at 0 with p h / sigma^2 = 1 (rate 1 bit/s/Hz) and 80 kbit payloads.
    // Batch 0 holds task 0 and starts at 0.4 s: it needs 200 kHz.
    // Batch 1 holds task 1 and starts at 0.5 s: it needs 160 kHz.
    // Sum 360 kHz; with B = 360 kHz / 1.05 the excess is 0.05 B.
    #[test]
    fn bandwidth_excess_is_reported_with_magnitude() {
        let mut tasks = vec![task(0, 0.0, 2.0), task(1, 0.0, 2.0)];
        for t in &mut tasks {
            t.tx_power = 1.0;
        }
        let b = 360_000.0 / 1.05;
        let s = scenario(tasks, b);
        let schedule = Schedule::with_required_bandwidths(&s, &[Some(0), Some(1)], vec![0.4, 0.5]).unwrap();
        let hz: Vec<f64> = schedule
            .bandwidths
            .iter()
            .map(|a| match a.grant {
                Grant::Dedicated { hz } => hz,
                _ => unreachable!(),
            })
            .collect();
        assert!((hz[0] - 200_000.0).abs() < 1e-6 && (hz[1] - 160_000.0).abs() < 1e-6);
        let report = check_schedule(&s, &schedule, &Tolerances::default()).unwrap();
        assert_eq!(report.violations.len(), 1);
        let v = &report.violations[0];
        assert_eq!(v.constraint, Constraint::BandwidthTotal);
        assert!((v.magnitude - 0.05 * b).abs() < 1e-6);
    }

    #[test]
    fn deadline_and_order_violations() {
        let s = scenario(vec![task(0, 0.0, 0.5), task(1, 0.0, 2.0)], 1e9);
        // batch 0 finishes at 0.49 + 0.025 > 0.5; batch 1 starts before that.
        let schedule = Schedule::with_required_bandwidths(&s, &[Some(0), Some(1)], vec![0.49, 0.5]).unwrap();
        let report = check_schedule(&s, &schedule, &Tolerances::default()).unwrap();
        assert_eq!(report.count(Constraint::Deadline), 1);
        assert_eq!(report.count(Constraint::BatchOrder), 1);
    }

    #[test]
    fn multi_assignment_and_structural_errors() {
        let s = scenario(vec![task(0, 0.0, 2.0)], 1e9);
        let tol = Tolerances::default();
        let twice = Schedule {
            batch_starts: vec![0.5, 1.0],
            assignments: vec![Assignment { task_id: 0, batch: 0 }, Assignment { task_id: 0, batch: 1 }],
            bandwidths: vec![Allocation {
                task_id: 0,
                grant: Grant::Dedicated { hz: 1e6 },
            }],
        };
        let report = check_schedule(&s, &twice, &tol).unwrap();
        assert_eq!(report.count(Constraint::MultiAssignment), 1);
        assert_eq!(throughput(&twice), 1);

        let unknown = Schedule {
            batch_starts: vec![0.5],
            assignments: vec![Assignment { task_id: 3, batch: 0 }],
            bandwidths: vec![],
        };
        assert_eq!(check_schedule(&s, &unknown, &tol), Err(ScheduleError::UnknownTask(3)));

        let missing = Schedule {
            batch_starts: vec![0.5],
            assignments: vec![Assignment { task_id: 0, batch: 0 }],
            bandwidths: vec![],
        };
        assert_eq!(
            check_schedule(&s, &missing, &tol),
            Err(ScheduleError::MissingAllocation(0))
        );
    }

    #[test]
    fn timed_grants_use_peak_not_sum() {
        // two tasks that upload back to back with the full channel each
        let mut tasks = vec![task(0, 0.0, 2.0), task(1, 0.5, 2.0)];
        for t in &mut tasks {
            t.tx_power = 1.0;
        }
        let s = scenario(tasks, 200_000.0);
        let schedule = Schedule {
            batch_starts: vec![0.4, 0.9],
            assignments: vec![Assignment { task_id: 0, batch: 0 }, Assignment { task_id: 1, batch: 1 }],
            bandwidths: vec![
                Allocation {
                    task_id: 0,
                    grant: Grant::Timed {
                        segments: vec![Segment {
                            start: 0.0,
                            end: 0.4,
                            hz: 200_000.0,
                        }],
                    },
                },
                Allocation {
                    task_id: 1,
                    grant: Grant::Timed {
                        segments: vec![Segment {
                            start: 0.5,
                            end: 0.9,
                            hz: 200_000.0,
                        }],
                    },
                },
            ],
        };
        let report = check_schedule(&s, &schedule, &Tolerances::default()).unwrap();
        assert!(report.is_feasible(), "{:?}", report);

        // the same grants held as dedicated sub-channels would need 400 kHz
        let mut dedicated = schedule.clone();
        for a in &mut dedicated.bandwidths {
            a.grant = Grant::Dedicated { hz: 200_000.0 };
        }
        let report = check_schedule(&s, &dedicated, &Tolerances::default()).unwrap();
        assert_eq!(report.count(Constraint::BandwidthTotal), 1);
    }

    #[test]
    fn short_grant_is_an_upload_violation() {
        let s = scenario(vec![task(0, 0.0, 2.0)], 1e9);
        let schedule = Schedule {
            batch_starts: vec![0.5],
            assignments: vec![Assignment { task_id: 0, batch: 0 }],
            bandwidths: vec![Allocation {
                task_id: 0,
                grant: Grant::Dedicated { hz: 10_000.0 },
            }],
        };
        let report = check_schedule(&s, &schedule, &Tolerances::default()).unwrap();
        assert_eq!(report.count(Constraint::Upload), 1);
    }

    #[test]
    fn peak_load_of_touching_segments() {
        let segs = [
            Segment {
                start: 0.0,
                end: 1.0,
                hz: 3.0,
            },
            Segment {
                start: 1.0,
                end: 2.0,
                hz: 4.0,
            },
            Segment {
                start: 0.5,
                end: 1.5,
                hz: 1.0,
            },
        ];
        assert_eq!(peak_load(&segs), 5.0);
    }
}
