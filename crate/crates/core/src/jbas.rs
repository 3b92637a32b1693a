//! Joint batching and bandwidth allocation by alternating optimization.
//!
//! The outer loop alternates a dual-subgradient association step with fixed
//! batch starts and a latest-start pass with fixed association, and refreshes
//! the reweighted-l1 surrogate of the batch-occupancy indicator in between.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{batch_delay, Allocation, Assignment, Grant, ModelError, Scenario, Schedule, Tolerances};
use crate::sweep::latest_starts;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error("invalid solver config: {0}")]
    Config(String),
    #[error(transparent)]
    Scenario(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TieBreak {
    #[default]
    LowestIndex,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    /// Smoothing constant of the log surrogate; must lie in (0, 1).
    pub delta: f64,
    pub dual_step0: f64,
    pub dual_max_iters: usize,
    pub dual_tol: f64,
    /// Iterations over which the dual objective must stay within `dual_tol`.
    pub dual_window: usize,
    pub outer_max_iters: usize,
    pub outer_tol: f64,
    pub tie_break: TieBreak,
    /// Caps the number of batches below the task count.
    pub batch_cap: Option<usize>,
    pub tolerances: Tolerances,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            delta: 1e-15,
            dual_step0: 0.1,
            dual_max_iters: 500,
            dual_tol: 1e-6,
            dual_window: 10,
            outer_max_iters: 50,
            outer_tol: 1e-4,
            tie_break: TieBreak::LowestIndex,
            batch_cap: None,
            tolerances: Tolerances::default(),
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), SolveError> {
        let err = |msg: &str| Err(SolveError::Config(msg.to_string()));
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return err("delta must lie in (0, 1)");
        }
        if !(self.dual_step0.is_finite() && self.dual_step0 > 0.0) {
            return err("dual step must be positive");
        }
        if self.dual_max_iters == 0 || self.outer_max_iters == 0 || self.dual_window == 0 {
            return err("iteration caps must be at least 1");
        }
        if !(self.dual_tol > 0.0 && self.outer_tol > 0.0) {
            return err("tolerances must be positive");
        }
        if self.batch_cap == Some(0) {
            return err("batch cap must be at least 1");
        }
        self.tolerances
            .validate()
            .map_err(|e| SolveError::Config(e.to_string()))
    }

    /// Number of batches the solver works with for `num_tasks` tasks.
    pub fn num_batches(&self, num_tasks: usize) -> usize {
        match self.batch_cap {
            Some(cap) => cap.min(num_tasks),
            None => num_tasks,
        }
    }
}

/// Big-M constant that switches off the deadline constraint of unassigned pairs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BigM(f64);

impl BigM {
    pub fn from_scenario(scenario: &Scenario) -> Self {
        Self(scenario.big_m())
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Multipliers of the deadline, batch-order and bandwidth constraints.
#[derive(Debug, Clone, PartialEq)]
pub struct DualState {
    num_batches: usize,
    /// Row-major `task * num_batches + batch`.
    pub beta: Vec<f64>,
    /// `gamma[n]` couples batch `n` to batch `n + 1`; the last entry stays 0.
    pub gamma: Vec<f64>,
    pub rho: f64,
}

impl DualState {
    pub fn zeros(num_tasks: usize, num_batches: usize) -> Self {
        Self {
            num_batches,
            beta: vec![0.0; num_tasks * num_batches],
            gamma: vec![0.0; num_batches],
            rho: 0.0,
        }
    }

    pub fn num_batches(&self) -> usize {
        self.num_batches
    }

    pub fn beta(&self, task: usize, batch: usize) -> f64 {
        self.beta[task * self.num_batches + batch]
    }

    pub fn set_beta(&mut self, task: usize, batch: usize, value: f64) {
        self.beta[task * self.num_batches + batch] = value;
    }

    /// Per-batch sum of `beta` over tasks.
    pub fn beta_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.num_batches];
        for row in self.beta.chunks(self.num_batches.max(1)) {
            for (s, b) in sums.iter_mut().zip(row) {
                *s += b;
            }
        }
        sums
    }
}

/// Signed constraint slacks in the same layout as [`DualState`].
#[derive(Debug, Clone, PartialEq)]
pub struct DualResiduals {
    pub deadline: Vec<f64>,
    pub order: Vec<f64>,
    pub bandwidth: f64,
}

/// Linear upper bound on the log surrogate of each batch's occupancy.
#[derive(Debug, Clone, PartialEq)]
pub struct ReweightState {
    pub theta: Vec<f64>,
    pub psi: Vec<f64>,
    /// Batch sizes the bound was built around.
    pub prev_sums: Vec<f64>,
}

/// Slope and offset of the tangent of `ln(1 + s/delta) / ln(1 + 1/delta)` at `s = m`.
pub fn reweight_coefficients(m: f64, delta: f64) -> (f64, f64) {
    let scale = (1.0 / delta).ln_1p();
    let theta = 1.0 / ((delta + m) * scale);
    let psi = ((m / delta).ln_1p() - m / (delta + m)) / scale;
    (theta, psi.max(0.0))
}

/// The surrogate being majorized: `ln(1 + s/delta) / ln(1 + 1/delta)`.
pub fn occupancy_surrogate(s: f64, delta: f64) -> f64 {
    (s / delta).ln_1p() / (1.0 / delta).ln_1p()
}

pub fn update_reweight(prev_sums: &[f64], delta: f64) -> ReweightState {
    let (theta, psi) = prev_sums.iter().map(|&m| reweight_coefficients(m, delta)).unzip();
    ReweightState {
        theta,
        psi,
        prev_sums: prev_sums.to_vec(),
    }
}

/// Relaxed batch delay `(a + b theta) s + b psi`.
pub fn approx_delay(batch_size: f64, theta: f64, psi: f64, model: &crate::model::DelayModel) -> f64 {
    (model.per_task + model.fixed * theta) * batch_size + model.fixed * psi
}

/// Projected subgradient step `x <- max(0, x + step0 / sqrt(iter) * residual)`.
pub fn update_duals(duals: &DualState, residuals: &DualResiduals, iter: usize, config: &SolverConfig) -> DualState {
    let step = dual_step(config, iter);
    let project = |x: f64, r: f64| (x + step * r).max(0.0);
    let mut out = duals.clone();
    for (b, r) in out.beta.iter_mut().zip(&residuals.deadline) {
        *b = project(*b, *r);
    }
    for (g, r) in out.gamma.iter_mut().zip(&residuals.order) {
        *g = project(*g, *r);
    }
    if let Some(last) = out.gamma.last_mut() {
        *last = 0.0;
    }
    out.rho = project(out.rho, residuals.bandwidth);
    out
}

fn dual_step(config: &SolverConfig, iter: usize) -> f64 {
    config.dual_step0 / (iter.max(1) as f64).sqrt()
}

/// Picks, for each task, the batch with the largest association score
/// among batches that start after its arrival. Tasks whose best score is
/// not positive stay unassigned.
pub fn associate_tasks(
    scenario: &Scenario,
    batch_starts: &[f64],
    duals: &DualState,
    rw: &ReweightState,
    xi: BigM,
) -> Vec<Option<usize>> {
    let model = &scenario.delay_model;
    let coef: Vec<f64> = rw.theta.iter().map(|th| model.per_task + model.fixed * th).collect();
    let beta_sums = duals.beta_sums();
    let rates = scenario.rates();
    scenario
        .tasks
        .iter()
        .map(|task| {
            let mut best: Option<(usize, f64)> = None;
            for (n, &t) in batch_starts.iter().enumerate() {
                if !(t > task.arrival + crate::model::TIME_MARGIN) {
                    continue;
                }
                let bw = task.payload_bits / (rates[task.id] * (t - task.arrival));
                let mu = 1.0
                    - coef[n] * beta_sums[n]
                    - coef[n] * duals.gamma[n]
                    - xi.value() * duals.beta(task.id, n)
                    - duals.rho * bw;
                if best.is_none_or(|(_, m)| mu > m) {
                    best = Some((n, mu));
                }
            }
            best.filter(|&(_, mu)| mu > 0.0).map(|(n, _)| n)
        })
        .collect()
}

/// Latest feasible starts for a fixed association, plus the batches whose
/// start does not clear a member's arrival.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchTiming {
    pub starts: Vec<f64>,
    pub flagged: Vec<usize>,
}

pub fn batch_start_times(scenario: &Scenario, assoc: &[Option<usize>], num_batches: usize) -> BatchTiming {
    let out = latest_starts(
        scenario,
        assoc,
        num_batches,
        scenario.big_m(),
        crate::model::TIME_MARGIN,
    );
    let flagged = out
        .flagged
        .iter()
        .enumerate()
        .filter(|(_, &f)| f)
        .map(|(n, _)| n)
        .collect();
    BatchTiming {
        starts: out.starts,
        flagged,
    }
}

/// How the channel is shared among scheduled tasks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Sharing {
    /// Each task holds exactly its required bandwidth; the sum is capped by B.
    Adaptive,
    /// Every task holds B / K; a task is eligible only where that suffices.
    EqualSplit,
}

pub fn solve(scenario: &Scenario, config: &SolverConfig) -> Result<Schedule, SolveError> {
    solve_with(scenario, config, Sharing::Adaptive)
}

pub(crate) fn solve_with(scenario: &Scenario, config: &SolverConfig, sharing: Sharing) -> Result<Schedule, SolveError> {
    config.validate()?;
    scenario.validate()?;
    if scenario.tasks.is_empty() {
        return Ok(Schedule::empty());
    }
    let solver = Solver::new(scenario, config, sharing);
    let assoc = solver.run();
    Ok(solver.to_schedule(&assoc))
}

struct Solver<'a> {
    scenario: &'a Scenario,
    config: &'a SolverConfig,
    sharing: Sharing,
    rates: Vec<f64>,
    xi: f64,
    num_tasks: usize,
    num_batches: usize,
    per_task_cap: f64,
}

/// A repaired association and its throughput.
#[derive(Clone)]
struct Candidate {
    assoc: Vec<Option<usize>>,
    count: usize,
}

impl<'a> Solver<'a> {
    fn new(scenario: &'a Scenario, config: &'a SolverConfig, sharing: Sharing) -> Self {
        let num_tasks = scenario.num_tasks();
        Self {
            scenario,
            config,
            sharing,
            rates: scenario.rates(),
            xi: scenario.big_m(),
            num_tasks,
            num_batches: config.num_batches(num_tasks),
            per_task_cap: scenario.total_bandwidth / num_tasks as f64,
        }
    }

    fn required(&self, k: usize, start: f64) -> f64 {
        let task = &self.scenario.tasks[k];
        task.payload_bits / (self.rates[k] * (start - task.arrival))
    }

    fn initial_starts(&self) -> Vec<f64> {
        let lo = self
            .scenario
            .tasks
            .iter()
            .map(|t| t.arrival)
            .fold(f64::INFINITY, f64::min);
        let hi = self
            .scenario
            .tasks
            .iter()
            .map(|t| t.deadline)
            .fold(f64::NEG_INFINITY, f64::max);
        let n = self.num_batches;
        if n == 1 {
            return vec![0.5 * (lo + hi)];
        }
        (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
    }

    /// Pairs the association step may consider: the batch must start after
    /// arrival and leave room to serve the task alone before its deadline.
    fn eligible(&self, k: usize, start: f64) -> Option<f64> {
        let task = &self.scenario.tasks[k];
        let tol = &self.config.tolerances;
        if !(start > task.arrival + tol.time_margin) {
            return None;
        }
        if start + self.scenario.delay_model.min_service() > task.deadline + tol.time_slack(task.deadline) {
            return None;
        }
        let bw = self.required(k, start);
        if self.sharing == Sharing::EqualSplit && bw > self.per_task_cap {
            return None;
        }
        Some(bw)
    }

    fn run(&self) -> Vec<Option<usize>> {
        let delta = self.config.delta;
        let mut starts = self.initial_starts();
        let mut rw = update_reweight(&vec![0.0; self.num_batches], delta);
        let mut best: Option<Candidate> = None;
        let mut last_objective: Option<f64> = None;

        for _ in 0..self.config.outer_max_iters {
            let round_best = self.dual_round(&starts, &rw);
            let objective = round_best.count as f64;

            let timing = latest_starts(
                self.scenario,
                &round_best.assoc,
                self.num_batches,
                self.xi,
                self.config.tolerances.time_margin,
            );
            for n in 0..self.num_batches {
                if timing.sizes[n] > 0 {
                    starts[n] = timing.starts[n];
                }
            }
            let sums: Vec<f64> = timing.sizes.iter().map(|&s| s as f64).collect();
            rw = update_reweight(&sums, delta);

            if best.as_ref().is_none_or(|b| round_best.count > b.count) {
                best = Some(round_best);
            }
            if let Some(prev) = last_objective {
                if (objective - prev).abs() <= self.config.outer_tol * prev.abs().max(1.0) {
                    break;
                }
            }
            last_objective = Some(objective);
        }
        let assoc = best.map(|b| b.assoc).unwrap_or_else(|| vec![None; self.num_tasks]);
        self.fill_gaps(assoc)
    }

    /// Total bandwidth of a feasible association, `None` otherwise.
    fn load(&self, assoc: &[Option<usize>]) -> Option<f64> {
        let margin = self.config.tolerances.time_margin;
        let timing = latest_starts(self.scenario, assoc, self.num_batches, self.xi, margin);
        let mut total = 0.0;
        for (k, a) in assoc.iter().enumerate() {
            let Some(n) = *a else { continue };
            let start = timing.starts[n];
            if self.scenario.tasks[k].arrival >= start - margin {
                return None;
            }
            let bw = self.required(k, start);
            if self.sharing == Sharing::EqualSplit && bw > self.per_task_cap {
                return None;
            }
            total += bw;
        }
        match self.sharing {
            Sharing::Adaptive if total > self.scenario.total_bandwidth => None,
            _ => Some(total),
        }
    }

    /// Local search on a feasible association: insert left-over tasks
    /// wherever the schedule stays feasible, cheapest first, and move members
    /// between batches when that lowers the total load, until neither helps.
    fn fill_gaps(&self, mut assoc: Vec<Option<usize>>) -> Vec<Option<usize>> {
        let model = &self.scenario.delay_model;
        let mut pending: Vec<(f64, usize)> = (0..self.num_tasks)
            .filter(|&k| assoc[k].is_none())
            .filter_map(|k| {
                let latest = self.scenario.tasks[k].deadline - model.min_service();
                (latest > self.scenario.tasks[k].arrival).then(|| (self.required(k, latest), k))
            })
            .collect();
        pending.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
        let Some(mut load) = self.load(&assoc) else {
            return assoc;
        };

        for _ in 0..self.num_tasks.max(1) {
            let mut changed = false;
            let mut left = Vec::with_capacity(pending.len());
            for &(cost, k) in &pending {
                match self.best_slot(&mut assoc, k, f64::INFINITY) {
                    Some((n, total)) => {
                        assoc[k] = Some(n);
                        load = total;
                        changed = true;
                    }
                    None => {
                        assoc[k] = None;
                        left.push((cost, k));
                    }
                }
            }
            pending = left;
            for k in 0..self.num_tasks {
                let Some(from) = assoc[k] else { continue };
                let bound = load - self.config.tolerances.rel_bandwidth * self.scenario.total_bandwidth;
                match self.best_slot(&mut assoc, k, bound) {
                    Some((n, total)) => {
                        assoc[k] = Some(n);
                        load = total;
                        changed = true;
                    }
                    None => assoc[k] = Some(from),
                }
            }
            if !changed || pending.is_empty() {
                break;
            }
        }
        assoc
    }

    /// Cheapest feasible batch for task `k` with total load below `bound`.
    /// Leaves `assoc[k]` in an unspecified state.
    fn best_slot(&self, assoc: &mut [Option<usize>], k: usize, bound: f64) -> Option<(usize, f64)> {
        assoc[k] = None;
        let mut sizes = vec![0usize; self.num_batches];
        for n in assoc.iter().flatten() {
            sizes[*n] += 1;
        }
        let mut pick: Option<(usize, f64)> = None;
        for n in 0..self.num_batches {
            // any slot in a run of empty batches gives the same schedule
            if sizes[n] == 0 && n > 0 && sizes[n - 1] == 0 {
                continue;
            }
            assoc[k] = Some(n);
            if let Some(total) = self.load(assoc) {
                if total < bound && pick.is_none_or(|(_, t)| total < t) {
                    pick = Some((n, total));
                }
            }
        }
        pick
    }

    /// One run of the dual subgradient method with batch starts fixed.
    /// Returns the best repaired association seen along the way.
    fn dual_round(&self, starts: &[f64], rw: &ReweightState) -> Candidate {
        let k_count = self.num_tasks;
        let n_count = self.num_batches;
        let model = &self.scenario.delay_model;
        let b_total = self.scenario.total_bandwidth;

        // normalized bandwidth demand per eligible pair
        let mut demand: Vec<Option<f64>> = Vec::with_capacity(k_count * n_count);
        for k in 0..k_count {
            for &t in starts {
                demand.push(self.eligible(k, t).map(|bw| bw / b_total));
            }
        }
        // slope of the true batch delay at the current size
        let coef: Vec<f64> = rw
            .theta
            .iter()
            .map(|th| model.per_task + model.fixed * th.min(1.0))
            .collect();
        let offset: Vec<f64> = rw.psi.iter().map(|ps| model.fixed * ps).collect();

        let mut duals = DualState::zeros(k_count, n_count);
        let mut beta_sums = vec![0.0; n_count];
        let mut assoc: Vec<Option<usize>> = vec![None; k_count];
        let mut prev_assoc: Option<Vec<Option<usize>>> = None;
        let mut history: Vec<f64> = Vec::new();
        let mut best = Candidate {
            assoc: vec![None; k_count],
            count: 0,
        };
        let use_rho = self.sharing == Sharing::Adaptive;

        for iter in 1..=self.config.dual_max_iters {
            let mut lagrangian_gain = 0.0;
            for k in 0..k_count {
                let mut pick: Option<(usize, f64)> = None;
                for n in 0..n_count {
                    let Some(bw) = demand[k * n_count + n] else {
                        continue;
                    };
                    let mut mu = 1.0 - coef[n] * (beta_sums[n] + duals.gamma[n]) - self.xi * duals.beta(k, n);
                    if use_rho {
                        mu -= duals.rho * bw;
                    }
                    if pick.is_none_or(|(_, m)| mu > m) {
                        pick = Some((n, mu));
                    }
                }
                assoc[k] = pick.filter(|&(_, mu)| mu > 0.0).map(|(n, mu)| {
                    lagrangian_gain += mu;
                    n
                });
            }

            if prev_assoc.as_ref() != Some(&assoc) {
                let repaired = self.repair(&assoc);
                if repaired.count > best.count {
                    best = repaired;
                }
                prev_assoc = Some(assoc.clone());
            }

            let mut sizes = vec![0usize; n_count];
            let mut used = 0.0;
            for (k, a) in assoc.iter().enumerate() {
                if let Some(n) = *a {
                    sizes[n] += 1;
                    used += demand[k * n_count + n].unwrap_or(0.0);
                }
            }
            let finish: Vec<f64> = (0..n_count).map(|n| starts[n] + batch_delay(sizes[n], model)).collect();

            // dual objective at the current multipliers
            let mut g = lagrangian_gain;
            for n in 0..n_count {
                let base = starts[n] + offset[n];
                if n + 1 < n_count {
                    g -= duals.gamma[n] * (base - starts[n + 1]);
                }
            }
            for k in 0..k_count {
                let task = &self.scenario.tasks[k];
                for n in 0..n_count {
                    let b = duals.beta(k, n);
                    if b > 0.0 {
                        g -= b * (starts[n] + offset[n] - task.deadline - self.xi);
                    }
                }
            }
            if use_rho {
                g += duals.rho;
            }

            let step = dual_step(self.config, iter);
            for k in 0..k_count {
                let task = &self.scenario.tasks[k];
                for n in 0..n_count {
                    let idx = k * n_count + n;
                    let current = duals.beta[idx];
                    let assigned = assoc[k] == Some(n);
                    if current == 0.0 && !assigned {
                        // slack is at least big-M minus the horizon, so the projection keeps zero
                        continue;
                    }
                    let slack = if assigned { 0.0 } else { self.xi };
                    let residual = finish[n] - task.deadline - slack;
                    let updated = (current + step * residual).max(0.0);
                    beta_sums[n] += updated - current;
                    duals.beta[idx] = updated;
                }
            }
            for n in 0..n_count.saturating_sub(1) {
                let residual = if sizes[n] > 0 {
                    finish[n] - starts[n + 1]
                } else {
                    starts[n] - starts[n + 1]
                };
                duals.gamma[n] = (duals.gamma[n] + step * residual).max(0.0);
            }
            if use_rho {
                duals.rho = (duals.rho + step * (used - 1.0)).max(0.0);
            }

            history.push(g);
            let w = self.config.dual_window;
            if history.len() > w {
                let old = history[history.len() - 1 - w];
                if (g - old).abs() <= self.config.dual_tol * g.abs().max(1.0) {
                    break;
                }
            }
        }
        best
    }

    /// Turns an association into a feasible one: latest starts, then drop
    /// causality offenders by latest arrival, then drop the largest
    /// bandwidth consumers until the budget holds.
    fn repair(&self, assoc: &[Option<usize>]) -> Candidate {
        let mut assoc = assoc.to_vec();
        let margin = self.config.tolerances.time_margin;
        loop {
            let timing = latest_starts(self.scenario, &assoc, self.num_batches, self.xi, margin);
            let offender = (0..self.num_tasks)
                .filter(|&k| {
                    assoc[k].is_some_and(|n| {
                        timing.flagged[n] && self.scenario.tasks[k].arrival >= timing.starts[n] - margin
                    })
                })
                .max_by(|&x, &y| {
                    let (tx, ty) = (&self.scenario.tasks[x], &self.scenario.tasks[y]);
                    tx.arrival.total_cmp(&ty.arrival).then(y.cmp(&x))
                });
            match offender {
                Some(k) => assoc[k] = None,
                None => break,
            }
        }
        loop {
            let timing = latest_starts(self.scenario, &assoc, self.num_batches, self.xi, margin);
            let mut total = 0.0;
            let mut worst: Option<(usize, f64)> = None;
            for k in 0..self.num_tasks {
                if let Some(n) = assoc[k] {
                    let bw = self.required(k, timing.starts[n]);
                    total += bw;
                    let over_cap = self.sharing == Sharing::EqualSplit && bw > self.per_task_cap;
                    let key = if over_cap { f64::INFINITY } else { bw };
                    if worst.is_none_or(|(_, w)| key > w) {
                        worst = Some((k, key));
                    }
                }
            }
            let over = match self.sharing {
                Sharing::Adaptive => total > self.scenario.total_bandwidth,
                Sharing::EqualSplit => worst.is_some_and(|(_, w)| w == f64::INFINITY),
            };
            match worst {
                Some((k, _)) if over => assoc[k] = None,
                _ => break,
            }
        }
        let count = assoc.iter().filter(|a| a.is_some()).count();
        Candidate { assoc, count }
    }

    /// Drops empty batches and attaches grants.
    fn to_schedule(&self, assoc: &[Option<usize>]) -> Schedule {
        let timing = latest_starts(
            self.scenario,
            assoc,
            self.num_batches,
            self.xi,
            self.config.tolerances.time_margin,
        );
        let mut remap = vec![usize::MAX; self.num_batches];
        let mut batch_starts = Vec::new();
        for n in 0..self.num_batches {
            if timing.sizes[n] > 0 {
                remap[n] = batch_starts.len();
                batch_starts.push(timing.starts[n]);
            }
        }
        let mut schedule = Schedule {
            batch_starts,
            ..Schedule::default()
        };
        for (k, a) in assoc.iter().enumerate() {
            if let Some(n) = *a {
                let hz = match self.sharing {
                    Sharing::Adaptive => self.required(k, timing.starts[n]),
                    Sharing::EqualSplit => self.per_task_cap,
                };
                schedule.assignments.push(Assignment {
                    task_id: k,
                    batch: remap[n],
                });
                schedule.bandwidths.push(Allocation {
                    task_id: k,
                    grant: Grant::Dedicated { hz },
                });
            }
        }
        schedule
    }
}
