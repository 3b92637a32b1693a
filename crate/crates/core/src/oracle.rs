//! Exhaustive search over task subsets and ordered batch partitions.
//!
//! For a fixed association the latest feasible starts are optimal, so only
//! the discrete part is enumerated.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    check_schedule, required_bandwidth, Allocation, Assignment, Grant, ModelError, Scenario, Schedule, Segment,
    Tolerances,
};
use crate::sweep::latest_starts;

pub const DEFAULT_MAX_TASKS: usize = 4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("{tasks} tasks exceed the exhaustive-search cap of {cap}")]
    TooLarge { tasks: usize, cap: usize },
    #[error(transparent)]
    Scenario(#[from] ModelError),
}

/// How uploads may share the channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleMode {
    /// Each task holds a fixed sub-channel until its batch starts.
    #[default]
    Dedicated,
    /// Bandwidth may be reassigned over time; uploads are served earliest-due-first.
    Fluid,
}

/// Calls `visit` with every association in which the used batch labels are
/// exactly `0..m` for some `m`, in lexicographic order (`None` first).
fn for_each_association(num_tasks: usize, mut visit: impl FnMut(&[Option<usize>])) {
    let mut assoc = vec![None; num_tasks];
    fn rec(pos: usize, assoc: &mut Vec<Option<usize>>, visit: &mut dyn FnMut(&[Option<usize>])) {
        if pos == assoc.len() {
            let mut used = vec![false; assoc.len()];
            for n in assoc.iter().flatten() {
                used[*n] = true;
            }
            let m = used.iter().filter(|&&u| u).count();
            if used[..m].iter().all(|&u| u) {
                visit(assoc);
            }
            return;
        }
        assoc[pos] = None;
        rec(pos + 1, assoc, visit);
        for n in 0..assoc.len() {
            assoc[pos] = Some(n);
            rec(pos + 1, assoc, visit);
        }
        assoc[pos] = None;
    }
    rec(0, &mut assoc, &mut visit);
}

/// Number of associations the search visits for `num_tasks` tasks.
pub fn candidate_count(num_tasks: usize) -> u64 {
    let mut count = 0;
    for_each_association(num_tasks, |_| count += 1);
    count
}

/// Maximum-throughput schedule; ties go to the lexicographically smallest association.
pub fn exact_solve(scenario: &Scenario, max_tasks: usize, mode: OracleMode) -> Result<Schedule, OracleError> {
    let k = scenario.num_tasks();
    if k > max_tasks {
        return Err(OracleError::TooLarge {
            tasks: k,
            cap: max_tasks,
        });
    }
    scenario.validate()?;
    let tol = Tolerances::default();
    let mut best: Option<(usize, Schedule)> = None;
    for_each_association(k, |assoc| {
        let count = assoc.iter().filter(|a| a.is_some()).count();
        if best.as_ref().is_some_and(|(c, _)| *c >= count) {
            return;
        }
        if let Some(schedule) = realize(scenario, assoc, mode, &tol) {
            best = Some((count, schedule));
        }
    });
    Ok(best.map(|b| b.1).unwrap_or_default())
}

/// Builds the schedule for one association, or `None` if it cannot be made feasible.
fn realize(scenario: &Scenario, assoc: &[Option<usize>], mode: OracleMode, tol: &Tolerances) -> Option<Schedule> {
    let num_batches = assoc.iter().flatten().max().map_or(0, |m| m + 1);
    let timing = latest_starts(scenario, assoc, num_batches, scenario.big_m(), tol.time_margin);
    if timing.any_flagged() {
        return None;
    }
    let schedule = match mode {
        OracleMode::Dedicated => Schedule::with_required_bandwidths(scenario, assoc, timing.starts).ok()?,
        OracleMode::Fluid => earliest_due_first(scenario, assoc, timing.starts)?,
    };
    let report = check_schedule(scenario, &schedule, tol).ok()?;
    report.is_feasible().then_some(schedule)
}

/// Serves uploads one at a time at full bandwidth, always the released task
/// whose batch starts first. Returns `None` if some upload misses its batch.
fn earliest_due_first(scenario: &Scenario, assoc: &[Option<usize>], starts: Vec<f64>) -> Option<Schedule> {
    let b = scenario.total_bandwidth;
    let rates = scenario.rates();
    let mut jobs: Vec<(usize, f64, f64, f64)> = Vec::new();
    for (k, a) in assoc.iter().enumerate() {
        if let Some(n) = *a {
            let task = &scenario.tasks[k];
            jobs.push((k, task.arrival, starts[n], task.payload_bits / (rates[k] * b)));
        }
    }
    let mut segments: Vec<Vec<Segment>> = vec![Vec::new(); scenario.num_tasks()];
    let mut remaining: Vec<f64> = jobs.iter().map(|j| j.3).collect();
    let mut now = jobs.iter().map(|j| j.1).fold(f64::INFINITY, f64::min);
    let mut left = jobs.len();
    while left > 0 {
        let pick = (0..jobs.len())
            .filter(|&i| remaining[i] > 0.0 && jobs[i].1 <= now)
            .min_by(|&x, &y| jobs[x].2.total_cmp(&jobs[y].2).then(jobs[x].0.cmp(&jobs[y].0)));
        let Some(i) = pick else {
            now = (0..jobs.len())
                .filter(|&i| remaining[i] > 0.0)
                .map(|i| jobs[i].1)
                .fold(f64::INFINITY, f64::min);
            continue;
        };
        let next_release = (0..jobs.len())
            .filter(|&j| remaining[j] > 0.0 && jobs[j].1 > now)
            .map(|j| jobs[j].1)
            .fold(f64::INFINITY, f64::min);
        let end = (now + remaining[i]).min(next_release);
        if end > jobs[i].2 * (1.0 + 1e-12) + 1e-12 {
            return None;
        }
        if end > now {
            segments[jobs[i].0].push(Segment { start: now, end, hz: b });
        }
        if end >= now + remaining[i] {
            remaining[i] = 0.0;
            left -= 1;
        } else {
            remaining[i] -= end - now;
        }
        now = end;
    }
    let mut schedule = Schedule {
        batch_starts: starts,
        ..Schedule::default()
    };
    for (k, a) in assoc.iter().enumerate() {
        if let Some(n) = *a {
            schedule.assignments.push(Assignment { task_id: k, batch: n });
            schedule.bandwidths.push(Allocation {
                task_id: k,
                grant: Grant::Timed {
                    segments: std::mem::take(&mut segments[k]),
                },
            });
        }
    }
    Some(schedule)
}

/// Searches a uniform time grid for start times that make a fixed association
/// feasible with dedicated grants, minimizing total bandwidth. Returns the
/// per-batch starts (empty batches take the next non-empty start) or `None`.
pub fn grid_cross_check(scenario: &Scenario, assoc: &[Option<usize>], resolution: f64) -> Option<Vec<f64>> {
    assert!(resolution > 0.0, "grid resolution must be positive");
    let tol = Tolerances::default();
    let model = &scenario.delay_model;
    let horizon = scenario.big_m();
    let num_batches = assoc.iter().flatten().max().map_or(0, |m| m + 1);
    let members: Vec<Vec<usize>> = (0..num_batches)
        .map(|n| (0..assoc.len()).filter(|&k| assoc[k] == Some(n)).collect())
        .collect();
    let busy: Vec<usize> = (0..num_batches).filter(|&n| !members[n].is_empty()).collect();
    if busy.is_empty() {
        return Some(vec![horizon; num_batches]);
    }

    let lo = scenario.tasks.iter().map(|t| t.arrival).fold(f64::INFINITY, f64::min);
    let steps = ((horizon - lo) / resolution).ceil() as usize;
    let grid: Vec<f64> = (0..=steps).map(|i| lo + i as f64 * resolution).collect();

    let cost = |n: usize, t: f64| -> Option<f64> {
        let d = crate::model::batch_delay(members[n].len(), model);
        let mut total = 0.0;
        for &k in &members[n] {
            let task = &scenario.tasks[k];
            if t + d > task.deadline + tol.time_slack(task.deadline) {
                return None;
            }
            total += required_bandwidth(task, t, scenario.noise_power).ok()?;
        }
        Some(total)
    };

    // best[i]: minimal bandwidth of the batches so far with the latest at grid[i]
    let mut best: Vec<f64> = grid
        .iter()
        .map(|&t| cost(busy[0], t).unwrap_or(f64::INFINITY))
        .collect();
    let mut parents: Vec<Vec<usize>> = Vec::new();
    for w in busy.windows(2) {
        let (prev, cur) = (w[0], w[1]);
        let d_prev = crate::model::batch_delay(members[prev].len(), model);
        // prefix minimum of best over grid points
        let mut prefix: Vec<(f64, usize)> = Vec::with_capacity(grid.len());
        for (i, &v) in best.iter().enumerate() {
            let carry = prefix.last().copied().unwrap_or((f64::INFINITY, usize::MAX));
            prefix.push(if v < carry.0 { (v, i) } else { carry });
        }
        let mut next = vec![f64::INFINITY; grid.len()];
        let mut parent = vec![usize::MAX; grid.len()];
        let mut j = 0usize;
        let mut reach: Option<usize> = None;
        for (i, &t) in grid.iter().enumerate() {
            while j < grid.len() && grid[j] + d_prev <= t + tol.time_slack(t) {
                reach = Some(j);
                j += 1;
            }
            let (Some(r), Some(c)) = (reach, cost(cur, t)) else {
                continue;
            };
            let (v, at) = prefix[r];
            if v.is_finite() {
                next[i] = v + c;
                parent[i] = at;
            }
        }
        parents.push(parent);
        best = next;
    }
    let (mut at, total) = best
        .iter()
        .enumerate()
        .min_by(|x, y| x.1.total_cmp(y.1))
        .map(|(i, v)| (i, *v))?;
    if !(total <= scenario.total_bandwidth * (1.0 + tol.rel_bandwidth)) {
        return None;
    }
    let mut chosen = vec![0.0; busy.len()];
    for step in (0..busy.len()).rev() {
        chosen[step] = grid[at];
        if step > 0 {
            at = parents[step - 1][at];
        }
    }
    let mut starts = vec![horizon; num_batches];
    for (pos, &n) in busy.iter().enumerate() {
        starts[n] = chosen[pos];
    }
    let mut next = horizon;
    for n in (0..num_batches).rev() {
        if members[n].is_empty() {
            starts[n] = next;
        } else {
            next = starts[n];
        }
    }
    Some(starts)
}
