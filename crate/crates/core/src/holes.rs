//! Admission of unscheduled tasks into spectrum left idle by finished uploads.
//!
//! At the start of each non-empty batch the bandwidth of every task already
//! served is free again. That pool, plus the grants of the next batch's
//! members, may be redistributed so that the next batch takes extra tasks,
//! starting earlier if needed so that no committed task misses its deadline.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    batch_delay, Allocation, Assignment, Grant, ModelError, Scenario, Schedule, Segment, Task, Tolerances,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HolesError {
    #[error("probe size {pi} exceeds the {available} unscheduled tasks")]
    PiOutOfRange { pi: usize, available: usize },
    #[error("task {0} does not hold a dedicated grant")]
    NotDedicated(usize),
    #[error("schedule does not fit the scenario: {0}")]
    Schedule(String),
    #[error(transparent)]
    Scenario(#[from] ModelError),
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct HolesConfig {
    pub tolerances: Tolerances,
}

/// A committed task of the batch being enlarged, with its original grant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Member {
    pub task_id: usize,
    pub hz: f64,
}

/// State at the start of the current batch.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    /// Position of the current batch among non-empty batches.
    pub index: usize,
    /// Adjusted start of the current batch; `-inf` when there is none.
    pub current_start: f64,
    /// Size of the current batch including tasks admitted into it.
    pub current_size: usize,
    /// Tasks not yet scheduled.
    pub unscheduled: Vec<usize>,
    /// Committed members of the batch that may be enlarged.
    pub next_members: Vec<Member>,
    /// Original start of that batch.
    pub next_start: f64,
    /// Bandwidth released by every task served up to the current batch.
    pub freed_bandwidth: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeResult {
    pub feasible: bool,
    /// Adjusted start of the enlarged batch.
    pub new_start: f64,
    pub admitted: Vec<usize>,
    /// Bandwidth of each admitted task, in `admitted` order.
    pub admitted_hz: Vec<f64>,
    /// Bandwidth of each committed member after the checkpoint, in `next_members` order.
    pub member_hz: Vec<f64>,
}

impl ProbeResult {
    fn infeasible() -> Self {
        Self {
            feasible: false,
            new_start: f64::NAN,
            admitted: Vec::new(),
            admitted_hz: Vec::new(),
            member_hz: Vec::new(),
        }
    }
}

/// Tests whether exactly `pi` unscheduled tasks can join the next batch.
///
/// The batch's completion instant is tried at each candidate deadline in
/// increasing order. For each, the start is pushed as late as the completion
/// instant allows, eligible tasks are ranked by the bandwidth they would
/// need, and the cheapest `pi` are tested against the bandwidth pool and
/// the causality of the enlarged batch.
pub fn feasibility_probe(
    scenario: &Scenario,
    state: &Checkpoint,
    pi: usize,
    next_fixed_start: f64,
    config: &HolesConfig,
) -> Result<ProbeResult, HolesError> {
    if pi > state.unscheduled.len() {
        return Err(HolesError::PiOutOfRange {
            pi,
            available: state.unscheduled.len(),
        });
    }
    let rates = scenario.rates();
    let margin = config.tolerances.time_margin;
    let model = &scenario.delay_model;
    let tasks = &scenario.tasks;
    let prev = state.current_start;

    if pi == 0 {
        return Ok(ProbeResult {
            feasible: true,
            new_start: state.next_start,
            admitted: Vec::new(),
            admitted_hz: Vec::new(),
            member_hz: state.next_members.iter().map(|m| m.hz).collect(),
        });
    }

    let window = |task: &Task, start: f64| start - task.arrival.max(prev);
    // remaining bits of each committed member, measured against its original window
    let residual_bits: Vec<f64> = state
        .next_members
        .iter()
        .map(|m| {
            let task = &tasks[m.task_id];
            m.hz * rates[m.task_id] * window(task, state.next_start).max(0.0)
        })
        .collect();
    let member_deadline = state
        .next_members
        .iter()
        .map(|m| tasks[m.task_id].deadline)
        .fold(f64::INFINITY, f64::min);
    let member_arrival = state
        .next_members
        .iter()
        .map(|m| tasks[m.task_id].arrival)
        .fold(f64::NEG_INFINITY, f64::max);
    let budget = state.freed_bandwidth + state.next_members.iter().map(|m| m.hz).sum::<f64>();
    let ceiling = member_deadline.min(next_fixed_start);
    let prev_finish = prev + batch_delay(state.current_size, model);
    let new_size = pi + state.next_members.len();

    let mut deadlines: Vec<f64> = state.unscheduled.iter().map(|&k| tasks[k].deadline).collect();
    deadlines.sort_by(f64::total_cmp);
    deadlines.dedup();

    for &candidate in &deadlines {
        let completion = candidate.min(ceiling);
        let start = completion - batch_delay(new_size, model);
        let mut eligible: Vec<(f64, usize)> = state
            .unscheduled
            .iter()
            .filter(|&&k| tasks[k].arrival < start && tasks[k].deadline >= completion)
            .map(|&k| {
                let task = &tasks[k];
                (task.payload_bits / (rates[k] * window(task, start)), k)
            })
            .collect();
        if eligible.len() < pi {
            return Ok(ProbeResult::infeasible());
        }
        eligible.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
        let chosen = &eligible[..pi];

        let member_hz: Vec<f64> = state
            .next_members
            .iter()
            .zip(&residual_bits)
            .map(|(m, bits)| bits / (rates[m.task_id] * window(&tasks[m.task_id], start)))
            .collect();
        let demand: f64 = chosen.iter().map(|c| c.0).sum::<f64>() + member_hz.iter().sum::<f64>();
        let latest_ready = chosen
            .iter()
            .map(|c| tasks[c.1].arrival)
            .fold(member_arrival, f64::max)
            .max(prev_finish);
        let members_ok = member_hz.iter().all(|hz| hz.is_finite() && *hz > 0.0);
        if members_ok && demand <= budget && latest_ready + margin < start {
            return Ok(ProbeResult {
                feasible: true,
                new_start: start,
                admitted: chosen.iter().map(|c| c.1).collect(),
                admitted_hz: chosen.iter().map(|c| c.0).collect(),
                member_hz,
            });
        }
        if candidate >= ceiling {
            // the completion instant no longer moves, so later candidates repeat this test
            break;
        }
    }
    Ok(ProbeResult::infeasible())
}

/// Largest admissible count by bisection over `0..=|unscheduled|`.
pub fn solve_checkpoint(
    scenario: &Scenario,
    state: &Checkpoint,
    next_fixed_start: f64,
    config: &HolesConfig,
) -> Result<ProbeResult, HolesError> {
    let probe = |pi| feasibility_probe(scenario, state, pi, next_fixed_start, config);
    let mut lo = 0;
    let mut hi = state.unscheduled.len();
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if probe(mid)?.feasible {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let top = probe(hi)?;
    if top.feasible {
        Ok(top)
    } else {
        probe(lo)
    }
}

/// Admits unscheduled tasks at every checkpoint of a schedule made of
/// dedicated grants. Returns the input unchanged when nothing fits.
pub fn augment(scenario: &Scenario, schedule: &Schedule, config: &HolesConfig) -> Result<Schedule, HolesError> {
    fill(scenario, schedule, &[], config)
}

/// Admission of tasks that become known at `arrival_clock`, after the
/// schedule was fixed. New tasks receive ids after the existing ones and
/// join the pool at the first checkpoint not earlier than the clock;
/// unscheduled tasks of the original scenario are available from the start.
pub fn admit_online(
    scenario: &Scenario,
    schedule: &Schedule,
    new_tasks: &[Task],
    arrival_clock: f64,
    config: &HolesConfig,
) -> Result<(Scenario, Schedule), HolesError> {
    let mut extended = scenario.clone();
    let mut pending = Vec::with_capacity(new_tasks.len());
    for task in new_tasks {
        if task.arrival < arrival_clock {
            return Err(HolesError::Scenario(ModelError::InvalidTask {
                task: task.id,
                reason: format!("arrival {} precedes the admission clock {arrival_clock}", task.arrival),
            }));
        }
        let id = extended.tasks.len();
        extended.tasks.push(Task { id, ..task.clone() });
        pending.push(id);
    }
    let out = fill(
        &extended,
        schedule,
        &pending.iter().map(|&k| (k, arrival_clock)).collect::<Vec<_>>(),
        config,
    )?;
    Ok((extended, out))
}

/// Batch-level view of a schedule with dedicated grants.
struct Committed {
    /// Indices of non-empty batches in start order.
    order: Vec<usize>,
    members: Vec<Vec<Member>>,
    starts: Vec<f64>,
}

fn committed_view(scenario: &Scenario, schedule: &Schedule) -> Result<Committed, HolesError> {
    let k = scenario.num_tasks();
    let num_batches = schedule.batch_starts.len();
    let mut members: Vec<Vec<Member>> = vec![Vec::new(); num_batches];
    let mut seen = vec![false; k];
    for a in &schedule.assignments {
        if a.task_id >= k || a.batch >= num_batches || seen[a.task_id] {
            return Err(HolesError::Schedule(format!("bad assignment {a:?}")));
        }
        seen[a.task_id] = true;
        let hz = match schedule.grant_of(a.task_id) {
            Some(Grant::Dedicated { hz }) => *hz,
            Some(Grant::Timed { .. }) => return Err(HolesError::NotDedicated(a.task_id)),
            None => return Err(HolesError::Schedule(format!("task {} has no grant", a.task_id))),
        };
        members[a.batch].push(Member { task_id: a.task_id, hz });
    }
    let mut order: Vec<usize> = (0..num_batches).filter(|&n| !members[n].is_empty()).collect();
    order.sort_by(|&x, &y| {
        schedule.batch_starts[x]
            .total_cmp(&schedule.batch_starts[y])
            .then(x.cmp(&y))
    });
    Ok(Committed {
        order,
        members,
        starts: schedule.batch_starts.clone(),
    })
}

fn fill(
    scenario: &Scenario,
    schedule: &Schedule,
    pending: &[(usize, f64)],
    config: &HolesConfig,
) -> Result<Schedule, HolesError> {
    scenario.validate()?;
    let view = committed_view(scenario, schedule)?;
    let order = &view.order;
    let m_count = order.len();
    if m_count < 2 {
        return Ok(schedule.clone());
    }
    let horizon = scenario.big_m();

    let scheduled: BTreeSet<usize> = schedule.assignments.iter().map(|a| a.task_id).collect();
    let pending_ids: BTreeSet<usize> = pending.iter().map(|p| p.0).collect();
    let mut unscheduled: Vec<usize> = (0..scenario.num_tasks())
        .filter(|k| !scheduled.contains(k) && !pending_ids.contains(k))
        .collect();
    let mut waiting: Vec<(usize, f64)> = pending.to_vec();

    let mut adjusted: Vec<f64> = order.iter().map(|&n| view.starts[n]).collect();
    let mut sizes: Vec<usize> = order.iter().map(|&n| view.members[n].len()).collect();
    // per position: admitted tasks with grants, and boosted grants of committed members
    let mut admitted: Vec<Vec<(usize, f64)>> = vec![Vec::new(); m_count];
    let mut boosted: Vec<Option<Vec<f64>>> = vec![None; m_count];
    let mut freed = 0.0;

    for pos in 0..m_count - 1 {
        waiting.retain(|&(k, clock)| {
            if clock <= adjusted[pos] {
                unscheduled.push(k);
                false
            } else {
                true
            }
        });
        unscheduled.sort_unstable();
        freed += view.members[order[pos]].iter().map(|m| m.hz).sum::<f64>();
        if unscheduled.is_empty() {
            continue;
        }
        let state = Checkpoint {
            index: pos,
            current_start: adjusted[pos],
            current_size: sizes[pos],
            unscheduled: unscheduled.clone(),
            next_members: view.members[order[pos + 1]].clone(),
            next_start: view.starts[order[pos + 1]],
            freed_bandwidth: freed,
        };
        let next_fixed = if pos + 2 < m_count {
            view.starts[order[pos + 2]]
        } else {
            horizon
        };
        let result = solve_checkpoint(scenario, &state, next_fixed, config)?;
        if result.admitted.is_empty() {
            continue;
        }
        adjusted[pos + 1] = result.new_start;
        sizes[pos + 1] += result.admitted.len();
        unscheduled.retain(|k| !result.admitted.contains(k));
        admitted[pos + 1] = result
            .admitted
            .iter()
            .copied()
            .zip(result.admitted_hz.iter().copied())
            .collect();
        boosted[pos + 1] = Some(result.member_hz);
    }

    if admitted.iter().all(Vec::is_empty) {
        return Ok(schedule.clone());
    }

    let num_batches = schedule.batch_starts.len();
    let mut batch_starts = vec![f64::NAN; num_batches];
    for (pos, &n) in order.iter().enumerate() {
        batch_starts[n] = adjusted[pos];
    }
    // empty batches take the start of the next non-empty one
    let mut next = horizon;
    let mut by_start: Vec<usize> = (0..num_batches).collect();
    by_start.sort_by(|&x, &y| {
        schedule.batch_starts[x]
            .total_cmp(&schedule.batch_starts[y])
            .then(x.cmp(&y))
    });
    for &n in by_start.iter().rev() {
        if batch_starts[n].is_nan() {
            batch_starts[n] = next;
        } else {
            next = batch_starts[n];
        }
    }

    let tasks = &scenario.tasks;
    let mut out = Schedule {
        batch_starts,
        ..Schedule::default()
    };
    let mut grants: Vec<(usize, Grant)> = Vec::new();
    for (pos, &n) in order.iter().enumerate() {
        let end = adjusted[pos];
        let switch = if pos == 0 { f64::NEG_INFINITY } else { adjusted[pos - 1] };
        for (i, member) in view.members[n].iter().enumerate() {
            let arrival = tasks[member.task_id].arrival;
            let segments = match &boosted[pos] {
                Some(hz) if switch > arrival => vec![
                    Segment {
                        start: arrival,
                        end: switch,
                        hz: member.hz,
                    },
                    Segment {
                        start: switch,
                        end,
                        hz: hz[i],
                    },
                ],
                Some(hz) => vec![Segment {
                    start: arrival,
                    end,
                    hz: hz[i],
                }],
                None => vec![Segment {
                    start: arrival,
                    end: view.starts[n],
                    hz: member.hz,
                }],
            };
            out.assignments.push(Assignment {
                task_id: member.task_id,
                batch: n,
            });
            grants.push((member.task_id, Grant::Timed { segments }));
        }
        for &(k, hz) in &admitted[pos] {
            let start = tasks[k].arrival.max(switch);
            out.assignments.push(Assignment { task_id: k, batch: n });
            grants.push((
                k,
                Grant::Timed {
                    segments: vec![Segment { start, end, hz }],
                },
            ));
        }
    }
    out.assignments.sort_by_key(|a| a.task_id);
    grants.sort_by_key(|g| g.0);
    out.bandwidths = grants
        .into_iter()
        .map(|(task_id, grant)| Allocation { task_id, grant })
        .collect();
    Ok(out)
}
