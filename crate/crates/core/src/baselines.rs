//! Reference schedulers: equal bandwidth split, greedy batching and the best single batch.

use crate::holes::{solve_checkpoint, Checkpoint, HolesConfig};
use crate::jbas::{solve_with, Sharing, SolveError, SolverConfig};
use crate::model::{batch_delay, Allocation, Assignment, Grant, Scenario, Schedule, Segment};

/// The joint solver with every task pinned to `B / K`; a task may only join
/// a batch whose start leaves it enough time at that rate.
pub fn equal_bandwidth(scenario: &Scenario, config: &SolverConfig) -> Result<Schedule, SolveError> {
    solve_with(scenario, config, Sharing::EqualSplit)
}

/// Event-driven greedy scheduler.
///
/// Devices upload from arrival with an equal share of the channel among those
/// currently uploading, and give up once their deadline passes. The server
/// starts its first batch when the first upload completes; whenever it turns
/// idle it batches everything fully uploaded and not yet served, or waits for
/// the next upload to finish. Tasks whose batch ends after their deadline are
/// removed from the returned schedule.
pub fn greedy_batching(scenario: &Scenario) -> Result<Schedule, SolveError> {
    scenario.validate()?;
    let uploads = simulate_uploads(scenario);
    let model = &scenario.delay_model;

    let mut ready: Vec<(f64, usize)> = uploads
        .completion
        .iter()
        .enumerate()
        .filter_map(|(k, c)| c.map(|t| (t, k)))
        .collect();
    ready.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));

    let mut schedule = Schedule::empty();
    let mut server_free = f64::NEG_INFINITY;
    let mut next = 0;
    while next < ready.len() {
        let start = server_free.max(ready[next].0);
        let batch = schedule.batch_starts.len();
        let first = next;
        while next < ready.len() && ready[next].0 <= start {
            next += 1;
        }
        // the batch runs with every ready task, including those about to miss their deadline
        let finish = start + batch_delay(next - first, model);
        schedule.batch_starts.push(start);
        for &(_, k) in &ready[first..next] {
            if finish <= scenario.tasks[k].deadline {
                schedule.assignments.push(Assignment { task_id: k, batch });
            }
        }
        server_free = finish;
    }

    schedule.assignments.sort_by_key(|a| a.task_id);
    schedule.bandwidths = schedule
        .assignments
        .iter()
        .map(|a| Allocation {
            task_id: a.task_id,
            grant: Grant::Timed {
                segments: uploads.segments[a.task_id].clone(),
            },
        })
        .collect();
    Ok(schedule)
}

struct Uploads {
    completion: Vec<Option<f64>>,
    segments: Vec<Vec<Segment>>,
}

/// Processor-sharing upload of every task from its arrival.
fn simulate_uploads(scenario: &Scenario) -> Uploads {
    let k_count = scenario.num_tasks();
    let rates = scenario.rates();
    let tasks = &scenario.tasks;
    let mut remaining: Vec<f64> = tasks.iter().map(|t| t.payload_bits).collect();
    let mut completion = vec![None; k_count];
    let mut segments: Vec<Vec<Segment>> = vec![Vec::new(); k_count];

    let mut arrivals: Vec<usize> = (0..k_count).collect();
    arrivals.sort_by(|&x, &y| tasks[x].arrival.total_cmp(&tasks[y].arrival).then(x.cmp(&y)));
    let mut next_arrival = 0;
    let mut active: Vec<usize> = Vec::new();
    let mut now = f64::NEG_INFINITY;

    loop {
        while next_arrival < k_count && tasks[arrivals[next_arrival]].arrival <= now {
            active.push(arrivals[next_arrival]);
            next_arrival += 1;
        }
        if active.is_empty() {
            if next_arrival == k_count {
                break;
            }
            now = tasks[arrivals[next_arrival]].arrival;
            continue;
        }
        let share = scenario.total_bandwidth / active.len() as f64;
        let finish: Vec<f64> = active
            .iter()
            .map(|&k| now + remaining[k] / (rates[k] * share))
            .collect();
        let mut until = if next_arrival < k_count {
            tasks[arrivals[next_arrival]].arrival
        } else {
            f64::INFINITY
        };
        for (&k, &f) in active.iter().zip(&finish) {
            until = until.min(f).min(tasks[k].deadline);
        }

        let mut still = Vec::with_capacity(active.len());
        for (&k, &f) in active.iter().zip(&finish) {
            let done = f <= until;
            let segs = &mut segments[k];
            match segs.last_mut() {
                Some(last) if last.end == now && last.hz == share => last.end = until,
                _ => segs.push(Segment {
                    start: now,
                    end: until,
                    hz: share,
                }),
            }
            if done {
                remaining[k] = 0.0;
                completion[k] = Some(until);
            } else if tasks[k].deadline <= until {
                // too late to be served
            } else {
                remaining[k] -= rates[k] * share * (until - now);
                still.push(k);
            }
        }
        active = still;
        now = until;
    }
    Uploads { completion, segments }
}

/// The best schedule with a single batch over the whole horizon.
pub fn single_batch(scenario: &Scenario) -> Result<Schedule, SolveError> {
    scenario.validate()?;
    if scenario.tasks.is_empty() {
        return Ok(Schedule::empty());
    }
    let state = Checkpoint {
        index: 0,
        current_start: f64::NEG_INFINITY,
        current_size: 0,
        unscheduled: (0..scenario.num_tasks()).collect(),
        next_members: Vec::new(),
        next_start: scenario.big_m(),
        freed_bandwidth: scenario.total_bandwidth,
    };
    let result = solve_checkpoint(scenario, &state, scenario.big_m(), &HolesConfig::default())
        .expect("probe sizes stay within the task count");
    if result.admitted.is_empty() {
        return Ok(Schedule::empty());
    }
    let mut picked: Vec<(usize, f64)> = result.admitted.iter().copied().zip(result.admitted_hz).collect();
    picked.sort_by_key(|p| p.0);
    Ok(Schedule {
        batch_starts: vec![result.new_start],
        assignments: picked
            .iter()
            .map(|&(task_id, _)| Assignment { task_id, batch: 0 })
            .collect(),
        bandwidths: picked
            .iter()
            .map(|&(task_id, hz)| Allocation {
                task_id,
                grant: Grant::Dedicated { hz },
            })
            .collect(),
    })
}
