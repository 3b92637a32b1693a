//! Latest-start backward pass shared by the solver, the oracle and hole filling.

use crate::model::{batch_delay, Scenario};

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct StartTimes {
    pub starts: Vec<f64>,
    pub sizes: Vec<usize>,
    /// Batches whose start does not clear every member's arrival.
    pub flagged: Vec<bool>,
}

impl StartTimes {
    pub fn any_flagged(&self) -> bool {
        self.flagged.iter().any(|&f| f)
    }
}

/// Sets each non-empty batch to start as late as its tightest deadline and
/// its successor allow; empty batches inherit the successor's start.
pub(crate) fn latest_starts(
    scenario: &Scenario,
    assoc: &[Option<usize>],
    num_batches: usize,
    horizon: f64,
    time_margin: f64,
) -> StartTimes {
    let mut sizes = vec![0usize; num_batches];
    let mut tightest = vec![f64::INFINITY; num_batches];
    let mut latest_arrival = vec![f64::NEG_INFINITY; num_batches];
    for (task, batch) in scenario.tasks.iter().zip(assoc) {
        if let Some(n) = *batch {
            sizes[n] += 1;
            tightest[n] = tightest[n].min(task.deadline);
            latest_arrival[n] = latest_arrival[n].max(task.arrival);
        }
    }
    let mut starts = vec![0.0; num_batches];
    let mut next = horizon;
    for n in (0..num_batches).rev() {
        if sizes[n] > 0 {
            next = tightest[n].min(next) - batch_delay(sizes[n], &scenario.delay_model);
        }
        starts[n] = next;
    }
    let flagged = (0..num_batches)
        .map(|n| sizes[n] > 0 && latest_arrival[n] >= starts[n] - time_margin)
        .collect();
    StartTimes { starts, sizes, flagged }
}
